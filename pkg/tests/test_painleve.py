"""Tests for the scalar Painleve-form recurrences."""
from __future__ import annotations

import dataclasses

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st_
from mpmath import mp

from gapprob.errors import (
    DegenerateParameterization,
    DPSingular,
    IndexOutOfRange,
    InvalidParameter,
    UnsupportedFamily,
)
from gapprob.families import make_family, weight
from gapprob.lax import init_state, run, step_general
from gapprob.oracle import gap_probability_gram, build_ortho_basis
from gapprob.painleve import (
    DPState,
    QCharlierBundle,
    dp_from_lax,
    dp_to_lax,
    dpiv_step,
    dpv_step,
    family_recurrence_init,
    qcharlier_step,
    run_painleve,
    sakai_lambda,
    sakai_parameters,
)
from gapprob.precision import real, rel_diff, tau
from gapprob.qseries import pochhammer

SCALAR_CASES = [
    ("charlier", {"a": 2}, 3),
    ("charlier", {"a": 20}, 6),
    ("meixner", {"beta": 1.5, "c": "0.4"}, 2),
    ("meixner", {"beta": 0.5, "c": "0.9"}, 3),
    ("krawtchouk", {"p": "0.45", "N": 12}, 3),
    ("krawtchouk", {"p": "0.588", "N": 80}, 5),
]

DP_ATTRS = ("fVar", "gVar", "eVar", "hVar", "Dprev", "Dcur")


def close(a, b, tol):
    return abs(a - b) <= tol * max(real(1), abs(a), abs(b))


def advance_scalar(st, f):
    if f.name == "charlier":
        return dpiv_step(st, f.params["a"])
    return dpv_step(st, f)


def test_charlier_init_k1_closed_values():
    for a_in in (1, 5):
        a = real(a_in)
        st = family_recurrence_init(make_family("charlier", {"a": a}), 1)
        assert rel_diff(st.fVar, -a) <= 4 * tau()
        assert rel_diff(st.gVar, a / (1 + a)) <= 16 * tau()
        assert rel_diff(st.eVar, a) <= 4 * tau()
        assert st.hVar == 1
        assert rel_diff(st.Dprev, mp.exp(-a)) <= 16 * tau()
        assert rel_diff(st.Dcur, (1 + a) * mp.exp(-a)) <= 16 * tau()


def test_meixner_krawtchouk_init_f_is_zero():
    me = family_recurrence_init(
        make_family("meixner", {"beta": 1.5, "c": "0.4"}), 2
    )
    kr = family_recurrence_init(
        make_family("krawtchouk", {"p": "0.45", "N": 12}), 3
    )
    assert me.fVar == 0
    assert kr.fVar == 0
    assert me.hVar == mp.factorial(2)
    assert kr.hVar == mp.factorial(3)


@pytest.mark.parametrize("name,params,k", SCALAR_CASES)
def test_init_matches_matrix_route(name, params, k):
    f = make_family(name, params)
    closed = family_recurrence_init(f, k)
    via = dp_from_lax(init_state(f, k), f)
    assert via.k == k
    for attr in DP_ATTRS:
        assert close(getattr(closed, attr), getattr(via, attr), real("1e-70")), attr


@pytest.mark.parametrize("name,params,k", SCALAR_CASES[:4])
def test_e_init_sign_identity(name, params, k):
    # the gauge scalar satisfies C^{11} * e = C^{12} = -A^{12}
    f = make_family(name, params)
    closed = family_recurrence_init(f, k)
    lx = init_state(f, k)
    assert close(lx.c11 * closed.eVar, -lx.q, real("1e-70"))
    assert close(lx.c11 * closed.eVar, lx.c12, real("1e-70"))


def test_qcharlier_init_matches_matrix_route():
    f = make_family("q_charlier", {"a": 20, "q": "0.96"})
    for k in (1, 2, 3, 5):
        b = family_recurrence_init(f, k)
        assert isinstance(b, QCharlierBundle)
        lx = init_state(f, k)
        pairs = [
            (b.p, lx.p), (b.q, lx.q), (b.r, lx.r),
            (b.alpha, lx.c11), (b.beta, lx.c12), (b.gamma, lx.c21),
            (b.delta, lx.c22), (b.h, lx.h),
            (b.Dprev, lx.Dprev), (b.Dcur, lx.Dcur),
        ]
        for got, want in pairs:
            assert close(got, want, real("1e-70"))


@pytest.mark.parametrize("name,params,k", SCALAR_CASES[:5])
def test_round_trip_through_matrix_state(name, params, k):
    f = make_family(name, params)
    lx = init_state(f, k)
    for _ in range(3):
        lx = step_general(lx, f)
    back = dp_to_lax(dp_from_lax(lx, f), f)
    for attr in ("p", "q", "r", "c11", "c12", "c21", "c22", "h", "Dprev", "Dcur"):
        assert close(getattr(lx, attr), getattr(back, attr), real("1e-70")), attr
    assert back.kappa1 == lx.kappa1
    assert close(back.kappa2, lx.kappa2, real("1e-75"))


@pytest.mark.parametrize("name,params,k", SCALAR_CASES)
def test_scalar_steps_track_matrix_engine(name, params, k):
    f = make_family(name, params)
    dst = family_recurrence_init(f, k)
    lst = init_state(f, k)
    for _ in range(8):
        dst = advance_scalar(dst, f)
        lst = step_general(lst, f)
        via = dp_from_lax(lst, f)
        for attr in DP_ATTRS:
            assert close(getattr(dst, attr), getattr(via, attr), real("1e-60")), attr


def test_charlier_step_matches_printed_recurrence():
    a = real(2)
    f = make_family("charlier", {"a": a})
    st = family_recurrence_init(f, 3)
    for _ in range(6):
        s, k = st.s, st.k
        fv, gv, ev, hv = st.fVar, st.gVar, st.eVar, st.hVar
        f1 = a * gv / (fv * (gv - s - 1) * (gv + k - s - 1))
        g1 = a / f1 - (s + 1) / (1 - f1) - gv - k + 2 * s + 3
        e1 = a * ev / (fv * (gv + k - s - 1))
        h1 = fv * (gv - s - 1) * hv / a
        d2 = st.Dcur * (
            st.Dcur / st.Dprev
            + a ** (s - 1) / mp.factorial(s + 1) * fv**2 / ev * (gv - s - 1) * hv**2
        )
        st = dpiv_step(st, a)
        assert close(st.fVar, f1, real("1e-70"))
        assert close(st.gVar, g1, real("1e-70"))
        assert close(st.eVar, e1, real("1e-70"))
        assert close(st.hVar, h1, real("1e-70"))
        assert close(st.Dcur, d2, real("1e-70"))


def test_meixner_step_matches_printed_recurrence():
    bta, c = real("1.5"), real("0.4")
    f = make_family("meixner", {"beta": bta, "c": c})
    st = family_recurrence_init(f, 2)
    for _ in range(6):
        s, k = st.s, st.k
        fv, gv, ev, hv = st.fVar, st.gVar, st.eVar, st.hVar
        f1 = 1 - bta - k - fv + s / (1 + gv) + (bta + s) / (1 + c * gv)
        g1 = (f1 - 1 - s) * (f1 - 1 - s + k) / (
            c * gv * f1 * (f1 + bta + k - 1)
        )
        e1 = (
            -(c * ev * gv / g1)
            * ((1 + g1) * f1 + (bta + k - 1) * g1 - s - 1)
            / ((1 + c * gv) * f1 + k - s - 1)
        )
        h1 = (1 + c * gv) * (s + 1 - f1) / (c * (bta + s) * gv) * hv
        d2 = st.Dcur * (
            st.Dcur / st.Dprev
            + pochhammer(bta, s) / (bta + s)
            * c ** (s - 1) / mp.factorial(s + 1)
            * (1 + c * gv) / (ev * gv**2)
            * ((1 + c * gv) * f1 - s - 1)
            * hv**2
        )
        st = dpv_step(st, f)
        assert close(st.fVar, f1, real("1e-70"))
        assert close(st.gVar, g1, real("1e-70"))
        assert close(st.eVar, e1, real("1e-70"))
        assert close(st.hVar, h1, real("1e-70"))
        assert close(st.Dcur, d2, real("1e-70"))


def test_krawtchouk_step_matches_printed_recurrence():
    p = real("0.45")
    n = 12
    f = make_family("krawtchouk", {"p": p, "N": n})
    st = family_recurrence_init(f, 3)
    for _ in range(6):
        s, k = st.s, st.k
        fv, gv, ev, hv = st.fVar, st.gVar, st.eVar, st.hVar
        f1 = (
            n + 1 - k - fv + s / (1 + gv)
            + (1 - p) * (n - s) / (p - 1 + p * gv)
        )
        g1 = (1 - p) * (f1 - 1 - s) * (f1 - 1 - s + k) / (
            p * gv * f1 * (n + 1 - k - f1)
        )
        e1 = (
            p * ev * gv / ((1 - p) * g1)
            * ((1 + g1) * f1 + (k - n - 1) * g1 - s - 1)
            / ((1 + p * gv / (p - 1)) * f1 + k - s - 1)
        )
        h1 = (p - 1 + p * gv) * (f1 - s - 1) / (p * (n - s) * gv) * hv
        d2 = st.Dcur * (
            st.Dcur / st.Dprev
            + mp.binomial(n, s + 1)
            * p ** (s - 1) * (1 - p) ** (n - s + 1) / (n - s) ** 2
            * (1 + p * gv / (p - 1)) / (ev * gv**2)
            * ((1 + p * gv / (p - 1)) * f1 - s - 1)
            * hv**2
        )
        st = dpv_step(st, f)
        assert close(st.fVar, f1, real("1e-70"))
        assert close(st.gVar, g1, real("1e-70"))
        assert close(st.eVar, e1, real("1e-70"))
        assert close(st.hVar, h1, real("1e-70"))
        assert close(st.Dcur, d2, real("1e-70"))


def test_qcharlier_bundle_tracks_matrix_engine():
    f = make_family("q_charlier", {"a": 20, "q": "0.96"})
    qv = f.params["q"]
    b = family_recurrence_init(f, 2)
    lx = init_state(f, 2)
    for _ in range(10):
        gamma_step = qv ** (b.k - 1) * b.r
        prev_gamma = b.gamma
        b = qcharlier_step(b)
        lx = step_general(lx, f)
        assert close(b.gamma, prev_gamma + gamma_step, real("1e-74"))
        pairs = [
            (b.p, lx.p), (b.q, lx.q), (b.r, lx.r),
            (b.alpha, lx.c11), (b.beta, lx.c12), (b.gamma, lx.c21),
            (b.h, lx.h), (b.Dcur, lx.Dcur),
        ]
        for got, want in pairs:
            assert close(got, want, real("1e-50"))


def test_qcharlier_delta_constant():
    f = make_family("q_charlier", {"a": 20, "q": "0.96"})
    b = family_recurrence_init(f, 3)
    d0 = b.delta
    for _ in range(6):
        b = qcharlier_step(b)
    assert b.delta == d0


@pytest.mark.parametrize(
    "name,params,k",
    [
        ("charlier", {"a": 2}, 2),
        ("meixner", {"beta": 1.5, "c": "0.4"}, 2),
        ("krawtchouk", {"p": "0.45", "N": 12}, 2),
        ("q_charlier", {"a": 20, "q": "0.96"}, 2),
    ],
)
def test_run_painleve_matches_gram_oracle(name, params, k):
    f = make_family(name, params)
    s_max = k + 6
    table = run_painleve(f, k, s_max)
    basis = build_ortho_basis(f, k - 1)
    for row in table.rows:
        want = gap_probability_gram(basis, k, row.s)
        assert rel_diff(row.D, want) <= real("1e-30")


@pytest.mark.parametrize(
    "name,params,k",
    [
        ("charlier", {"a": 20}, 4),
        ("meixner", {"beta": 0.5, "c": "0.9"}, 3),
        ("krawtchouk", {"p": "0.588", "N": 80}, 4),
        ("q_charlier", {"a": 20, "q": "0.96"}, 4),
        ("little_q_laguerre", {"a": 0.5, "q": "0.9"}, 3),
        ("alternative_q_charlier", {"a": 20, "q": "0.96"}, 3),
        ("little_q_jacobi", {"a": 0.5, "b": 1.5, "q": "0.9"}, 4),
        ("q_krawtchouk", {"p": "0.7", "N": 20, "q": "0.9"}, 3),
    ],
)
def test_run_painleve_matches_general_run(name, params, k):
    f = make_family(name, params)
    s_max = k + 12
    if f.lattice.N is not None:
        s_max = min(s_max, f.lattice.N + 1)
    tp = run_painleve(f, k, s_max)
    tg = run(f, k, s_max)
    assert tp.method == "painleve"
    assert tg.method == "general"
    assert len(tp.rows) == len(tg.rows)
    for rp, rg in zip(tp.rows, tg.rows):
        assert rp.s == rg.s
        assert rel_diff(rp.D, rg.D) <= real("1e-30")
        assert close(rp.density, rg.density, real("1e-28"))


def test_run_painleve_charlier_known_values():
    f = make_family("charlier", {"a": 1})
    table = run_painleve(f, 1, 3)
    want = [mp.e**-1, 2 * mp.e**-1, real("2.5") * mp.e**-1]
    for row, w in zip(table.rows, want):
        assert rel_diff(row.D, w) <= real("1e-70")


def test_run_painleve_single_row_and_finite_edge():
    f = make_family("charlier", {"a": 6})
    table = run_painleve(f, 2, 2)
    assert len(table.rows) == 1
    assert rel_diff(table.rows[0].D, mp.exp(-12)) <= real("1e-70")
    kr = make_family("krawtchouk", {"p": "0.45", "N": 12})
    table = run_painleve(kr, 3, 13)
    assert table.rows[-1].s == 13
    assert table.rows[-1].D == 1
    assert table.rows[-1].density == 0


def test_run_painleve_rejects_bad_bounds():
    f = make_family("krawtchouk", {"p": "0.45", "N": 12})
    with pytest.raises(InvalidParameter):
        run_painleve(f, 3, 2)
    with pytest.raises(IndexOutOfRange):
        run_painleve(f, 3, 14)
    with pytest.raises(UnsupportedFamily):
        run_painleve(make_family("hahn", {"alpha": 1, "beta": 1, "N": 10}), 2, 5)


def test_family_recurrence_init_rejects_other_families():
    f = make_family("little_q_jacobi", {"a": 0.5, "b": 0.5, "q": "0.9"})
    with pytest.raises(UnsupportedFamily):
        family_recurrence_init(f, 2)


def test_dpv_step_rejects_constant_d2():
    f = make_family("charlier", {"a": 2})
    st = family_recurrence_init(f, 2)
    with pytest.raises(UnsupportedFamily):
        dpv_step(st, f)


def test_dp_from_lax_rejects_geometric_lattice():
    f = make_family("q_charlier", {"a": 20, "q": "0.96"})
    with pytest.raises(UnsupportedFamily):
        dp_from_lax(init_state(f, 2), f)


def test_degenerate_parameterization_raised():
    f = make_family("charlier", {"a": 2})
    lx = init_state(f, 2)
    broken = dataclasses.replace(lx, c11=real(0))
    with pytest.raises(DegenerateParameterization):
        dp_from_lax(broken, f)


def test_dp_singular_names_expression():
    f = make_family("charlier", {"a": 2})
    st = family_recurrence_init(f, 2)
    broken = dataclasses.replace(st, fVar=real(0))
    with pytest.raises(DPSingular, match="f_s"):
        dpiv_step(broken, f.params["a"])
    broken = dataclasses.replace(st, gVar=real(st.s + 1))
    with pytest.raises(DPSingular, match="g_s - s - 1"):
        dpiv_step(broken, f.params["a"])


def test_sakai_parameters_and_lambda():
    ch = make_family("charlier", {"a": 2})
    st = family_recurrence_init(ch, 3)
    assert len(sakai_parameters(st, ch)) == 4
    me = make_family("meixner", {"beta": 1.5, "c": "0.25"})
    sm = family_recurrence_init(me, 2)
    assert len(sakai_parameters(sm, me)) == 5
    for _ in range(4):
        assert sakai_lambda(st, ch) == 1
        assert sakai_lambda(sm, me) == 1
        st = dpiv_step(st, ch.params["a"])
        sm = dpv_step(sm, me)
    kr = make_family("krawtchouk", {"p": "0.37", "N": 15})
    sk = family_recurrence_init(kr, 2)
    assert abs(sakai_lambda(sk, kr) - 1) <= 8 * tau()


@settings(max_examples=40, deadline=None)
@given(
    fv=st_.floats(min_value=-8, max_value=8),
    gv=st_.floats(min_value=-8, max_value=8),
    ev=st_.floats(min_value=-8, max_value=8),
    k=st_.integers(min_value=1, max_value=5),
    s=st_.integers(min_value=1, max_value=12),
)
def test_scalar_matrix_scalar_round_trip(fv, gv, ev, k, s):
    f = make_family("meixner", {"beta": 1.5, "c": "0.4"})
    assume(abs(ev) > 1e-3 and abs(gv) > 1e-3)
    assume(abs(1 + gv) > 1e-3)
    st = DPState(
        s=max(s, k), k=k, fVar=real(fv), gVar=real(gv), eVar=real(ev),
        hVar=real(1), Dprev=real("0.5"), Dcur=real("0.5"),
    )
    try:
        lx = dp_to_lax(st, f)
        back = dp_from_lax(lx, f)
    except DegenerateParameterization:
        return
    for attr in ("fVar", "gVar", "eVar"):
        assert close(getattr(st, attr), getattr(back, attr), real("1e-60"))
    assert back.k == st.k
    assert back.s == st.s


def test_density_and_weight_agree_on_scalar_route():
    f = make_family("charlier", {"a": 20})
    table = run_painleve(f, 6, 60)
    total = mp.fsum(row.density for row in table.rows)
    assert total <= 1 + tau()
    assert all(row.density >= -tau() for row in table.rows)
    spot = weight(f, 0)
    assert spot > 0
