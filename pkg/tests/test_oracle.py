"""Tests for the oracle module: bases, kernels, gap probabilities, pole data."""
from __future__ import annotations

import random

import pytest
from mpmath import mp

from gapprob.errors import (
    IndexOutOfRange,
    PoleHit,
    ResidueViolation,
    TooLarge,
    UnsupportedFamily,
)
from gapprob.families import make_family, weight
from gapprob.oracle import (
    build_ortho_basis,
    cd_kernel,
    cd_kernel_sum_form,
    charlier_difference_check,
    compute_Ak,
    compute_Mk_linear,
    compute_mk,
    compute_mk_with_derivative,
    drhp_lax_advance,
    extract_A_from_residues,
    gap_probability_enumeration,
    gap_probability_gram,
    initial_drhp_solution,
)
from gapprob.precision import (
    Mat2,
    mat2_inv,
    mat2_mul,
    real,
    rel_diff,
    tau,
)

RNG = random.Random(20240814)


def rand_zeta(lo=-3.0, hi=8.0):
    return real(RNG.uniform(lo, hi))


def charlier(a):
    return make_family("charlier", {"a": a})


def test_p0_is_one():
    b = build_ortho_basis(charlier(2), 3)
    assert b.polys[0].coeffs == (real(1),)


def test_all_monic():
    b = build_ortho_basis(make_family("q_charlier", {"a": 3, "q": "0.8"}), 5)
    for n, p in enumerate(b.polys):
        assert p.degree == n
        assert p.coeffs[-1] == 1


def test_charlier_p1():
    a = real(2)
    b = build_ortho_basis(charlier(a), 2)
    p1 = b.polys[1]
    assert p1.degree == 1
    assert rel_diff(p1.coeffs[0], -a) <= real("1e-70")


def test_charlier_norms_closed_form():
    a = real(2)
    b = build_ortho_basis(charlier(a), 5)
    for n in range(6):
        expected = a**n * mp.e**a * mp.factorial(n)
        assert rel_diff(b.norms[n], expected) <= real("1e-70")


def test_orthogonality_residuals():
    f = make_family("meixner", {"beta": 1.5, "c": "0.4"})
    b = build_ortho_basis(f, 4)
    n_pts = b.x_cut + 1
    for m in range(5):
        for n in range(m):
            dot = mp.fsum(
                b.values[m][x] * b.values[n][x] * b.weights[x]
                for x in range(n_pts)
            )
            assert abs(dot) <= tau() * mp.sqrt(b.norms[m] * b.norms[n])


@pytest.mark.parametrize(
    "name,params",
    [
        ("charlier", {"a": 2}),
        ("krawtchouk", {"p": "0.3", "N": 15}),
        ("little_q_laguerre", {"a": 0.5, "q": "0.9"}),
    ],
)
def test_zeros_inside_support(name, params):
    f = make_family(name, params)
    b = build_ortho_basis(f, 5)
    pts = b.points
    lo, hi = min(pts), max(pts)
    for n in range(1, 6):
        roots = mp.polyroots(list(reversed(b.polys[n].coeffs)), maxsteps=200)
        for r in roots:
            assert abs(mp.im(r)) <= real("1e-40")
            assert lo < mp.re(r) < hi


def test_basis_needs_enough_points():
    f = make_family("krawtchouk", {"p": 0.5, "N": 3})
    with pytest.raises(IndexOutOfRange):
        build_ortho_basis(f, 4)


def test_kernel_k1_charlier_diagonal():
    a = real(2)
    b = build_ortho_basis(charlier(a), 1)
    assert rel_diff(cd_kernel(b, 1, 0, 0), mp.e**-a) <= real("1e-70")


def test_kernel_symmetry_and_sum_form():
    f = make_family("krawtchouk", {"p": "0.4", "N": 12})
    b = build_ortho_basis(f, 3)
    for x, y in [(0, 5), (2, 7), (11, 3), (4, 4), (0, 0)]:
        k_xy = cd_kernel(b, 3, x, y)
        assert rel_diff(k_xy, cd_kernel(b, 3, y, x)) <= real("1e-60")
        assert abs(k_xy - cd_kernel_sum_form(b, 3, x, y)) <= real("1e-60") * (
            1 + abs(k_xy)
        )


@pytest.mark.parametrize(
    "name,params,k",
    [("charlier", {"a": 2}, 3), ("krawtchouk", {"p": "0.35", "N": 20}, 2)],
)
def test_kernel_trace_is_k(name, params, k):
    f = make_family(name, params)
    b = build_ortho_basis(f, k)
    trace = mp.fsum(cd_kernel(b, k, x, x) for x in range(b.x_cut + 1))
    assert rel_diff(trace, real(k)) <= real("1e-65")


def test_gram_full_set_is_one():
    f = make_family("krawtchouk", {"p": "0.3", "N": 10})
    b = build_ortho_basis(f, 3)
    assert rel_diff(gap_probability_gram(b, 3, 11), real(1)) <= real("1e-70")


def test_gram_charlier_at_s_equals_k():
    for a, k in [(real("0.5"), 2), (real(2), 3), (real(20), 4)]:
        b = build_ortho_basis(charlier(a), k)
        assert rel_diff(
            gap_probability_gram(b, k, k), mp.e ** (-a * k)
        ) <= real("1e-60")


def test_gram_k1_charlier_partial_sums():
    a = real(2)
    b = build_ortho_basis(charlier(a), 1)
    partial = real(0)
    for s in range(1, 30):
        partial += a ** (s - 1) / mp.factorial(s - 1)
        expected = mp.e**-a * partial
        assert rel_diff(gap_probability_gram(b, 1, s), expected) <= real("1e-65")


def test_gram_conventions_and_monotonicity():
    b = build_ortho_basis(charlier(real(2)), 2)
    assert gap_probability_gram(b, 2, 0) == 0
    assert gap_probability_gram(b, 2, 1) == 0
    prev = real(0)
    for s in range(2, 40):
        d = gap_probability_gram(b, 2, s)
        assert 0 < d <= 1 + tau()
        assert d >= prev - tau()
        prev = d
    assert rel_diff(prev, real(1)) <= real("1e-30")


def test_enumeration_matches_gram_charlier():
    f = charlier(real(2))
    b = build_ortho_basis(f, 2)
    for s in range(2, 9):
        e = gap_probability_enumeration(f, 2, s)
        g = gap_probability_gram(b, 2, s)
        assert rel_diff(e, g) <= real("1e-60")


def test_enumeration_matches_gram_little_q_jacobi_signed():
    f = make_family("little_q_jacobi", {"a": 0.5, "b": 1.5, "q": "0.9"})
    b = build_ortho_basis(f, 2)
    for s in range(2, 11):
        e = gap_probability_enumeration(f, 2, s)
        g = gap_probability_gram(b, 2, s)
        assert rel_diff(e, g) <= real("1e-40")


def test_enumeration_k1_is_weight_fraction():
    f = make_family("krawtchouk", {"p": "0.3", "N": 9})
    total = mp.fsum(weight(f, x) for x in range(10))
    for s in range(1, 11):
        part = mp.fsum(weight(f, x) for x in range(s))
        assert rel_diff(
            gap_probability_enumeration(f, 1, s), part / total
        ) <= real("1e-70")


def test_enumeration_guard():
    with pytest.raises(TooLarge):
        gap_probability_enumeration(charlier(real(1)), 8, 60)


def test_mk_k1_charlier():
    f = charlier(real(2))
    z = real("2.5")
    m = compute_mk(f, 1, z)
    assert m.a11 == z
    assert m.a12 == 0
    assert rel_diff(m.a21, real(1)) <= tau()
    assert rel_diff(m.a22, 1 / z) <= tau()


@pytest.mark.parametrize(
    "name,params,k",
    [
        ("charlier", {"a": 2}, 3),
        ("meixner", {"beta": 1.5, "c": "0.4"}, 2),
        ("q_charlier", {"a": 3, "q": "0.8"}, 4),
        ("little_q_jacobi", {"a": 0.5, "b": 1.5, "q": "0.9"}, 3),
    ],
)
def test_mk_unimodular(name, params, k):
    f = make_family(name, params)
    for _ in range(10):
        z = rand_zeta(3.0, 9.0)
        m = compute_mk(f, k, z)
        assert abs(m.det() - 1) <= 64 * tau() * max(m.norm(), 1) ** 2


def test_mk_asymptotics():
    f = charlier(real(2))
    z = real(10) ** 6
    m = compute_mk(f, 3, z)
    scaled = Mat2(m.a11 * z**-3, m.a12 * z**3, m.a21 * z**-3, m.a22 * z**3)
    for got, want in [
        (scaled.a11, real(1)),
        (scaled.a12, real(0)),
        (scaled.a21, real(0)),
        (scaled.a22, real(1)),
    ]:
        assert abs(got - want) <= real("1e-4")


def test_mk_pole_hit():
    f = charlier(real(2))
    with pytest.raises(PoleHit):
        compute_mk(f, 2, real(1))


def test_ak_k1_charlier():
    a = real(2)
    m = compute_Ak(charlier(a), 1)
    assert rel_diff(m.a12, a / (1 + a)) <= 8 * tau()
    assert rel_diff(m.a11, -a / (1 + a)) <= 8 * tau()
    assert rel_diff(m.a21, -a / (1 + a)) <= 8 * tau()
    assert m.a22 == -m.a11


@pytest.mark.parametrize(
    "name,params,k",
    [
        ("charlier", {"a": 2}, 1),
        ("charlier", {"a": 20}, 4),
        ("meixner", {"beta": 1.5, "c": "0.4"}, 3),
        ("krawtchouk", {"p": "0.3", "N": 15}, 2),
        ("q_charlier", {"a": 3, "q": "0.8"}, 2),
        ("little_q_jacobi", {"a": 0.5, "b": 1.5, "q": "0.9"}, 2),
        ("q_krawtchouk", {"p": "0.7", "N": 20, "q": "0.9"}, 3),
        ("hahn", {"alpha": 1.5, "beta": 2.5, "N": 12}, 2),
    ],
)
def test_ak_nilpotent_and_matches_residue_extraction(name, params, k):
    f = make_family(name, params)
    a = compute_Ak(f, k)
    sq = mat2_mul(a, a)
    assert sq.norm() <= 64 * tau() * a.norm() ** 2
    extracted = extract_A_from_residues(initial_drhp_solution(f, k))
    for got, want in [
        (extracted.a11, a.a11),
        (extracted.a12, a.a12),
        (extracted.a21, a.a21),
        (extracted.a22, a.a22),
    ]:
        assert abs(got - want) <= 64 * tau() * max(a.norm(), 1)


def test_Mk_charlier_leading():
    lam, c = compute_Mk_linear(charlier(real(2)), 3)
    assert lam.a11 == 1
    assert lam.a12 == 0
    assert lam.a21 == 0
    assert lam.a22 == 0
    assert c.a12 != 0


@pytest.mark.parametrize(
    "name,params,k",
    [
        ("charlier", {"a": 2}, 2),
        ("meixner", {"beta": 1.5, "c": "0.4"}, 3),
        ("krawtchouk", {"p": "0.3", "N": 15}, 2),
        ("q_charlier", {"a": 3, "q": "0.8"}, 2),
        ("little_q_jacobi", {"a": 0.5, "b": 1.5, "q": "0.9"}, 2),
        ("little_q_laguerre", {"a": 0.5, "q": "0.9"}, 3),
        ("alternative_q_charlier", {"a": 2, "q": "0.8"}, 2),
        ("q_krawtchouk", {"p": "0.7", "N": 20, "q": "0.9"}, 2),
    ],
)
def test_Mk_determinant_is_d1_d2(name, params, k):
    f = make_family(name, params)
    lam, c = compute_Mk_linear(f, k)
    for _ in range(5):
        z = rand_zeta()
        m = Mat2(
            lam.a11 * z + c.a11,
            lam.a12 * z + c.a12,
            lam.a21 * z + c.a21,
            lam.a22 * z + c.a22,
        )
        want = f.d1(z) * f.d2(z)
        assert abs(m.det() - want) <= 64 * tau() * max(1, m.norm()) ** 2


def test_Mk_from_lax_pair_definition():
    for name, params, k in [
        ("charlier", {"a": 2}, 2),
        ("q_charlier", {"a": 3, "q": "0.8"}, 3),
        ("little_q_laguerre", {"a": 0.5, "q": "0.9"}, 2),
    ]:
        f = make_family(name, params)
        lam, c = compute_Mk_linear(f, k)
        a_k = compute_Ak(f, k)
        sol1 = drhp_lax_advance(initial_drhp_solution(f, k), a_k)
        for _ in range(3):
            z = rand_zeta(4.0, 9.0)
            mk_sigma = compute_mk(f, k, f.lattice.sigma(z))
            d_mat = Mat2(f.d1(z), real(0), real(0), f.d2(z))
            mk1_inv = mat2_inv(sol1.eval(z))
            direct = mat2_mul(mat2_mul(mk_sigma, d_mat), mk1_inv)
            linear = Mat2(
                lam.a11 * z + c.a11,
                lam.a12 * z + c.a12,
                lam.a21 * z + c.a21,
                lam.a22 * z + c.a22,
            )
            diff = max(
                abs(direct.a11 - linear.a11),
                abs(direct.a12 - linear.a12),
                abs(direct.a21 - linear.a21),
                abs(direct.a22 - linear.a22),
            )
            assert diff <= real("1e-60") * max(1, linear.norm())


def test_Mk_trace_identities_linear_lattice():
    for name, params, k in [
        ("charlier", {"a": 2}, 2),
        ("meixner", {"beta": 1.5, "c": "0.4"}, 3),
        ("krawtchouk", {"p": "0.3", "N": 15}, 4),
    ]:
        f = make_family(name, params)
        _, c = compute_Mk_linear(f, k)
        a = compute_Ak(f, k)
        assert abs(c.a11 + a.a11 + k) <= real("1e-60") * (1 + abs(c.a11))
        xi = f.d2.coeffs[1] if f.d2.degree >= 1 else real(0)
        tau_d2 = f.d2.coeffs[0]
        lhs = c.a22 - xi * a.a11
        rhs = xi * k + tau_d2
        assert abs(lhs - rhs) <= real("1e-60") * (1 + abs(rhs))


def test_Mk_unsupported():
    f = make_family("hahn", {"alpha": 1.5, "beta": 2.5, "N": 10})
    with pytest.raises(UnsupportedFamily):
        compute_Mk_linear(f, 2)


def test_advance_chain_preserves_det_and_asymptotics():
    f = charlier(real(2))
    k = 2
    sol = initial_drhp_solution(f, k)
    for _ in range(4):
        sol = drhp_lax_advance(sol, extract_A_from_residues(sol))
    z = rand_zeta(6.0, 9.0)
    m = sol.eval(z)
    assert abs(m.det() - 1) <= 64 * tau() * max(m.norm(), 1) ** 2
    zbig = real(10) ** 6
    mbig = sol.eval(zbig)
    assert abs(mbig.a11 * zbig**-k - 1) <= real("1e-4")
    assert abs(mbig.a22 * zbig**k - 1) <= real("1e-4")


def test_advance_rejects_wrong_matrix():
    f = charlier(real(2))
    sol = initial_drhp_solution(f, 2)
    a = compute_Ak(f, 2)
    bad = Mat2(a.a11 + real("1e-3"), a.a12, a.a21, -(a.a11 + real("1e-3")))
    with pytest.raises(ResidueViolation):
        drhp_lax_advance(sol, bad)


def test_advance_rejects_non_nilpotent():
    f = charlier(real(2))
    sol = initial_drhp_solution(f, 2)
    with pytest.raises(ResidueViolation):
        drhp_lax_advance(sol, Mat2(real(1), real(0), real(0), real(1)))


@pytest.mark.parametrize(
    "name,params,k",
    [
        ("charlier", {"a": 2}, 2),
        ("q_charlier", {"a": 3, "q": "0.8"}, 2),
        ("little_q_jacobi", {"a": 0.5, "b": 1.5, "q": "0.9"}, 2),
    ],
)
def test_m11_matches_truncated_orthogonal_polynomial(name, params, k):
    f = make_family(name, params)
    sol = initial_drhp_solution(f, k)
    for step in range(5):
        s = k + step
        if s > k:
            b = build_ortho_basis(f, k, x_limit=s)
            pi_s = f.point(s)
            got = sol.eval(pi_s).a11
            want = b.polys[k](pi_s)
            assert abs(got - want) <= real("1e-60") * max(1, abs(want))
        sol = drhp_lax_advance(sol, extract_A_from_residues(sol))


def test_dk1_links_ak_and_gram():
    for name, params, k in [
        ("charlier", {"a": 2}, 3),
        ("little_q_laguerre", {"a": 0.5, "q": "0.9"}, 2),
    ]:
        f = make_family(name, params)
        b = build_ortho_basis(f, k)
        a = compute_Ak(f, k)
        d_k = gap_probability_gram(b, k, k)
        prod = mp.fprod(
            (f.point(k) - f.point(l)) ** 2 for l in range(k)
        )
        d_k1 = weight(f, k) / a.a12 * d_k * prod
        assert rel_diff(d_k1, gap_probability_gram(b, k, k + 1)) <= real("1e-55")


def test_charlier_difference_equation():
    samples = [rand_zeta() for _ in range(20)]
    for a in [real(1), real(20)]:
        for k in range(0, 9):
            assert charlier_difference_check(a, k, samples)


def test_charlier_difference_violated_by_perturbation():
    a = real(2)
    k = 3
    f = charlier(a)
    b = build_ortho_basis(f, k)
    coeffs = list(b.polys[k].coeffs)
    coeffs[1] += real("1e-6")
    from gapprob.precision import Poly

    bad = Poly.of(coeffs)
    z = real("1.375")
    lhs = -k * bad(z)
    rhs = a * bad(z + 1) - (z + a) * bad(z) + z * bad(z - 1)
    assert abs(lhs - rhs) > real("1e-9")
