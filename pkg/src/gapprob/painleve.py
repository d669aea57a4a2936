"""Closed scalar recurrences of discrete Painleve type for gap probabilities.

On the linear lattice pi_x = x with d1(zeta) = zeta and d2(zeta) =
xi*zeta + tau, the 2x2 matrix recurrence collapses: the residue matrix A_s
and the constant matrix C_s are determined by two scalars (f_s, g_s) plus a
gauge factor e_s, and (f_s, g_s) satisfy a discrete Painleve equation.
For xi != 0 (Meixner, Krawtchouk) the pair obeys dPV; for xi = 0 (Charlier)
it obeys dPIV. Together with the corner value h_s = m_s^{11}(pi_s) the
scalars drive D_{s+1} -> D_{s+2} through the same Fredholm-ratio identity
as the matrix engine.

The q-Charlier family also closes scalarly, but on its geometric lattice the
natural variables stay the matrix entries themselves: kappa2 = 0 freezes two
of the four constant-matrix updates, leaving a seven-sequence bundle
(p, q, r, alpha, beta, gamma, h) with simple one-step maps.

Every recurrence here is an independent route to the same numbers produced
by lax.run and by the determinant oracle; run_painleve assembles the result
in the shared GapTable shape. Recurrence families without a printed scalar
reduction (little q-Laguerre, alternative q-Charlier, little q-Jacobi,
q-Krawtchouk) fall back to the general matrix stepping inside run_painleve.
"""

from __future__ import annotations

from dataclasses import dataclass

from mpmath import mp

from .errors import (
    DegenerateParameterization,
    DPSingular,
    EpsilonSingular,
    IndexOutOfRange,
    InvalidParameter,
    UnsupportedFamily,
)
from .families import FamilySpec, LatticeKind, weight
from .lax import (
    GapTable,
    LaxState,
    _assemble_table,
    _check_k,
    _project_nilpotent,
    init_state,
    step_general,
)
from .precision import Real, real, tau
from .qseries import hyp_f, hyp_phi, pochhammer, q_pochhammer, q_pochhammer_inf

__all__ = [
    "DPState",
    "QCharlierBundle",
    "dp_from_lax",
    "dp_to_lax",
    "dpiv_step",
    "dpv_step",
    "family_recurrence_init",
    "qcharlier_step",
    "run_painleve",
    "sakai_parameters",
    "sakai_lambda",
]

SCALAR_FAMILIES = ("charlier", "meixner", "krawtchouk", "q_charlier")


@dataclass(frozen=True)
class DPState:
    """Scalar recurrence state at index s on the linear lattice.

    fVar and gVar are the discrete Painleve variables, eVar is the gauge
    scalar beta_s with C_s^{12} = C_s^{11} * beta_s, hVar is the corner
    value m_s^{11}(pi_s), and Dprev/Dcur hold D_s and D_{s+1}. k is the
    left edge of the gap; it enters every step map.
    """

    s: int
    k: int
    fVar: Real
    gVar: Real
    eVar: Real
    hVar: Real
    Dprev: Real
    Dcur: Real


@dataclass(frozen=True)
class QCharlierBundle:
    """Scalar bundle for the q-Charlier recurrence at index s.

    (p, q, r) are the residue-matrix entries, (alpha, beta, gamma) the
    three moving entries of the constant matrix (its 22-entry stays fixed
    at a * qbase**(-k)), h is m_s^{11}(pi_s), and Dprev/Dcur hold D_s and
    D_{s+1}. aParam and qbase are the family parameters, carried so a step
    needs no separate family argument.
    """

    s: int
    k: int
    p: Real
    q: Real
    r: Real
    alpha: Real
    beta: Real
    gamma: Real
    h: Real
    Dprev: Real
    Dcur: Real
    aParam: Real
    qbase: Real

    @property
    def delta(self) -> Real:
        return self.aParam * self.qbase ** (-self.k)


def _xi_tau(f: FamilySpec) -> tuple[Real, Real]:
    """The d2 coefficients (xi, tau) for a linear-lattice family with d1 = zeta."""
    if f.lattice.kind is not LatticeKind.LINEAR:
        raise UnsupportedFamily(
            f"family {f.name!r} does not live on the linear lattice"
        )
    if f.d1.degree != 1 or f.d1.coeffs[0] != 0 or f.d1.coeffs[1] != 1:
        raise UnsupportedFamily(
            f"family {f.name!r} does not have d1(zeta) = zeta"
        )
    tau_ = f.d2.coeffs[0] if f.d2.degree >= 0 else real(0)
    xi = f.d2.coeffs[1] if f.d2.degree >= 1 else real(0)
    return xi, tau_


def _guard(value: Real, what: str, s: int) -> Real:
    if abs(value) <= tau():
        raise DPSingular(f"{what} vanishes at s={s}", step=s)
    return value


def _nonzero(value: Real, what: str, s: int) -> Real:
    """Divisor check for bundle entries that decay geometrically.

    The q-Charlier bundle entries shrink at family dependent geometric
    rates while keeping full relative precision, so a magnitude test
    against tau() would reject healthy states; only an exact zero makes
    the division singular.
    """
    if value == 0:
        raise DPSingular(f"{what} is exactly zero at s={s}", step=s)
    return value


def _param_guard(value: Real, what: str, s: int) -> Real:
    if abs(value) <= tau():
        raise DegenerateParameterization(f"{what} vanishes at s={s}", step=s)
    return value


def dp_from_lax(st: LaxState, f: FamilySpec) -> DPState:
    """Collapse a matrix recurrence state to scalar Painleve variables.

    Uses the rank-one structure A_s = (k + b_s) [[-1, -alpha beta],
    [1/(alpha beta), 1]], C_s = [[b_s, b_s beta_s], [(tau - xi b_s)/beta_s,
    tau - xi b_s]] with b_s = C_s^{11} and k = -(A_s^{11} + C_s^{11}).
    """
    xi, tau_ = _xi_tau(f)
    s = st.s
    k = int(mp.nint(-(st.p + st.c11)))
    if k < 1:
        raise DegenerateParameterization(
            f"trace identity gives nonpositive k={k} at s={s}", step=s
        )
    b = _param_guard(st.c11, "C^{11}", s)
    _param_guard(st.p, "A^{11}", s)
    beta = _param_guard(st.c12 / b, "beta = C^{12}/C^{11}", s)
    alpha = _param_guard(st.q / (st.p * beta), "alpha", s)
    if xi == 0:
        fv = 1 / alpha
        gv = tau_ * alpha + b + s + 1
    else:
        one_minus = _param_guard(1 - alpha, "1 - alpha", s)
        fv = -k - b + s / one_minus
        gv = -alpha
    return DPState(
        s=s, k=k, fVar=fv, gVar=gv, eVar=beta, hVar=st.h,
        Dprev=st.Dprev, Dcur=st.Dcur,
    )


def _alpha_b(st: DPState, xi: Real, tau_: Real) -> tuple[Real, Real]:
    """Recover the parameterization scalars (alpha, b) from (f, g)."""
    s, k = st.s, st.k
    if xi == 0:
        fv = _param_guard(st.fVar, "f", s)
        alpha = 1 / fv
        b = st.gVar - s - 1 - tau_ / fv
    else:
        alpha = -st.gVar
        one_minus = _param_guard(1 + st.gVar, "1 + g", s)
        b = -k - st.fVar + s / one_minus
    return alpha, b


def dp_to_lax(st: DPState, f: FamilySpec) -> LaxState:
    """Rebuild the full matrix recurrence state from scalar variables."""
    xi, tau_ = _xi_tau(f)
    s, k = st.s, st.k
    alpha, b = _alpha_b(st, xi, tau_)
    beta = _param_guard(st.eVar, "e", s)
    _param_guard(alpha, "alpha", s)
    kb = k + b
    ab = alpha * beta
    return LaxState(
        s=s,
        p=-kb,
        q=-kb * ab,
        r=kb / ab,
        c11=b,
        c12=b * beta,
        c21=(tau_ - xi * b) / beta,
        c22=tau_ - xi * b,
        kappa1=real(1),
        kappa2=xi,
        h=st.hVar,
        Dprev=st.Dprev,
        Dcur=st.Dcur,
    )


def _dp_fredholm(st: DPState, xi: Real, tau_: Real, w_s: Real) -> Real:
    """D_{s+2} from the Fredholm-ratio identity in scalar variables.

    The identity reads D_{s+2}/D_{s+1} - D_{s+1}/D_s =
    w(s) u_s h_s^2 / (d1(s+1) d2(s+1)) with d1(s+1) = s+1 and
    d2(s+1) = xi (s+1) + tau, where u_s collapses to the parameterization
    scalars; for xi = 0 it reduces to (f^2/e)(g - s - 1).
    """
    s = st.s
    ev = _guard(st.eVar, "e_s", s)
    if xi == 0:
        u = st.fVar**2 / ev * (st.gVar - s - 1)
    else:
        alpha, b = _alpha_b(st, xi, tau_)
        _guard(alpha, "alpha_s", s)
        u = (
            -xi * (tau_ - xi * b) / ev
            + (tau_ - 2 * xi * b) / (alpha * ev)
            + b / (alpha**2 * ev)
        )
    d2s1 = _guard(xi * (s + 1) + tau_, "d2(pi_{s+1})", s)
    ratio = w_s * u * st.hVar**2 / ((s + 1) * d2s1)
    return st.Dcur * (st.Dcur / st.Dprev + ratio)


def dpiv_step(st: DPState, aParam: Real) -> DPState:
    """One dPIV step (the xi = 0 reduction, weight w(x) = a**x / x!)."""
    a = real(aParam)
    s, k = st.s, st.k
    fv = _guard(st.fVar, "f_s", s)
    gm = _guard(st.gVar - s - 1, "g_s - s - 1", s)
    gp = _guard(st.gVar + k - s - 1, "g_s + k - s - 1", s)
    _guard(st.gVar, "g_s", s)
    d_next = _dp_fredholm(st, real(0), a, a**s / mp.factorial(s))
    f1 = a * st.gVar / (fv * gm * gp)
    g1 = a / f1 - (s + 1) / _guard(1 - f1, "1 - f_{s+1}", s) - st.gVar - k + 2 * s + 3
    e1 = a * st.eVar / (fv * gp)
    h1 = fv * gm * st.hVar / a
    return DPState(
        s=s + 1, k=k, fVar=f1, gVar=g1, eVar=e1, hVar=h1,
        Dprev=st.Dcur, Dcur=d_next,
    )


def dpv_step(st: DPState, f: FamilySpec) -> DPState:
    """One dPV step (the xi != 0 reduction)."""
    xi, tau_ = _xi_tau(f)
    if xi == 0:
        raise UnsupportedFamily(
            f"family {f.name!r} has constant d2; use dpiv_step"
        )
    s, k = st.s, st.k
    rho = tau_ / xi
    gv = _guard(st.gVar, "g_s", s)
    one_g = _guard(1 + gv, "1 + g_s", s)
    one_xg = _guard(1 + xi * gv, "1 + xi g_s", s)
    d_next = _dp_fredholm(st, xi, tau_, weight(f, s))
    f1 = -(k + rho) + s / one_g + (rho + s + 1) / one_xg - st.fVar
    _guard(f1, "f_{s+1}", s)
    _guard(f1 + k + rho, "f_{s+1} + k + tau/xi", s)
    g1 = (f1 - 1 - s) * (f1 - 1 - s + k) / (xi * f1 * (f1 + k + rho) * gv)
    _guard(g1, "g_{s+1}", s)
    den = _guard(one_xg * f1 + k - s - 1, "(1 + xi g_s) f_{s+1} + k - s - 1", s)
    e1 = -(xi * gv / g1) * ((1 + g1) * f1 + (k + rho) * g1 - s - 1) / den * st.eVar
    h1 = one_xg * (s + 1 - f1) * st.hVar / (_guard(tau_ + xi * (s + 1), "d2(pi_{s+1})", s) * gv)
    return DPState(
        s=s + 1, k=k, fVar=f1, gVar=g1, eVar=e1, hVar=h1,
        Dprev=st.Dcur, Dcur=d_next,
    )


def _charlier_init(f: FamilySpec, k: int) -> DPState:
    a = f.params["a"]

    def phi(u: int, w: int) -> Real:
        return hyp_f([u], [w], -a)

    p1k = phi(1 - k, 1)
    p2k = phi(1 - k, 2)
    p10 = phi(-k, 1)
    p20 = phi(-k, 2)
    d_k = mp.exp(-a * k)
    return DPState(
        s=k,
        k=k,
        fVar=-a * p2k / p1k,
        gVar=(k + 1) * (1 - p1k * p20 / (p10 * p2k)),
        eVar=a**k * mp.factorial(k - 1) / p1k,
        hVar=mp.factorial(k),
        Dprev=d_k,
        Dcur=d_k * p10,
    )


def _meixner_init(f: FamilySpec, k: int) -> DPState:
    bta = f.params["beta"]
    c = f.params["c"]
    z = 1 / c
    fk = hyp_f([1 - k, 1 - k], [1 + bta], z)
    f0 = hyp_f([-k, -k], [bta], z)
    fmix = hyp_f([-k, 1 - k], [bta], z)
    d_k = (1 - c) ** (k * (bta + k - 1))
    return DPState(
        s=k,
        k=k,
        fVar=real(0),
        gVar=k / (bta * c) * fk / fmix,
        eVar=bta * c * mp.factorial(k - 1) ** 2 / fk,
        hVar=mp.factorial(k),
        Dprev=d_k,
        Dcur=pochhammer(bta, k) / mp.factorial(k) * c**k * d_k * f0,
    )


def _krawtchouk_init(f: FamilySpec, k: int) -> DPState:
    p = f.params["p"]
    n = f.lattice.N
    z = 1 - 1 / p
    fk = hyp_f([1 - k, 1 - k], [1 - n], z)
    f0 = hyp_f([-k, -k], [-n], z)
    fmix = hyp_f([-k, 1 - k], [-n], z)
    return DPState(
        s=k,
        k=k,
        fVar=real(0),
        gVar=k * (1 - p) / (n * p) * fk / fmix,
        eVar=n * p * (1 - p) ** (n - 1) * mp.factorial(k - 1) ** 2 / fk,
        hVar=mp.factorial(k),
        Dprev=(1 - p) ** (k * (n + 1 - k)),
        Dcur=mp.binomial(n, k) * p**k * (1 - p) ** (k * (n - k)) * f0,
    )


def _qcharlier_init(f: FamilySpec, k: int) -> QCharlierBundle:
    a = f.params["a"]
    qv = f.params["q"]

    def gq(u: int, v: int, z: Real) -> Real:
        return hyp_phi([qv**u, qv**v], [], qv, z)

    def c2(n: int) -> int:
        return n * (n - 1) // 2

    g00 = gq(-k, -k, -(qv ** (2 * k)) / a)
    g01 = gq(-k, 1 - k, -(qv ** (2 * k - 1)) / a)
    g11 = gq(1 - k, 1 - k, -(qv ** (2 * k - 2)) / a)
    qp_k = q_pochhammer(qv, qv, k)
    qp_km1 = q_pochhammer(qv, qv, k - 1)
    inf = q_pochhammer_inf(-a, qv)
    gauge = mp.fprod(
        qv ** c2(n + 1) / q_pochhammer(-qv / a, qv, n) for n in range(k)
    )
    d_k = inf ** (-k) * a ** (-c2(k)) * gauge
    d_k1 = inf ** (-k) * a ** (k - c2(k)) / qp_k * qv ** (-c2(k)) * g00 * gauge
    p_k = (1 - qv ** (-k)) * g01 / g00
    q_k = qp_k**2 * qv ** (-k * (k + 1)) / g00
    return QCharlierBundle(
        s=k,
        k=k,
        p=p_k,
        q=q_k,
        r=qv ** (k * k) * (1 - qv ** (-k)) / (qp_k * qp_km1) * g01**2 / g00,
        alpha=-1 - qv**k * p_k,
        beta=-(qv**k) * q_k,
        gamma=qv ** (k * k - 1) / qp_km1**2 * g11,
        h=qv ** (-k * k) * qp_k,
        Dprev=d_k,
        Dcur=d_k1,
        aParam=a,
        qbase=qv,
    )


def family_recurrence_init(f: FamilySpec, k: int) -> DPState | QCharlierBundle:
    """Closed-form scalar initial data at s = k.

    Charlier, Meixner, and Krawtchouk give a DPState whose entries are
    hypergeometric evaluations; q-Charlier gives the scalar bundle with
    basic hypergeometric entries. Other families raise UnsupportedFamily.
    """
    _check_k(f, k)
    if f.name == "charlier":
        return _charlier_init(f, k)
    if f.name == "meixner":
        return _meixner_init(f, k)
    if f.name == "krawtchouk":
        return _krawtchouk_init(f, k)
    if f.name == "q_charlier":
        return _qcharlier_init(f, k)
    raise UnsupportedFamily(
        f"no closed scalar initial data for family {f.name!r}"
    )


def qcharlier_step(b: QCharlierBundle) -> QCharlierBundle:
    """One scalar-bundle step for q-Charlier.

    kappa2 = 0 on this family, so delta_s is constant, gamma_s integrates the
    residue entry r_s, and the remaining five sequences update through the
    shared pivot combinations t1 = p beta + delta q and
    t2 = r alpha - p gamma + q**(k-s-1) r.
    """
    a, qv, k, s = b.aParam, b.qbase, b.k, b.s
    dlt = b.delta
    _nonzero(b.p, "p_s", s)
    _nonzero(b.q, "q_s", s)
    _nonzero(b.r, "r_s", s)
    eps = a * (qv ** (-s - 1) - 1) + qv ** (k - 1) * (dlt * b.p - b.r * b.beta)
    scale = (
        abs(a * (qv ** (-s - 1) - 1))
        + abs(qv ** (k - 1) * dlt * b.p)
        + abs(qv ** (k - 1) * b.r * b.beta)
    )
    if abs(eps) <= tau() * max(scale, real(1)):
        raise EpsilonSingular(f"step determinant vanishes at s={s}", step=s)
    u = qv**k * b.p / b.q**2 * (b.p * b.beta + dlt * b.q)
    ratio = a ** (s - 1) / q_pochhammer(qv, qv, s + 1) * qv ** (s * (s + 1) // 2)
    d_next = b.Dcur * (b.Dcur / b.Dprev + ratio * u * b.h**2)
    t1 = b.p * b.beta + dlt * b.q
    t2 = b.r * b.alpha - b.p * b.gamma + qv ** (k - s - 1) * b.r
    p1 = -t1 * t2 / (qv * b.p * eps)
    q1 = t1**2 / (qv * b.q * eps)
    r1 = t2**2 / (qv * b.r * eps)
    p1 = _project_nilpotent(p1, q1, r1, s + 1)
    return QCharlierBundle(
        s=s + 1,
        k=k,
        p=p1,
        q=q1,
        r=r1,
        alpha=b.alpha + qv ** (k - 1) * b.p - qv**k * p1,
        beta=b.beta - qv**k * q1,
        gamma=b.gamma + qv ** (k - 1) * b.r,
        h=t1 * b.h / (a * b.q),
        Dprev=b.Dcur,
        Dcur=d_next,
        aParam=a,
        qbase=qv,
    )


def sakai_parameters(st: DPState, f: FamilySpec) -> tuple[Real, ...]:
    """Root parameters of the step map on the Sakai surface.

    dPV (xi != 0) carries (a0, a1, a2, a3, a4); dPIV (xi = 0) carries
    (a0, a1, a2, a3). Their normalization sakai_lambda is identically 1.
    """
    xi, tau_ = _xi_tau(f)
    s, k = real(st.s), real(st.k)
    if xi == 0:
        return (-s - 2, real(1), k, s + 2 - k)
    rho = tau_ / xi
    return (rho + s + 1, s, -s, -(k + rho), k)


def sakai_lambda(st: DPState, f: FamilySpec) -> Real:
    """The translation-length normalization of the Sakai parameters."""
    xi, _ = _xi_tau(f)
    par = sakai_parameters(st, f)
    if xi == 0:
        return par[0] + par[1] + par[2] + par[3]
    return par[0] + par[1] + 2 * par[2] + par[3] + par[4]


def run_painleve(f: FamilySpec, k: int, s_max: int) -> GapTable:
    """Gap probabilities D_s for s = k..s_max by the scalar recurrences.

    Charlier steps by dPIV, Meixner and Krawtchouk by dPV, q-Charlier by
    its scalar bundle. The other recurrence families have no printed
    scalar reduction and step by the general matrix recurrence instead;
    the table is tagged "painleve" either way since it answers the same
    method request.
    """
    if not f.supports_linear_recurrence:
        raise UnsupportedFamily(
            f"family {f.name!r} has no linear second-equation matrix"
        )
    _check_k(f, k)
    if s_max < k:
        raise InvalidParameter(f"s_max={s_max} is below k={k}")
    n = f.lattice.N
    if n is not None and s_max > n + 1:
        raise IndexOutOfRange(f"s_max={s_max} exceeds N+1={n + 1}")

    dvals: dict[int, Real] = {}
    if f.name in SCALAR_FAMILIES:
        st = family_recurrence_init(f, k)
        dvals[k] = st.Dprev
        dvals[k + 1] = st.Dcur
        while st.s < s_max and (n is None or st.s <= n - 2):
            if f.name == "charlier":
                st = dpiv_step(st, f.params["a"])
            elif f.name == "q_charlier":
                st = qcharlier_step(st)
            else:
                st = dpv_step(st, f)
            dvals[st.s + 1] = st.Dcur
    else:
        lx = init_state(f, k)
        dvals[k] = lx.Dprev
        dvals[k + 1] = lx.Dcur
        while lx.s < s_max and (n is None or lx.s <= n - 2):
            lx = step_general(lx, f)
            dvals[lx.s + 1] = lx.Dcur

    def d_of(s: int) -> Real:
        if n is not None and s == n + 1:
            return real(1)
        return dvals[s]

    return _assemble_table(f, k, s_max, d_of, "painleve")
