"""Ground-truth computations independent of the scalar recurrences.

Everything here is built directly from the weight function: monic orthogonal
polynomials by modified Gram-Schmidt, the Christoffel-Darboux kernel, gap
probabilities via finite-rank Gram determinants and via explicit k-subset
enumeration, and the closed-form pole-data objects (m_k, A_k, M_k) of the
discrete Riemann-Hilbert problem. The recurrence engines are tested against
these routes; nothing in this module depends on them.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from mpmath import mp

from .errors import (
    DegenerateWeight,
    IndexOutOfRange,
    InvalidParameter,
    PoleHit,
    ResidueViolation,
    SingularMatrix,
    TooLarge,
    UnsupportedFamily,
)
from .families import FamilySpec, make_family, weight
from .precision import (
    Mat2,
    Poly,
    Real,
    get_precision,
    mat2_add,
    mat2_identity,
    mat2_mul,
    mat2_scale,
    monomial,
    poly_add,
    poly_derivative,
    poly_scale,
    real,
    tau,
)

__all__ = [
    "OrthoBasis",
    "DrhpSolution",
    "build_ortho_basis",
    "cd_kernel",
    "cd_kernel_sum_form",
    "gap_probability_gram",
    "gap_probability_enumeration",
    "compute_mk",
    "compute_mk_with_derivative",
    "compute_Ak",
    "compute_Mk_linear",
    "initial_drhp_solution",
    "drhp_lax_advance",
    "extract_A_from_residues",
    "charlier_difference_check",
]

_MAX_SUPPORT = 200_000
_ENUM_GUARD = 10**6


def _default_tail_tol() -> Real:
    return mp.mpf(2) ** -(get_precision() + 32)


def _truncation_index(f: FamilySpec, k_max: int, tail_tol: Real) -> int:
    """Smallest x_cut with the neglected weighted tail mass below tail_tol.

    The tail terms |omega(x)|*(1+|pi_x|)**(2*k_max) of every registered
    infinite family decay at least geometrically once past their peak. The
    scan keeps a running estimate r of the step-to-step decay ratio (the
    largest ratio seen over the last few steps) and stops once the geometric
    bound term*r/(1-r) on the remaining tail falls below tail_tol.
    """
    if f.lattice.N is not None:
        return f.lattice.N
    power = 2 * k_max
    prev = abs(weight(f, 0)) * (1 + abs(f.point(0))) ** power
    ratios: list[Real] = []
    x = 0
    while x < _MAX_SUPPORT:
        x += 1
        term = abs(weight(f, x)) * (1 + abs(f.point(x))) ** power
        ratios.append(term / prev if prev > 0 else real(0))
        if len(ratios) > 8:
            ratios.pop(0)
        r = max(ratios)
        if len(ratios) == 8 and r < 1 and term * r / (1 - r) < tail_tol / 4:
            return x
        prev = term
    raise TooLarge(
        f"{f.name}: truncation scan exceeded {_MAX_SUPPORT} points without converging"
    )


@dataclass(frozen=True)
class OrthoBasis:
    """Monic orthogonal polynomials P_0..P_k_max on the (truncated) lattice.

    values[n][x] caches P_n(pi_x) over the support used for inner products;
    norms[n] is (P_n, P_n)_omega over that support.
    """

    family: FamilySpec
    k_max: int
    polys: tuple[Poly, ...]
    norms: tuple[Real, ...]
    x_cut: int
    values: tuple[tuple[Real, ...], ...]
    weights: tuple[Real, ...]

    @property
    def points(self) -> list[Real]:
        return [self.family.point(x) for x in range(self.x_cut + 1)]


def build_ortho_basis(
    f: FamilySpec,
    k_max: int,
    tail_tol: Real | None = None,
    x_limit: int | None = None,
) -> OrthoBasis:
    """Modified two-pass Gram-Schmidt on monomials 1, zeta, ..., zeta**k_max.

    x_limit restricts the support to the first x_limit lattice points (used
    for the truncated-set objects of the pole-data route); by default the
    support is the whole lattice, truncated for infinite ones so the
    neglected tail mass stays below tail_tol.
    """
    if k_max < 0:
        raise IndexOutOfRange("k_max must be nonnegative")
    if tail_tol is None:
        tail_tol = _default_tail_tol()
    x_cut = _truncation_index(f, k_max, tail_tol)
    if x_limit is not None:
        x_cut = min(x_cut, x_limit - 1)
    n_pts = x_cut + 1
    if k_max >= n_pts:
        raise IndexOutOfRange(
            f"k_max={k_max} needs more than the {n_pts} available lattice points"
        )
    pts = [f.point(x) for x in range(n_pts)]
    wts = [weight(f, x) for x in range(n_pts)]

    def dot(u: list[Real], v: list[Real]) -> Real:
        return mp.fsum(u[x] * v[x] * wts[x] for x in range(n_pts))

    polys: list[Poly] = []
    norms: list[Real] = []
    values: list[list[Real]] = []
    for n in range(k_max + 1):
        poly = monomial(n)
        vals = [p**n for p in pts]
        for _ in range(2):
            for m in range(n):
                c = dot(vals, values[m]) / norms[m]
                poly = poly_add(poly, poly_scale(polys[m], -c))
                vals = [vals[x] - c * values[m][x] for x in range(n_pts)]
        h = dot(vals, vals)
        scale = mp.fsum(abs(vals[x]) ** 2 * abs(wts[x]) for x in range(n_pts))
        if abs(h) <= tau() * scale:
            raise DegenerateWeight(
                f"{f.name}: norm of degree-{n} polynomial below tolerance "
                "(precision exhausted or degenerate weight)"
            )
        polys.append(poly)
        norms.append(h)
        values.append(vals)
    return OrthoBasis(
        family=f,
        k_max=k_max,
        polys=tuple(polys),
        norms=tuple(norms),
        x_cut=x_cut,
        values=tuple(tuple(v) for v in values),
        weights=tuple(wts),
    )


def cd_kernel(b: OrthoBasis, k: int, x: int, y: int) -> Real:
    """Christoffel-Darboux kernel value K(pi_x, pi_y) for the rank-k projection.

    Off-diagonal uses the two-term ratio form, the diagonal its derivative
    limit; both carry the symmetric sqrt(omega(x) omega(y)) conjugation.
    Assumes positive weights.
    """
    if not 1 <= k <= b.k_max:
        raise IndexOutOfRange(f"k={k} outside basis range 1..{b.k_max}")
    if not (0 <= x <= b.x_cut and 0 <= y <= b.x_cut):
        raise IndexOutOfRange("lattice index outside truncated support")
    inv_norm = 1 / b.norms[k - 1]
    pk, pk1 = b.values[k], b.values[k - 1]
    if x == y:
        px = b.family.point(x)
        dk = poly_derivative(b.polys[k])(px)
        dk1 = poly_derivative(b.polys[k - 1])(px)
        return inv_norm * b.weights[x] * (dk * pk1[x] - dk1 * pk[x])
    num = pk[x] * pk1[y] - pk1[x] * pk[y]
    den = b.family.point(x) - b.family.point(y)
    return inv_norm * mp.sqrt(b.weights[x] * b.weights[y]) * num / den


def cd_kernel_sum_form(b: OrthoBasis, k: int, x: int, y: int) -> Real:
    """Same kernel as a direct rank-k sum; cross-check for cd_kernel."""
    if not 1 <= k <= b.k_max:
        raise IndexOutOfRange(f"k={k} outside basis range 1..{b.k_max}")
    total = mp.fsum(
        b.values[m][x] * b.values[m][y] / b.norms[m] for m in range(k)
    )
    return mp.sqrt(b.weights[x] * b.weights[y]) * total


def gap_probability_gram(b: OrthoBasis, k: int, s: int) -> Real:
    """D_s as a k x k Gram determinant of orthonormal polynomials over x < s.

    Computed as det[(P_m, P_n) over x < s] / prod(norms), which avoids square
    roots (and so stays valid for signed weights). Returns 0 for s < k by
    convention; for finite lattices s may run up to N+1.
    """
    if not 1 <= k <= b.k_max + 1:
        raise IndexOutOfRange(f"k={k} outside basis range 1..{b.k_max + 1}")
    N = b.family.lattice.N
    if N is not None and s > N + 1:
        raise IndexOutOfRange(f"s={s} exceeds N+1={N + 1}")
    if s < k:
        return real(0)
    n_sum = min(s, b.x_cut + 1)
    g = mp.matrix(k, k)
    for m in range(k):
        for n in range(m, k):
            v = mp.fsum(
                b.values[m][x] * b.values[n][x] * b.weights[x]
                for x in range(n_sum)
            )
            g[m, n] = v
            g[n, m] = v
    return mp.det(g) / mp.fprod(b.norms[m] for m in range(k))


def gap_probability_enumeration(
    f: FamilySpec, k: int, s: int, x_cut: int | None = None
) -> Real:
    """D_s by explicit summation over all k-point configurations inside x < s.

    The normalization Z is enumerated over the full (truncated) lattice when
    that is small enough, otherwise taken as the product of the squared norms
    of the first k orthogonal polynomials.
    """
    if k < 1:
        raise InvalidParameter("ensemble size k must be at least 1")
    N = f.lattice.N
    if N is not None:
        if k > N + 1:
            raise InvalidParameter(f"k={k} exceeds lattice size {N + 1}")
        if s > N + 1:
            raise IndexOutOfRange(f"s={s} exceeds N+1={N + 1}")
        full = N + 1
    else:
        full = (x_cut if x_cut is not None else _truncation_index(
            f, k, _default_tail_tol())) + 1
    if s < k:
        return real(0)
    if math.comb(s, k) > _ENUM_GUARD:
        raise TooLarge(f"binom({s},{k}) exceeds the enumeration guard {_ENUM_GUARD}")
    pts = [f.point(x) for x in range(full)]
    wts = [weight(f, x) for x in range(full)]

    def config_mass(combo: tuple[int, ...]) -> Real:
        v = real(1)
        for i in range(len(combo)):
            for j in range(i + 1, len(combo)):
                v *= (pts[combo[i]] - pts[combo[j]]) ** 2
        for i in combo:
            v *= wts[i]
        return v

    numerator = mp.fsum(
        config_mass(c) for c in itertools.combinations(range(s), k)
    )
    if math.comb(full, k) <= _ENUM_GUARD:
        z = mp.fsum(config_mass(c) for c in itertools.combinations(range(full), k))
    else:
        basis = build_ortho_basis(f, k - 1)
        z = mp.fprod(basis.norms[m] for m in range(k))
    return numerator / z


def _rho(f: FamilySpec, m: int, k: int) -> Real:
    """rho_m for the k-point pole data: 1/(omega(m) prod_{j<k, j!=m}(pi_m-pi_j)^2)."""
    v = 1 / weight(f, m)
    pm = f.point(m)
    for j in range(k):
        if j != m:
            v /= (pm - f.point(j)) ** 2
    return v


def _mk_entries(f: FamilySpec, k: int, zeta: Real) -> tuple[Real, Real, Real, Real]:
    """(W, W', S, S') at zeta for the closed-form m_k building blocks."""
    w = real(1)
    wp = real(0)
    s = real(0)
    sp = real(0)
    for j in range(k):
        d = zeta - f.point(j)
        wp = wp * d + w
        w *= d
        rho = _rho(f, j, k)
        s += rho / d
        sp -= rho / d**2
    return w, wp, s, sp


def compute_mk(f: FamilySpec, k: int, zeta: Real) -> Mat2:
    """The closed-form initial solution m_k(zeta) of the pole problem.

    m_k = [[W, 0], [W*S, 1/W]] with W the monic polynomial vanishing on the
    first k points and S the weighted pole sum. Raises PoleHit near a pole.
    """
    for j in range(k):
        pj = f.point(j)
        if abs(zeta - pj) <= tau() * (1 + abs(pj)):
            raise PoleHit(f"zeta={zeta} too close to pole pi_{j}={pj}")
    w, _, s, _ = _mk_entries(f, k, zeta)
    return Mat2(w, real(0), w * s, 1 / w)


def compute_mk_with_derivative(f: FamilySpec, k: int, zeta: Real) -> tuple[Mat2, Mat2]:
    """m_k(zeta) and its entrywise derivative."""
    for j in range(k):
        pj = f.point(j)
        if abs(zeta - pj) <= tau() * (1 + abs(pj)):
            raise PoleHit(f"zeta={zeta} too close to pole pi_{j}={pj}")
    w, wp, s, sp = _mk_entries(f, k, zeta)
    m = Mat2(w, real(0), w * s, 1 / w)
    dm = Mat2(wp, real(0), wp * s + w * sp, -wp / w**2)
    return m, dm


def compute_Ak(f: FamilySpec, k: int) -> Mat2:
    """The nilpotent jump matrix A_k = [[p_k, q_k], [r_k, -p_k]]."""
    pk = f.point(k)
    inv_q = _rho(f, k, k)
    t = real(0)
    for m in range(k):
        rho = _rho(f, m, k)
        d = pk - f.point(m)
        inv_q += rho / d**2
        t += rho / d
    q = 1 / inv_q
    return Mat2(-q * t, q, -q * t**2, q * t)


def compute_Mk_linear(f: FamilySpec, k: int) -> tuple[Mat2, Mat2]:
    """(Lambda, C_k) with M_k(zeta) = Lambda*zeta + C_k, for linear d1, d2."""
    if not f.supports_linear_recurrence:
        raise UnsupportedFamily(
            f"{f.name}: d1 or d2 not linear; no linear shift matrix"
        )
    lam1 = f.d1.coeffs[1] if f.d1.degree >= 1 else real(0)
    mu1 = f.d1.coeffs[0]
    lam2 = f.d2.coeffs[1] if f.d2.degree >= 1 else real(0)
    mu2 = f.d2.coeffs[0]
    eta = f.eta
    a = compute_Ak(f, k)
    rho_sum = mp.fsum(_rho(f, m, k) for m in range(k))
    pi0, pik = f.point(0), f.point(k)
    lam = Mat2(eta**k * lam1, real(0), real(0), eta**-k * lam2)
    c = Mat2(
        eta**k * (mu1 + lam1 * (pi0 - pik - a.a11)),
        -(eta**k) * lam1 * a.a12,
        -(eta**-k) * lam2 * a.a21 + (eta ** (k - 1) * lam1 - eta**-k * lam2) * rho_sum,
        eta**-k * (mu2 + lam2 * (a.a11 + pik - pi0)),
    )
    return lam, c


@dataclass(frozen=True)
class DrhpSolution:
    """m_s as the closed-form m_k times accumulated pole factors.

    factors holds (A_j, pi_j) for j = k..s-1, so that
    m_s(zeta) = (I + A_{s-1}/(zeta-pi_{s-1})) ... (I + A_k/(zeta-pi_k)) m_k(zeta).
    """

    family: FamilySpec
    k: int
    s: int
    factors: tuple[tuple[Mat2, Real], ...]

    def eval(self, zeta: Real) -> Mat2:
        return self.eval_with_derivative(zeta)[0]

    def eval_with_derivative(self, zeta: Real) -> tuple[Mat2, Mat2]:
        for a, pole in self.factors:
            if abs(zeta - pole) <= tau() * (1 + abs(pole)):
                raise PoleHit(f"zeta={zeta} too close to pole {pole}")
        m, dm = compute_mk_with_derivative(self.family, self.k, zeta)
        for a, pole in self.factors:
            d = zeta - pole
            fac = mat2_add(mat2_identity(), mat2_scale(a, 1 / d))
            dfac = mat2_scale(a, -1 / d**2)
            dm = mat2_add(mat2_mul(dfac, m), mat2_mul(fac, dm))
            m = mat2_mul(fac, m)
        return m, dm


def initial_drhp_solution(f: FamilySpec, k: int) -> DrhpSolution:
    return DrhpSolution(family=f, k=k, s=k, factors=())


def _residue_residual(sol: DrhpSolution, a: Mat2) -> Real:
    """Worst scaled residual of the two residue conditions for appending a."""
    f = sol.family
    pi_s = f.point(sol.s)
    om = weight(f, sol.s)
    m, dm = sol.eval_with_derivative(pi_s)
    am = mat2_mul(a, m)
    adm = mat2_mul(a, dm)
    scale = max(a.norm(), real(1)) * max(m.norm(), dm.norm(), real(1)) * max(
        abs(om), real(1)
    )
    residuals = [
        am.a11,
        am.a21,
        om * (m.a11 + adm.a11) - am.a12,
        om * (m.a21 + adm.a21) - am.a22,
    ]
    return max(abs(r) for r in residuals) / scale


def drhp_lax_advance(sol: DrhpSolution, a: Mat2) -> DrhpSolution:
    """Append the pole factor (I + a/(zeta-pi_s)); verifies the residue laws.

    a must be nilpotent and must satisfy both residue conditions at pi_s to
    within tolerance, otherwise ResidueViolation is raised.
    """
    nil = mat2_mul(a, a)
    if nil.norm() > tau() * max(a.norm(), real(1)) ** 2:
        raise ResidueViolation("advance matrix is not nilpotent", step=sol.s)
    res = _residue_residual(sol, a)
    if res > 64 * tau():
        raise ResidueViolation(
            f"residue conditions fail with scaled residual {mp.nstr(res, 8)}",
            step=sol.s,
        )
    pi_s = sol.family.point(sol.s)
    return DrhpSolution(
        family=sol.family,
        k=sol.k,
        s=sol.s + 1,
        factors=sol.factors + ((a, pi_s),),
    )


def extract_A_from_residues(sol: DrhpSolution) -> Mat2:
    """Solve the residue conditions at pi_s for the unique advance matrix.

    Both rows of A satisfy the same 2x2 linear system with different right
    sides; the coefficient matrix couples m_s(pi_s) and its derivative.
    """
    f = sol.family
    pi_s = f.point(sol.s)
    om = weight(f, sol.s)
    m, dm = sol.eval_with_derivative(pi_s)
    coeff = Mat2(
        m.a11,
        m.a21,
        om * dm.a11 - m.a12,
        om * dm.a21 - m.a22,
    )
    det = coeff.det()
    row1 = max(abs(coeff.a11), abs(coeff.a12))
    row2 = max(abs(coeff.a21), abs(coeff.a22))
    if abs(det) <= tau() * row1 * row2:
        raise SingularMatrix("residue system is singular", step=sol.s)

    def solve(rhs2: Real) -> tuple[Real, Real]:
        # Cramer's rule for coeff @ (x1, x2)^T = (0, rhs2)^T.
        return -coeff.a12 * rhs2 / det, coeff.a11 * rhs2 / det

    a11, a12 = solve(-om * m.a11)
    a21, a22 = solve(-om * m.a21)
    return Mat2(a11, a12, a21, a22)


def charlier_difference_check(a: Real, k: int, zeta_samples: list[Real]) -> bool:
    """True iff -k P_k(z) = a P_k(z+1) - (z+a) P_k(z) + z P_k(z-1) at samples."""
    a = real(a)
    f = make_family("charlier", {"a": a})
    basis = build_ortho_basis(f, k)
    pk = basis.polys[k]
    for z in zeta_samples:
        z = real(z)
        terms = [a * pk(z + 1), -(z + a) * pk(z), z * pk(z - 1)]
        lhs = -k * pk(z)
        rhs = mp.fsum(terms)
        scale = max(abs(lhs), *[abs(t) for t in terms], real(1))
        if abs(lhs - rhs) > 64 * tau() * scale:
            return False
    return True
