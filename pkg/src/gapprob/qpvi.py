"""q-difference Painleve VI verification layer for geometric-lattice families.

On a lattice {qj**(-s)} with shift sigma(zeta) = qj*zeta the matrix
recurrence is a q-difference Lax pair. Setting x = zeta and t = pi_s, the
combination A(x, t) = M_s(x)((x - t)I + A_s) is quadratic in x, and the
pair of consecutive recurrence steps is equivalent to the matrix relation
A(x, qj*t) B(x, t) = B(qj*x, t) A(x, t) with B built from the previous
residue matrix. When both jump entries d1, d2 are linear with nonzero
roots, scalar coordinates (y, z, w) extracted from A(x, t) satisfy the
Jimbo--Sakai q-PVI system; when d2 is a nonzero constant they satisfy its
one-parameter degeneration.

Families on the decreasing lattice {q**s} fit the same frame after the
substitution qj = 1/q, which is exactly the lattice shift scale eta, so
every formula below uses eta uniformly. This module is a verifier: it
checks that states produced by the production engines trace q-PVI orbits.
It never drives the stepping itself.
"""

from __future__ import annotations

from dataclasses import dataclass

from mpmath import mp

from .errors import (
    DegenerateKappa,
    IndexOutOfRange,
    InvalidParameter,
    ResidueViolation,
    RootNotFound,
    UnsupportedFamily,
)
from .families import FamilySpec, LatticeKind
from .lax import LaxState, init_state, step_general
from .precision import Mat2, Real, mat2_mul, real, rel_diff, tau

__all__ = [
    "QPVIData",
    "qp6_build",
    "qp6_chain",
    "qp6_compat_check",
    "js_extract_and_check",
]


@dataclass(frozen=True)
class QPVIData:
    """The q-PVI data extracted from one recurrence state.

    A0, A1, A2 are the x-coefficients of A(x, t) at t = pi_s, B0 is the
    constant part of the shift matrix (built from the residue matrix one
    index earlier), and the scalars (y, z1, z2, z, w) with parameters
    (kappa1, kappa2, theta1, theta2, a3, a4, b1..b4) follow the
    Jimbo--Sakai coordinates. In the degenerate case (constant d2) a4 and
    b4 are None and the parameters are the degenerate variants.
    """

    s: int
    k: int
    qval: Real
    t: Real
    degenerate: bool
    A0: Mat2
    A1: Mat2
    A2: Mat2
    B0: Mat2
    kappa1: Real
    kappa2: Real
    theta1: Real
    theta2: Real
    a3: Real
    a4: Real | None
    y: Real
    z1: Real
    z2: Real
    z: Real
    w: Real
    b1: Real
    b2: Real
    b3: Real
    b4: Real | None


def _linear_root(poly, what: str, fname: str) -> tuple[Real, Real]:
    """Write a linear polynomial as lam * (zeta - root)."""
    if poly.degree != 1:
        raise UnsupportedFamily(
            f"family {fname!r}: {what} must be linear for the q-PVI frame"
        )
    lam = poly.coeffs[1]
    root = -poly.coeffs[0] / lam
    if abs(root) <= tau():
        raise UnsupportedFamily(
            f"family {fname!r}: {what} has a vanishing root; "
            "the q-PVI parameterization needs nonzero constant terms"
        )
    return lam, root


def _a_eval(d: QPVIData, x: Real) -> Mat2:
    return Mat2(
        d.A0.a11 + d.A1.a11 * x + d.A2.a11 * x * x,
        d.A0.a12 + d.A1.a12 * x + d.A2.a12 * x * x,
        d.A0.a21 + d.A1.a21 * x + d.A2.a21 * x * x,
        d.A0.a22 + d.A1.a22 * x + d.A2.a22 * x * x,
    )


def _b_numerator(d: QPVIData, xp: Real) -> Mat2:
    """x'(x' I + B0), the pole-free part of the shift matrix at x'."""
    return Mat2(
        xp * (xp + d.B0.a11),
        xp * d.B0.a12,
        xp * d.B0.a21,
        xp * (xp + d.B0.a22),
    )


def _mscale(m: Mat2, c: Real) -> Mat2:
    return Mat2(m.a11 * c, m.a12 * c, m.a21 * c, m.a22 * c)


def _mmax(m: Mat2) -> Real:
    return max(abs(m.a11), abs(m.a12), abs(m.a21), abs(m.a22))


def _det(m: Mat2) -> Real:
    return m.a11 * m.a22 - m.a12 * m.a21


def _det_a(d: QPVIData, x: Real) -> Real:
    return _det(_a_eval(d, x))


def _det_model(d: QPVIData, x: Real) -> Real:
    out = d.kappa1 * d.kappa2 * (x - d.t) ** 2 * (x - d.a3)
    if not d.degenerate:
        out *= x - d.a4
    return out


def qp6_build(st: LaxState, f: FamilySpec) -> QPVIData:
    """Extract the q-PVI data at index s from a recurrence state.

    The shift matrix constant B0 references the residue matrix one index
    earlier, so the chain is re-stepped from its initial state; st must
    therefore sit at s >= k + 1 and lie on the recurrence chain of its
    family. The determinant factorization and the quadratic structure of
    A(x, t) are checked before the scalar coordinates are extracted.
    """
    if f.lattice.kind is LatticeKind.LINEAR:
        raise UnsupportedFamily(
            f"family {f.name!r} lives on the linear lattice; "
            "the q-PVI frame needs a geometric one"
        )
    if not f.supports_linear_recurrence:
        raise UnsupportedFamily(
            f"family {f.name!r} has no linear second-equation matrix"
        )
    qj = f.eta
    lam1, a3 = _linear_root(f.d1, "d1", f.name)
    if f.d2.degree == 1:
        degenerate = False
        lam2, a4 = _linear_root(f.d2, "d2", f.name)
    elif f.d2.degree == 0 and f.d2.coeffs[0] != 0:
        degenerate = True
        lam2, a4 = f.d2.coeffs[0], None
    else:
        raise UnsupportedFamily(
            f"family {f.name!r}: d2 must be linear or a nonzero constant"
        )

    k = int(mp.nint(mp.log(st.kappa1 / lam1) / mp.log(qj)))
    kap1 = qj**k * lam1
    kap2 = qj ** (-k) * lam2
    if rel_diff(kap1, st.kappa1) > tau():
        raise InvalidParameter(
            f"state kappa1 does not match {f.name!r} for any integer k"
        )
    if st.s <= k:
        raise IndexOutOfRange(
            f"q-PVI data needs s >= k+1 for the shift matrix, got s={st.s}"
        )
    prev = init_state(f, k)
    while prev.s < st.s - 1:
        prev = step_general(prev, f)
    check = step_general(prev, f)
    for attr in ("p", "q", "r", "c11", "c12", "c21", "c22"):
        got, want = getattr(check, attr), getattr(st, attr)
        if abs(got - want) > real("1e-20") * max(real(1), abs(got), abs(want)):
            raise InvalidParameter(
                f"state at s={st.s} does not lie on the k={k} chain of {f.name!r}"
            )

    t = f.point(st.s)
    qt = f.point(st.s - 1)
    a_mat = st.a_matrix()
    c_mat = Mat2(st.c11, st.c12, st.c21, st.c22)
    shifted = Mat2(a_mat.a11 - t, a_mat.a12, a_mat.a21, a_mat.a22 - t)
    kdiag = Mat2(st.kappa1, real(0), real(0), st.kappa2)
    a0 = mat2_mul(c_mat, shifted)
    a1 = mat2_mul(kdiag, shifted)
    a1 = Mat2(a1.a11 + c_mat.a11, a1.a12 + c_mat.a12,
              a1.a21 + c_mat.a21, a1.a22 + c_mat.a22)
    a2 = kdiag
    b0 = Mat2(-qt - prev.p, -prev.q, -prev.r, -qt + prev.p)

    data = QPVIData(
        s=st.s, k=k, qval=qj, t=t, degenerate=degenerate,
        A0=a0, A1=a1, A2=a2, B0=b0,
        kappa1=kap1, kappa2=kap2,
        theta1=real(0), theta2=real(0), a3=a3, a4=a4,
        y=real(0), z1=real(0), z2=real(0), z=real(0), w=real(0),
        b1=real(0), b2=real(0), b3=real(0), b4=None,
    )
    for x in (t + 1, 2 * t + 3, a3 + 2):
        lhs = _det_a(data, x)
        rhs = _det_model(data, x)
        if abs(lhs - rhs) > tau() * max(real(1), abs(lhs), abs(rhs)):
            raise ResidueViolation(
                f"det A(x, t) does not factor as required at s={st.s}",
                step=st.s,
            )

    tra0 = a0.a11 + a0.a22
    deta0 = _det(a0)
    if abs(deta0) <= tau() * max(real(1), _mmax(a0) ** 2):
        raise DegenerateKappa(
            f"A0 is singular at s={st.s}; theta parameters vanish"
        )
    disc = tra0**2 - 4 * deta0
    root = mp.sqrt(disc) if disc >= 0 else mp.sqrt(mp.mpc(disc))
    theta1 = (tra0 + root) / (2 * t)
    theta2 = (tra0 - root) / (2 * t)

    if abs(a1.a12) <= tau() * max(real(1), _mmax(a1)):
        raise RootNotFound(
            f"A^{{12}}(x, t) has no reachable root at s={st.s}"
        )
    y = -a0.a12 / a1.a12
    z1 = (a0.a11 + a1.a11 * y + a2.a11 * y * y) / kap1
    z2 = (a0.a22 + a1.a22 * y + a2.a22 * y * y) / kap2
    if abs(z1) <= tau():
        raise DegenerateKappa(f"z1 vanishes at s={st.s}; z is undefined")
    return QPVIData(
        s=st.s, k=k, qval=qj, t=t, degenerate=degenerate,
        A0=a0, A1=a1, A2=a2, B0=b0,
        kappa1=kap1, kappa2=kap2,
        theta1=theta1, theta2=theta2, a3=a3, a4=a4,
        y=y, z1=z1, z2=z2,
        z=(y - t) ** 2 / (qj * kap1 * z1),
        w=a1.a12 / kap2,
        b1=1 / theta1, b2=1 / theta2,
        b3=1 / (qj * kap1),
        b4=None if degenerate else 1 / kap2,
    )


def qp6_chain(f: FamilySpec, k: int, s_from: int, s_to: int) -> list[QPVIData]:
    """q-PVI data at every index in s_from..s_to, stepping the chain once."""
    if s_from <= k:
        raise IndexOutOfRange("q-PVI data starts at s = k + 1")
    if s_to < s_from:
        raise InvalidParameter(f"empty index range {s_from}..{s_to}")
    st = init_state(f, k)
    out = []
    while st.s < s_to:
        st = step_general(st, f)
        if st.s >= s_from:
            out.append(qp6_build(st, f))
    return out


def _check_consecutive(d_t: QPVIData, d_qt: QPVIData) -> None:
    if d_qt.s != d_t.s - 1:
        raise InvalidParameter(
            f"need consecutive indices, got s={d_t.s} and s={d_qt.s}"
        )
    if d_qt.degenerate != d_t.degenerate:
        raise InvalidParameter("mixed degenerate and nondegenerate data")
    if rel_diff(d_qt.t, d_t.qval * d_t.t) > 16 * tau():
        raise InvalidParameter("t parameters are not one q-step apart")


def qp6_compat_check(d_t: QPVIData, d_qt: QPVIData, x_samples) -> bool:
    """Check A(x, qt) B(x, t) = B(qx, t) A(x, t) at the given samples.

    Both sides are multiplied by (x - qt)^2 (qx - qt)^2 first, so the
    identity is polynomial and the samples may include the apparent poles
    x = t and x = qt without special casing.
    """
    _check_consecutive(d_t, d_qt)
    qj = d_t.qval
    qt = d_qt.t
    for x in x_samples:
        x = real(x)
        left = _mscale(
            mat2_mul(_a_eval(d_qt, x), _b_numerator(d_t, x)),
            (qj * x - qt) ** 2,
        )
        right = _mscale(
            mat2_mul(_b_numerator(d_t, qj * x), _a_eval(d_t, x)),
            (x - qt) ** 2,
        )
        diff = Mat2(
            left.a11 - right.a11, left.a12 - right.a12,
            left.a21 - right.a21, left.a22 - right.a22,
        )
        scale = max(real(1), _mmax(left), _mmax(right))
        if _mmax(diff) > tau() * scale:
            return False
    return True


def _b_symmetric(d: QPVIData) -> tuple[Real, Real]:
    """(b1 + b2, b1 b2) computed from trace and determinant of A0.

    The eigenvalues of A0 are t*theta1, t*theta2, so b1 + b2 =
    t * tr(A0) / det(A0) and b1 b2 = t^2 / det(A0); this stays real even
    when the individual thetas form a complex pair.
    """
    tra0 = d.A0.a11 + d.A0.a22
    deta0 = _det(d.A0)
    return d.t * tra0 / deta0, d.t**2 / deta0


def js_extract_and_check(d_t: QPVIData, d_qt: QPVIData) -> bool:
    """Verify one Jimbo--Sakai step between consecutive q-PVI data.

    Predicts (ybar, zbar, wbar) at parameter qt from (y, z, w) at t via
    the JS system (or its degeneration for constant d2) and compares with
    the values extracted directly at qt; also verifies the determinant
    identity z1 z2 = (y - t)^2 (y - a3)(y - a4), with the last factor
    dropped in the degenerate case.
    """
    _check_consecutive(d_t, d_qt)
    t = d_t.t
    for d in (d_t, d_qt):
        model = (d.y - d.t) ** 2 * (d.y - d.a3)
        if not d.degenerate:
            model *= d.y - d.a4
        if abs(d.z1 * d.z2 - model) > tau() * max(
            real(1), abs(d.z1 * d.z2), abs(model)
        ):
            return False
    bsum, bprod = _b_symmetric(d_t)
    y, z, w = d_t.y, d_t.z, d_t.w
    b3 = d_t.b3
    if d_t.degenerate:
        kap2, a3 = d_t.kappa2, d_t.a3
        zbar = b3 * (y - t) ** 2 / (z * kap2 * (y - a3))
        num = zbar**2 - zbar * t * bsum + t**2 * bprod
        ybar = kap2 * a3 * num / (y * (zbar - b3))
        wbar = w * (b3 - zbar) / b3
    else:
        if rel_diff(d_t.kappa1, d_t.kappa2) <= tau():
            raise DegenerateKappa(
                "kappa1 = kappa2; the JS parameterization is unavailable"
            )
        b4, a3, a4 = d_t.b4, d_t.a3, d_t.a4
        zbar = b3 * b4 * (y - t) ** 2 / (z * (y - a3) * (y - a4))
        num = zbar**2 - zbar * t * bsum + t**2 * bprod
        ybar = a3 * a4 * num / (y * (zbar - b3) * (zbar - b4))
        wbar = w * (b4 / b3) * (zbar - b3) / (zbar - b4)
    checks = [
        (ybar, d_qt.y),
        (zbar, d_qt.z),
        (wbar, d_qt.w),
    ]
    return all(rel_diff(got, want) <= tau() for got, want in checks)
