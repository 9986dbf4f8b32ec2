"""Equilibrium measure of V0(y) = v2/(2y^2) + y^2/2 on two symmetric
intervals [-l3, -l2] U [l2, l3]: branch points, the density function nu,
the g-function, the Lagrange constant and checks of the variational
conditions."""

from __future__ import annotations

from dataclasses import dataclass, replace

import warnings

import mpmath as mp
import numpy as np

from scipy.integrate import IntegrationWarning, quad

from .precision import (
    Arc,
    InputError,
    PrecisionContext,
    Ray,
    Segment,
    find_root_bracketed,
    integrate_adaptive,
    to_decimal,
)

__all__ = [
    "EquilibriumData",
    "solve_branch_points",
    "sqrt_curve",
    "nu_value",
    "gprime_value",
    "v0",
    "lagrange_l",
    "lagrange_l_truncated",
    "g_value",
    "gtilde_value",
    "verify_equilibrium",
    "residue_checks",
    "constraint_residuals",
]


@dataclass(frozen=True)
class EquilibriumData:
    v2: object
    A1: object
    lambda1: object
    lambda2: object
    lambda3: object
    l: object = None
    mantissa_bits: int = 512

    @property
    def lambdas(self):
        return self.lambda1, self.lambda2, self.lambda3

    def to_json(self) -> dict:
        d = int(self.mantissa_bits * 0.30103 / 2)
        return {
            "v2": to_decimal(self.v2, d),
            "A1": to_decimal(self.A1, d),
            "lambda": ["i*" + to_decimal(self.lambda1.imag, d), to_decimal(self.lambda2, d), to_decimal(self.lambda3, d)],
            "l": None if self.l is None else to_decimal(self.l, d),
        }


def solve_branch_points(v2, ctx: PrecisionContext) -> EquilibriumData:
    """A1 from the quartic A^4 - 2A^3 = v2^2 on (-sqrt(v2), 0), then
    A2 < A3 from y^2 - 2(2 - A1) y + v2^2/A1^2 = 0."""
    with ctx.workprec():
        v2 = mp.mpf(v2)
        if not v2 > 0:
            raise InputError("v2 must be positive")
        f = lambda A: A**4 - 2 * A**3 - v2 * v2
        A1 = find_root_bracketed(f, -mp.sqrt(v2), mp.mpf(0), ctx)
        # polish to full working precision
        for _ in range(4):
            A1 -= f(A1) / (4 * A1**3 - 6 * A1**2)
        b = 2 - A1
        c = v2 * v2 / (A1 * A1)
        disc = mp.sqrt(b * b - c)
        A3 = b + disc
        A2 = c / A3
        lam1 = mp.mpc(0, mp.sqrt(-A1))
        return EquilibriumData(v2, A1, lam1, mp.sqrt(A2), mp.sqrt(A3), None, ctx.mantissa_bits)


def constraint_residuals(eq: EquilibriumData):
    """Residuals of the three algebraic constraints on the branch points."""
    with mp.workprec(eq.mantissa_bits):
        l1s = eq.lambda1**2
        l2, l3 = eq.lambda2, eq.lambda3
        r1 = l1s + (l2**2 + l3**2) / 2 - 2
        r2 = 1 / l1s + (l2**-2 + l3**-2) / 2
        r3 = l1s * l2 * l3 + eq.v2
        return [abs(r1), abs(r2) * abs(l1s), abs(r3) / eq.v2]


def sqrt_curve(y, eq: EquilibriumData):
    """q(y) = sqrt((y^2 - l2^2)(y^2 - l3^2)) analytic off the two cuts,
    q ~ y^2 at infinity; built from four principal square roots."""
    y = mp.mpmathify(y)
    l2, l3 = eq.lambda2, eq.lambda3
    return mp.sqrt(y - l3) * mp.sqrt(y - l2) * mp.sqrt(y + l2) * mp.sqrt(y + l3)


def _boundary_point(y, side):
    y = mp.mpmathify(y)
    if side is None:
        return y
    if side not in ("+", "-"):
        raise InputError("side must be '+' or '-'")
    if isinstance(y, mp.mpc) and y.imag != 0:
        raise InputError("side only applies to real points")
    return y


def nu_value(y, eq: EquilibriumData, side=None):
    """nu(y) = (y^2 - l1^2) q(y) / (2 y^3).

    On the cuts the caller must pass side '+' or '-' (boundary value from the
    upper or lower half plane).
    """
    y = _boundary_point(y, side)
    l2, l3 = eq.lambda2, eq.lambda3
    yr = mp.re(y)
    on_real = mp.im(y) == 0
    if on_real and l2 <= abs(yr) <= l3 and abs(yr) not in (l2, l3):
        if side is None:
            raise InputError("y lies on a cut; pass side='+' or side='-'")
        # principal roots give the '+' value when approached from above
        q = _plus_on_cut(yr, eq) if side == "+" else mp.conj(_plus_on_cut(yr, eq))
    else:
        q = sqrt_curve(y, eq)
    if y == 0:
        raise InputError("nu has a pole at 0")
    return (y * y - eq.lambda1**2) * q / (2 * y**3)


def _plus_on_cut(x, eq):
    """Boundary value q_+(x) on a cut, from the upper half plane."""
    l2, l3 = eq.lambda2, eq.lambda3
    mag = mp.sqrt((x * x - l2 * l2) * (l3 * l3 - x * x))
    # on [l2, l3] one factor sits on its cut: i; on [-l3, -l2] three: -i
    return mp.mpc(0, mag) if x > 0 else mp.mpc(0, -mag)


def gprime_value(y, eq: EquilibriumData):
    """g'(y) = V0'(y)/2 - nu(y)."""
    y = mp.mpmathify(y)
    return (y - eq.v2 / y**3) / 2 - nu_value(y, eq)


def v0(y, v2):
    y = mp.mpmathify(y)
    return v2 / (2 * y * y) + y * y / 2


def _quad_ctx(ctx: PrecisionContext, bits=None):
    bits = ctx.mantissa_bits if bits is None else bits
    return PrecisionContext(bits, rel_tol=mp.ldexp(mp.mpf(1), -(bits // 2)), max_quad_depth=ctx.max_quad_depth)


def lagrange_l(eq: EquilibriumData, ctx: PrecisionContext) -> EquilibriumData:
    """l = -2 [l3^2/4 - log l3 - int_{l3}^inf (nu(s) - s/2 + 1/s) ds].

    This is the large-Y limit with the growing parts of the integral
    integrated in closed form; the remaining integrand is O(s^-3).
    """
    with ctx.workprec():
        l3 = eq.lambda3
        f = lambda s: _nu_remainder(s, eq)
        tail = integrate_adaptive(f, Ray(l3), ctx).value
        l = -2 * (l3 * l3 / 4 - mp.log(l3) - tail)
    return replace(eq, l=l)


def _nu_remainder(s, eq):
    """nu(s) - s/2 + 1/s for real s > lambda3 without cancellation at large s."""
    a, b = eq.lambda2**2, eq.lambda3**2
    u = 1 / (s * s)
    root = mp.sqrt((1 - a * u) * (1 - b * u))
    r = (-(a + b) * u + a * b * u * u) / (root + 1)  # root - 1
    # nu = (s^2 - A1)(1 + r)/(2s)
    return s * r / 2 - eq.A1 * (1 + r) / (2 * s) + 1 / s


def lagrange_l_truncated(eq: EquilibriumData, Y1, Y2, ctx: PrecisionContext):
    """l from the defining expression at two finite radii, combined by
    Richardson extrapolation in Y^-2. Returns (extrapolated, value_Y1, value_Y2)."""
    with ctx.workprec():
        l3 = eq.lambda3

        def at(Y):
            Y = mp.mpf(Y)
            I = integrate_adaptive(lambda s: nu_value(s, eq).real, Segment(l3, Y, (True, False)), ctx).value
            return -2 * (v0(Y, eq.v2) / 2 - mp.log(Y) - I)

        a, b = at(Y1), at(Y2)
        w1, w2 = mp.mpf(Y1) ** 2, mp.mpf(Y2) ** 2
        return (w2 * b - w1 * a) / (w2 - w1), a, b


def _is_branch(x, eq):
    return any(abs(abs(x) - lam) == 0 for lam in (eq.lambda2, eq.lambda3))


def gtilde_value(y, eq: EquilibriumData, ctx: PrecisionContext, side=None):
    """g~(y) = int_{l3}^y nu(s) ds along a path avoiding (-inf, l3).

    For real y < l3 the boundary value from the upper ('+') or lower ('-')
    half plane is returned. The path runs vertically from l3, horizontally,
    then vertically onto y.
    """
    y = _boundary_point(y, side)
    with ctx.workprec():
        l3 = eq.lambda3
        yr, yi = mp.re(y), mp.im(y)
        if yi == 0 and yr >= l3:
            if yr == l3:
                return mp.mpc(0)
            return mp.mpc(integrate_adaptive(lambda s: nu_value(s, eq), Segment(l3, yr, (True, False)), ctx).value)
        if yi == 0:
            if yr == 0:
                raise InputError("g has a logarithmic singularity at 0")
            if side is None:
                raise InputError("real y < lambda3 is on the jump contour; pass side")
            sgn = 1 if side == "+" else -1
        else:
            sgn = 1 if yi > 0 else -1
        H = max(mp.mpf(1), abs(yi) + 1) * sgn
        top = mp.mpc(l3, H)
        corner = mp.mpc(yr, H)
        end = mp.mpc(yr, yi)
        ends_on_branch = yi == 0 and _is_branch(yr, eq)
        path = [
            Segment(mp.mpc(l3, 0), top, (True, False)),
            Segment(top, corner),
            Segment(corner, end, (False, ends_on_branch)),
        ]
        nu = lambda s: nu_value(s, eq) if s.imag != 0 else nu_value(s.real, eq, side="+" if sgn > 0 else "-")
        return integrate_adaptive(nu, path, ctx).value


def g_value(y, eq: EquilibriumData, ctx: PrecisionContext, side=None):
    """g(y) = V0(y)/2 - g~(y) + l/2."""
    if eq.l is None:
        raise InputError("compute the Lagrange constant first (lagrange_l)")
    with ctx.workprec():
        return v0(y, eq.v2) / 2 - gtilde_value(y, eq, ctx, side) + eq.l / 2


class _FloatCurve:
    """Double-precision copy of the curve data for fast grid checks."""

    def __init__(self, eq: EquilibriumData):
        self.l2 = float(eq.lambda2)
        self.l3 = float(eq.lambda3)
        self.A1 = float(eq.A1)
        self.v2 = float(eq.v2)
        self.l = float(eq.l)
        self.quad_error = 0.0

    def nu(self, s):
        l2, l3 = self.l2, self.l3
        q = np.sqrt(s - l3) * np.sqrt(s - l2) * np.sqrt(s + l2) * np.sqrt(s + l3)
        return (s * s - self.A1) * q / (2 * s**3)

    def gtilde_plus(self, x: float) -> complex:
        """Boundary value from above of g~ at real x < lambda3 (x != 0)."""
        H = 1.0
        a = complex(self.l3, 0.0)
        pts = [a, complex(self.l3, H), complex(x, H), complex(x, 0.0)]
        total = 0j
        for p0, p1 in zip(pts, pts[1:]):
            total += self._segment(p0, p1)
        return total

    def gtilde_right(self, x: float) -> float:
        """g~ at real x > lambda3 (nu is real there)."""
        return self._segment(complex(self.l3, 0.0), complex(x, 0.0)).real

    def _segment(self, p0, p1):
        d = p1 - p0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            val, err = quad(lambda u: self.nu(p0 + u * d) * d, 0.0, 1.0, complex_func=True,
                            epsabs=1e-14, epsrel=1e-13, limit=200)
        self.quad_error = max(self.quad_error, abs(err))
        return val

    def g_plus(self, x: float) -> complex:
        return self.v0(x) / 2 - self.gtilde_plus(x) + self.l / 2

    def v0(self, x):
        return self.v2 / (2 * x * x) + x * x / 2


def g_plus_fast(x, eq: EquilibriumData) -> complex:
    """Double-precision g_+(x) for real x < lambda3; g_-(x) is its conjugate."""
    if eq.l is None:
        raise InputError("compute the Lagrange constant first (lagrange_l)")
    return _FloatCurve(eq).g_plus(float(x))


def residue_checks(eq: EquilibriumData, ctx: PrecisionContext):
    """(1/2 pi i) times the integral of nu around a large circle (expected
    -1) and around a small circle about 0 inside the gap (expected 0)."""
    with ctx.workprec():
        R = 2 * eq.lambda3 + 1
        r = eq.lambda2 / 2
        nu = lambda s: nu_value(s, eq)
        big = integrate_adaptive(nu, Arc(0, R, 0, 2 * mp.pi), ctx).value / (2j * mp.pi)
        small = integrate_adaptive(nu, Arc(0, r, 0, 2 * mp.pi), ctx).value / (2j * mp.pi)
        return big, small


def verify_equilibrium(eq: EquilibriumData, ctx: PrecisionContext, n: int = 50) -> dict:
    """Residuals of the jump relations and the strict inequality margin.

    Grid values of g are computed in double precision along the same paths
    as g_value (residual targets are far above 1e-16); the branch points, l
    and the residue checks keep the context's precision. Since nu is real on
    the real axis off the cuts, g_-(x) = conj(g_+(x)).
    """
    if eq.l is None:
        raise InputError("compute the Lagrange constant first (lagrange_l)")
    fc = _FloatCurve(eq)
    l2, l3, l = fc.l2, fc.l3, fc.l
    eps = 1e-3 * l2

    def mids(a, b):
        return [a + (b - a) * (k + 0.5) / n for k in range(n)]

    def pm(x):
        gp = fc.g_plus(x)
        return gp, gp.conjugate()

    res_sigma = 0.0
    for x in mids(l2, l3) + mids(-l3, -l2):
        gp, gm = pm(x)
        res_sigma = max(res_sigma, abs(gp + gm - fc.v0(x) - l))
    res_left = 0.0
    for x in mids(-3 * l3, -l3):
        gp, gm = pm(x)
        res_left = max(res_left, abs(gp - gm - 2j * np.pi))
    res_gap = 0.0
    for x in mids(-l2, l2):
        gp, gm = pm(x)
        res_gap = max(res_gap, abs(gp - gm - 1j * np.pi))
    margin = -np.inf
    outside = mids(eps, l2 - eps) + mids(l3 + eps, 3 * l3)
    outside = outside + [-x for x in outside]
    for x in outside:
        if x > l3:
            val = 2 * (fc.v0(x) / 2 - fc.gtilde_right(x) + l / 2)
        else:
            gp, gm = pm(x)
            val = (gp + gm).real
        margin = max(margin, val - fc.v0(x) - l)
    big, small = residue_checks(eq, _quad_ctx(ctx, min(ctx.mantissa_bits, 128)))
    return {
        "v2": eq.v2,
        "constraints": max(constraint_residuals(eq)),
        "sigma": res_sigma,
        "left_jump": res_left,
        "gap_jump": res_gap,
        "inequality_margin": margin,
        "residue_infinity": abs(big + 1),
        "residue_zero": abs(small),
        "quadrature_error": fc.quad_error,
    }
