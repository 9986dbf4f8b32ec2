"""Elliptic data of the curve q^2 = (y^2 - l2^2)(y^2 - l3^2): periods, Abel
map, theta function, the scalar function F and the theta-function outer
parametrix, with jump checks."""

from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp

from .equilibrium import EquilibriumData, sqrt_curve
from .precision import InputError, PrecisionContext, Ray, Segment, integrate_adaptive, to_decimal

__all__ = [
    "CurveData",
    "Matrix2",
    "SingularPointError",
    "curve_data",
    "theta",
    "theta_with_bound",
    "abel_map",
    "gamma_value",
    "q_value",
    "f_value",
    "f_prime_formula",
    "c_constant",
    "outer_parametrix",
    "verify_outer",
]

D_SHIFT = mp.mpf(-1) / 4


class SingularPointError(ArithmeticError):
    """A theta factor in a denominator vanished."""


@dataclass(frozen=True)
class Matrix2:
    a: object
    b: object
    c: object
    d: object

    def __matmul__(self, o: "Matrix2") -> "Matrix2":
        return Matrix2(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )

    def det(self):
        return self.a * self.d - self.b * self.c

    def inv(self) -> "Matrix2":
        dt = self.det()
        return Matrix2(self.d / dt, -self.b / dt, -self.c / dt, self.a / dt)

    def entries(self):
        return (self.a, self.b, self.c, self.d)

    def max_diff(self, o: "Matrix2"):
        return max(abs(x - y) for x, y in zip(self.entries(), o.entries()))

    @staticmethod
    def identity():
        return Matrix2(1, 0, 0, 1)


@dataclass(frozen=True)
class CurveData:
    eq: EquilibriumData
    K0: object
    xi: object
    Pi: object
    u_inf: object
    d: object = D_SHIFT
    mantissa_bits: int = 512

    def to_json(self) -> dict:
        n = int(self.mantissa_bits * 0.30103 / 2)
        return {
            "v2": to_decimal(self.eq.v2, n),
            "K0": to_decimal(self.K0, n),
            "xi_imag": to_decimal(mp.im(self.xi), n),
            "Pi_imag": to_decimal(mp.im(self.Pi), n),
            "u_inf": to_decimal(self.u_inf, n),
            "d": "-0.25",
        }


# ------------------------------------------------------------------ curve pieces


def q_value(y, eq: EquilibriumData, side=None):
    """q(y) off the cuts, or its boundary value q_+/q_- on a cut."""
    y = mp.mpmathify(y)
    if mp.im(y) == 0:
        x = mp.re(y)
        l2, l3 = eq.lambda2, eq.lambda3
        if l2 < abs(x) < l3:
            if side not in ("+", "-"):
                raise InputError("y lies on a cut; pass side='+' or side='-'")
            mag = mp.sqrt((x * x - l2 * l2) * (l3 * l3 - x * x))
            s = 1 if x > 0 else -1
            s = s if side == "+" else -s
            return mp.mpc(0, s * mag)
        if abs(x) < l2:
            return -mp.sqrt((l2 * l2 - x * x) * (l3 * l3 - x * x))
        if abs(x) >= l3:
            return mp.sqrt((x * x - l2 * l2) * (x * x - l3 * l3))
    return sqrt_curve(y, eq)


def _root_side(w, p, side):
    """Principal w^p for real w, with the boundary value from above ('+') or
    below ('-') when w < 0."""
    if w > 0:
        return w**p
    if side not in ("+", "-"):
        raise InputError("point on a cut needs a side")
    ang = mp.pi * p if side == "+" else -mp.pi * p
    return abs(w) ** p * mp.expj(ang)


def gamma_value(y, eq: EquilibriumData, side=None):
    """gamma(y) = ((y - l2)(y + l3) / ((y + l2)(y - l3)))^{1/4}, each factor's
    argument taken in (-pi, pi]."""
    y = mp.mpmathify(y)
    l2, l3 = eq.lambda2, eq.lambda3
    q4 = mp.mpf(1) / 4
    if mp.im(y) == 0:
        x = mp.re(y)
        if abs(x) in (l2, l3):
            raise InputError("gamma is singular at the branch points")
        return (
            _root_side(x - l2, q4, side)
            * _root_side(x + l3, q4, side)
            / (_root_side(x + l2, q4, side) * _root_side(x - l3, q4, side))
        )
    return (y - l2) ** q4 * (y + l3) ** q4 / ((y + l2) ** q4 * (y - l3) ** q4)


def curve_data(eq: EquilibriumData, ctx: PrecisionContext) -> CurveData:
    """K0, xi, Pi and u(inf) for the two-cut curve."""
    if eq.l is None:
        pass  # l is not needed for the periods
    with ctx.workprec():
        l2, l3 = eq.lambda2, eq.lambda3
        K0 = 2 * integrate_adaptive(lambda s: 1 / q_value(s, eq), Segment(l2, -l2, (True, True)), ctx).value
        K0 = mp.re(K0)
        if not K0 > 0:
            raise ArithmeticError("a-period has the wrong sign")
        xi = mp.mpc(0, -2 * mp.pi / (K0 * l2 * l3))
        # q_+ = i|q| on [l2, l3]
        half = integrate_adaptive(
            lambda s: 1 / q_value(s, eq, "+"), Segment(l3, l2, (True, True)), ctx
        ).value
        Pi = 2 * half / K0
        if not mp.im(Pi) > 0:
            raise ArithmeticError("b-period has non-positive imaginary part")
        Pi = mp.mpc(0, mp.im(Pi))
        f = lambda s: 1 / q_value(s, eq)
        u1 = integrate_adaptive(f, Segment(l3, 2 * l3, (True, False)), ctx).value
        u2 = integrate_adaptive(f, Ray(2 * l3), ctx).value
        u_inf = mp.re(u1 + u2) / K0
    return CurveData(eq, K0, xi, Pi, u_inf, D_SHIFT, ctx.mantissa_bits)


def abel_map(y, cd: CurveData, ctx: PrecisionContext, side=None):
    """u(y) = int_{l3}^y ds / (K0 q(s)) along a path avoiding (-inf, l3).

    On the real axis the boundary value from above (side '+') is assembled
    from real-axis pieces; u_-(x) is its complex conjugate.
    """
    eq = cd.eq
    y = mp.mpmathify(y)
    with ctx.workprec():
        l2, l3, K0 = eq.lambda2, eq.lambda3, cd.K0
        if mp.im(y) == 0:
            x = mp.re(y)
            if x >= l3:
                if x == l3:
                    return mp.mpf(0)
                return integrate_adaptive(lambda s: 1 / q_value(s, eq), Segment(l3, x, (True, False)), ctx).value / K0
            if x == 0 and side is None:
                raise InputError("real y < lambda3 needs a side")
            if side not in ("+", "-"):
                raise InputError("real y < lambda3 needs side '+' or '-'")
            up = _abel_plus_real(x, cd, ctx)
            return up if side == "+" else mp.conj(up)
        sgn = 1 if mp.im(y) > 0 else -1
        H = (max(mp.mpf(1), abs(mp.im(y)) + 1)) * sgn
        top = mp.mpc(l3, H)
        corner = mp.mpc(mp.re(y), H)
        path = [Segment(mp.mpc(l3, 0), top, (True, False)), Segment(top, corner), Segment(corner, y)]
        return integrate_adaptive(lambda s: 1 / sqrt_curve(s, eq), path, ctx).value / K0


def _abel_plus_real(x, cd, ctx):
    eq = cd.eq
    l2, l3, K0 = eq.lambda2, eq.lambda3, cd.K0
    if l2 <= x < l3:
        if x == l2:
            return cd.Pi / 2
        return integrate_adaptive(lambda s: 1 / q_value(s, eq, "+"), Segment(l3, x, (True, False)), ctx).value / K0
    if -l2 <= x < l2:
        base = cd.Pi / 2
        if x == l2:
            return base
        return base + integrate_adaptive(lambda s: 1 / q_value(s, eq), Segment(l2, x, (True, False)), ctx).value / K0
    # the full a-period contributes 1/2 between l2 and -l2
    base = cd.Pi / 2 + mp.mpf(1) / 2
    if -l3 <= x < -l2:
        return base + integrate_adaptive(lambda s: 1 / q_value(s, eq, "+"), Segment(-l2, x, (True, False)), ctx).value / K0
    # x < -l3: pass Sigma_1 on the upper side, then continue on the real line
    tail = integrate_adaptive(lambda s: 1 / q_value(s, eq, "+"), Segment(-l2, -l3, (True, True)), ctx).value / K0
    return base + tail + integrate_adaptive(lambda s: 1 / q_value(s, eq), Segment(-l3, x, (True, False)), ctx).value / K0


def theta_with_bound(s, Pi, ctx: PrecisionContext):
    """theta(s) = sum_m exp(i pi Pi m^2 + 2 pi i s m) and a bound on the
    dropped tail. Terms are summed symmetrically until the geometrically
    dominated tail is below the working epsilon times the partial sum."""
    with ctx.workprec():
        s = mp.mpmathify(s)
        Pi = mp.mpmathify(Pi)
        b = mp.im(Pi)
        if not b > 0:
            raise InputError("theta needs Im Pi > 0")
        a = abs(mp.im(s))
        total = mp.mpc(1)
        m = 0
        while True:
            m += 1
            pair = mp.expj(mp.pi * Pi * m * m + 2 * mp.pi * s * m) + mp.expj(mp.pi * Pi * m * m - 2 * mp.pi * s * m)
            total += pair
            # |term_k| <= exp(-pi b k^2 + 2 pi a k); ratio of consecutive bounds
            nxt = m + 1
            ratio = mp.exp(-mp.pi * b * (2 * nxt + 1) + 2 * mp.pi * a)
            if ratio < 1:
                tail = 2 * mp.exp(-mp.pi * b * nxt * nxt + 2 * mp.pi * a * nxt) / (1 - ratio)
                if tail <= ctx.eps * abs(total) or tail <= ctx.eps**2:
                    return total, tail
            if m > 100000:
                raise ArithmeticError("theta series failed to converge")


def theta(s, Pi, ctx: PrecisionContext):
    return theta_with_bound(s, Pi, ctx)[0]


# ------------------------------------------------------------------ F


def _cauchy(phi, a, b, y, side, ctx, sing=(True, True)):
    """int_a^b phi(s)/(s - y) ds for real a < b; for real y inside (a, b) the
    boundary value from above/below. A subtraction at Re y keeps the
    integrand bounded."""
    y = mp.mpmathify(y)
    x0 = mp.re(y)
    inside = a < x0 < b
    if not inside:
        return integrate_adaptive(lambda s: phi(s) / (s - y), Segment(a, b, sing), ctx).value
    p0 = phi(x0)
    f = lambda s: (phi(s) - p0) / (s - y)
    body = integrate_adaptive(f, [Segment(a, x0, (sing[0], False)), Segment(x0, b, (False, sing[1]))], ctx).value
    if mp.im(y) == 0:
        if side not in ("+", "-"):
            raise InputError("point on the contour needs a side")
        lg = mp.log((b - x0) / (x0 - a)) + (1j * mp.pi if side == "+" else -1j * mp.pi)
    else:
        lg = mp.log(b - y) - mp.log(a - y)
    return body + p0 * lg


def f_value(y, v1, cd: CurveData, ctx: PrecisionContext, side=None):
    """F(y) = v1 q(y)/(2 pi i) [int_Sigma ds/(s q_+(s)(s - y))
    + xi int_{-l2}^{l2} ds/(q(s)(s - y))]."""
    v1 = mp.mpmathify(v1)
    if v1 == 0:
        return mp.mpc(0)
    eq = cd.eq
    with ctx.workprec():
        y = mp.mpmathify(y)
        l2, l3 = eq.lambda2, eq.lambda3
        phi1 = lambda s: 1 / (s * q_value(s, eq, "+"))
        phi2 = lambda s: 1 / q_value(s, eq)
        I1 = _cauchy(phi1, -l3, -l2, y, side, ctx) + _cauchy(phi1, l2, l3, y, side, ctx)
        I2 = _cauchy(phi2, -l2, l2, y, side, ctx)
        qy = q_value(y, eq, side)
        return v1 * qy / (2j * mp.pi) * (I1 + cd.xi * I2)


def c_constant(v1, cd: CurveData, ctx: PrecisionContext):
    """C = (2 v1 l2 l3 / K0) int_{l2}^{-l2} ds/(s^2 q(s)); the double pole
    at 0 has zero residue, so the path passes above it."""
    eq = cd.eq
    with ctx.workprec():
        l2, l3 = eq.lambda2, eq.lambda3
        top = mp.mpc(0, l2)
        path = [Segment(mp.mpc(l2, 0), top, (True, False)), Segment(top, mp.mpc(-l2, 0), (False, True))]
        I = integrate_adaptive(lambda s: 1 / (s * s * sqrt_curve(s, eq)), path, ctx).value
        return mp.re(2 * mp.mpmathify(v1) * l2 * l3 / cd.K0 * I)


def f_prime_formula(y, v1, cd: CurveData, ctx: PrecisionContext, side=None):
    """F'(y) = -v1/(2y^2) - (v1 l2 l3 - C y^2)/(2 y^2 q(y))."""
    eq = cd.eq
    with ctx.workprec():
        y = mp.mpmathify(y)
        C = c_constant(v1, cd, ctx)
        return -v1 / (2 * y * y) - (v1 * eq.lambda2 * eq.lambda3 - C * y * y) / (2 * y * y * q_value(y, eq, side))


# ------------------------------------------------------------------ outer parametrix


def _shift(N, v1, cd):
    """-N/2 - v1 xi/(2 pi i); real because xi is imaginary."""
    return mp.re(-mp.mpf(N) / 2 - mp.mpmathify(v1) * cd.xi / (2j * mp.pi))


def _h_diag(N, v1, cd, ctx):
    c, d, ui = _shift(N, v1, cd), cd.d, cd.u_inf
    num = theta(ui + d, cd.Pi, ctx)
    return num / theta(ui + c + d, cd.Pi, ctx), num / theta(-ui + c - d, cd.Pi, ctx)


def outer_parametrix(y, N: int, v1, cd: CurveData, ctx: PrecisionContext, side=None, u=None) -> Matrix2:
    """S_inf(y) built from gamma, the Abel map and theta quotients.

    The (2,2) normalizer is theta(u_inf + d)/theta(-u_inf + c - d), which is
    what S_inf(inf) = I requires. ``u`` may pass a precomputed Abel map value.
    """
    eq = cd.eq
    with ctx.workprec():
        y = mp.mpmathify(y)
        l2, l3 = eq.lambda2, eq.lambda3
        if mp.im(y) == 0 and min(abs(abs(mp.re(y)) - l) for l in (l2, l3)) < mp.mpf("1e-6") * l2:
            raise InputError("too close to a branch point")
        if u is None:
            u = abel_map(y, cd, ctx, side)
        g = gamma_value(y, eq, side)
        gi = 1 / g
        c, d, Pi = _shift(N, v1, cd), cd.d, cd.Pi

        def th(s):
            return theta(s, Pi, ctx)

        dens = {"u+d": th(u + d), "-u+d": th(-u + d), "u-d": th(u - d)}
        for k, v in dens.items():
            if abs(v) < ctx.eps:
                raise SingularPointError(f"theta({k}) vanishes at y={mp.nstr(y, 8)}")
        h1, h2 = _h_diag(N, v1, cd, ctx)
        m11 = (g + gi) / 2 * th(u + c + d) / dens["u+d"]
        m12 = (g - gi) / (-2j) * th(-u + c + d) / dens["-u+d"]
        m21 = (g - gi) / (2j) * th(u + c - d) / dens["u-d"]
        m22 = (g + gi) / 2 * th(-u + c - d) / dens["u+d"]
        return Matrix2(h1 * m11, h1 * m12, h2 * m21, h2 * m22)


def verify_outer(N: int, v1, cd: CurveData, ctx: PrecisionContext, n: int = 25, u_cache: dict | None = None) -> dict:
    """Jump residuals on Sigma and the gap, det - 1, and the decay of
    S_inf - I along the imaginary axis (ratio between R = 1e3 and 1e4)."""
    eq = cd.eq
    with ctx.workprec():
        l2, l3 = eq.lambda2, eq.lambda3
        margin = mp.mpf("1e-3") * l2

        def grid(a, b):
            return [a + (b - a) * (k + mp.mpf(1) / 2) / n for k in range(n)]

        cache = {} if u_cache is None else u_cache

        def u_at(x, side):
            key = (mp.nstr(x, 30), side)
            if key not in cache:
                cache[key] = abel_map(x, cd, ctx, side)
            return cache[key]

        def S(x, side):
            return outer_parametrix(x, N, v1, cd, ctx, side, u=u_at(x, side))

        J_sigma = Matrix2(0, 1, -1, 0)
        e = mp.expj(N * mp.pi) * mp.exp(cd.xi * v1)
        J_gap = Matrix2(e, 0, 0, 1 / e)
        res_sigma = mp.mpf(0)
        for x in grid(l2 + margin, l3 - margin) + grid(-l3 + margin, -l2 - margin):
            res_sigma = max(res_sigma, S(x, "+").max_diff(S(x, "-") @ J_sigma))
        res_gap = mp.mpf(0)
        for x in grid(-l2 + margin, l2 - margin):
            res_gap = max(res_gap, S(x, "+").max_diff(S(x, "-") @ J_gap))
        # continuity outside [-l3, l3]
        res_out = mp.mpf(0)
        for x in grid(l3 + margin, 3 * l3) + grid(-3 * l3, -l3 - margin):
            if x > 0:
                s0 = S(x, None)
                res_out = max(res_out, s0.max_diff(S(x + mp.mpc(0, "1e-12"), None)))
            else:
                res_out = max(res_out, S(x, "+").max_diff(S(x, "-")))
        det_res = mp.mpf(0)
        pts = [mp.mpc(1, 1), mp.mpc(-0.5, 0.2), mp.mpc(0.1, -0.3), mp.mpc(3, -2), mp.mpc(0, 5)]
        for p in pts:
            det_res = max(det_res, abs(outer_parametrix(p, N, v1, cd, ctx).det() - 1))
        for x in grid(l2 + margin, l3 - margin)[::5]:
            det_res = max(det_res, abs(S(x, "+").det() - 1))
        I = Matrix2.identity()
        d3 = outer_parametrix(mp.mpc(0, 1000), N, v1, cd, ctx).max_diff(I)
        d4 = outer_parametrix(mp.mpc(0, 10000), N, v1, cd, ctx).max_diff(I)
        return {
            "N": N,
            "v1": mp.mpmathify(v1),
            "sigma_jump": res_sigma,
            "gap_jump": res_gap,
            "outside_continuity": res_out,
            "det_residual": det_res,
            "decay_1e3": d3,
            "decay_1e4": d4,
            "decay_ratio": d3 / d4,
        }
