"""Finite-N Riemann-Hilbert matrix Y built from the orthogonal polynomials of
the scaled weight w_N(y) = exp(-N(v2/(2y^2) + y^2/2) + v1/y), with checks of
its jump, determinant and normalization, the Christoffel-Darboux kernel,
and the contour-integral formulas for the derivatives of log G_N."""

from __future__ import annotations

from dataclasses import dataclass, field

import mpmath as mp

from .elliptic import Matrix2
from .hankel import HankelFactorization, factorize, partition_exact
from .moments import ModelParams, moment_table
from .precision import Arc, InputError, PrecisionContext, Segment, integrate_adaptive

__all__ = [
    "RHCheckReport",
    "ScaledSystem",
    "scaled_system",
    "weight_scaled",
    "y_matrix",
    "y_derivative",
    "kernel_value",
    "kernel_diagonal",
    "kernel_grid",
    "contour_radius",
    "contour_identities",
    "check_identities",
]

DENT = mp.mpf("0.01")
NEAR_AXIS = mp.mpf("0.05")


def weight_scaled(y, params: ModelParams):
    """w_N(y), analytic in y away from 0."""
    N = params.N
    y = mp.mpmathify(y)
    if y == 0:
        return mp.mpf(0)
    return mp.exp(-N * (params.v2 / (2 * y * y) + y * y / 2) + params.v1 / y)


@dataclass
class ScaledSystem:
    """pi_0..pi_N and h_0..h_N for w_N, coefficients ascending."""

    params: ModelParams
    norms: list
    polys: list
    cutoff: object
    mantissa_bits: int
    factorization: HankelFactorization = field(repr=False, default=None)

    def poly(self, j, y):
        acc = 0
        for c in reversed(self.polys[j]):
            acc = acc * y + c
        return acc

    def dpoly(self, j, y):
        p = self.polys[j]
        acc = 0
        for k in range(len(p) - 1, 0, -1):
            acc = acc * y + k * p[k]
        return acc


def _cutoff(params: ModelParams, bits: int):
    """Point below which w_N(+-s) < 2^-bits for 0 < s."""
    with mp.workprec(bits + 32):
        a = params.N * params.v2
        if a == 0:
            return mp.mpf(0)
        L = bits * mp.log(2)
        v = abs(params.v1)
        return a / (v + mp.sqrt(v * v + 2 * a * L))


def scaled_system(params: ModelParams, ctx: PrecisionContext) -> ScaledSystem:
    """Factor the (N+1) x (N+1) Hankel matrix so pi_N is available too."""
    N = params.N
    if params.zm == 0:
        raise InputError("the Riemann-Hilbert checks need z > 0")
    table = moment_table(params, ctx, count=2 * N + 1)
    fac = factorize(table, ctx, n=N + 1)
    with ctx.workprec():
        norms, _, _, polys = fac.scaled()
    return ScaledSystem(params, norms, polys, _cutoff(params, ctx.mantissa_bits + 16), ctx.mantissa_bits, fac)


def _line_path(sys: ScaledSystem, y, side):
    """Real line minus (-x_c, x_c), dented around Re y when y is on or near
    the axis: below it for the '+' limit, above it for '-'."""
    xc = sys.cutoff
    y = mp.mpmathify(y)
    im = mp.im(y)
    if im != 0 and abs(im) >= NEAR_AXIS:
        return [Segment(-mp.inf, -xc), Segment(xc, mp.inf)]
    if im != 0:
        side = "+" if im > 0 else "-"
    elif side not in ("+", "-"):
        raise InputError("y is on the real axis; pass side='+' or side='-'")
    x0 = mp.re(y)
    if abs(x0) < xc + 2 * DENT:
        raise InputError("too close to the essential singularity at 0")
    phi1 = 2 * mp.pi if side == "+" else 0
    if x0 > 0:
        return [
            Segment(-mp.inf, -xc),
            Segment(xc, x0 - DENT),
            Arc(x0, DENT, mp.pi, phi1),
            Segment(x0 + DENT, mp.inf),
        ]
    return [
        Segment(-mp.inf, x0 - DENT),
        Arc(x0, DENT, mp.pi, phi1),
        Segment(x0 + DENT, -xc),
        Segment(xc, mp.inf),
    ]


def _cauchy(sys: ScaledSystem, y, side, ctx, path=None):
    """(1/2 pi i) int pi_j w_N / (s - y)^k ds for j = N, N-1 and k = 1, 2."""
    N = sys.params.N
    y = mp.mpmathify(y)
    if path is None:
        path = _line_path(sys, y, side)

    def f(s):
        w = weight_scaled(s, sys.params)
        a, b = sys.poly(N, s) * w, sys.poly(N - 1, s) * w
        r = 1 / (s - y)
        return [a * r, b * r, a * r * r, b * r * r]

    vals = integrate_adaptive(f, path, ctx).value
    c = 1 / (2j * mp.pi)
    return [v * c for v in vals]


def _assemble(sys, y, cauchy):
    N = sys.params.N
    kappa = -2j * mp.pi / sys.norms[N - 1]
    Y = Matrix2(sys.poly(N, y), cauchy[0], kappa * sys.poly(N - 1, y), kappa * cauchy[1])
    dY = Matrix2(sys.dpoly(N, y), cauchy[2], kappa * sys.dpoly(N - 1, y), kappa * cauchy[3])
    return Y, dY


def y_matrix(y, side, params: ModelParams, sys: ScaledSystem, ctx: PrecisionContext) -> Matrix2:
    """Y(y) with second row scaled by kappa = -2 pi i / h_{N-1}; on the real
    axis the boundary value from the given side."""
    with ctx.workprec():
        y = mp.mpmathify(y)
        return _assemble(sys, y, _cauchy(sys, y, side, ctx))[0]


def y_derivative(y, side, sys: ScaledSystem, ctx: PrecisionContext):
    """(Y, Y') at y."""
    with ctx.workprec():
        y = mp.mpmathify(y)
        return _assemble(sys, y, _cauchy(sys, y, side, ctx))


def kernel_value(x, y, params: ModelParams, sys: ScaledSystem, ctx: PrecisionContext):
    """K_N(x, y) for real x != y by the defining sum and by the
    Christoffel-Darboux form built from Y_+; returns (sum, cd, |sum - cd|)."""
    N = params.N
    with ctx.workprec():
        x, y = mp.mpf(x), mp.mpf(y)
        if x == y:
            raise InputError("use kernel_diagonal for x == y")
        sq = mp.sqrt(weight_scaled(x, params) * weight_scaled(y, params))
        s = sq * mp.fsum(sys.poly(j, x) * sys.poly(j, y) / sys.norms[j] for j in range(N))
        Yx = y_matrix(x, "+", params, sys, ctx)
        Yy = y_matrix(y, "+", params, sys, ctx)
        M = Yy.inv() @ Yx
        cd = sq / (2j * mp.pi * (x - y)) * M.c
        return s, cd, abs(s - cd)


def kernel_diagonal(x, params: ModelParams, sys: ScaledSystem, ctx: PrecisionContext):
    """K_N(x, x) as a sum of squares and from w (Y_+^{-1} Y_+')_{21}/(2 pi i)."""
    N = params.N
    with ctx.workprec():
        x = mp.mpf(x)
        w = weight_scaled(x, params)
        s = w * mp.fsum(sys.poly(j, x) ** 2 / sys.norms[j] for j in range(N))
        Y, dY = y_derivative(x, "+", sys, ctx)
        lim = w / (2j * mp.pi) * (Y.inv() @ dY).c
        return s, lim


def kernel_grid(xs, params: ModelParams, sys: ScaledSystem, ctx: PrecisionContext):
    """max |sum route - CD route| over all pairs x != y from ``xs``; Y_+ is
    computed once per point."""
    with ctx.workprec():
        xs = [mp.mpf(x) for x in xs]
        Ys = {x: y_matrix(x, "+", params, sys, ctx) for x in xs}
        worst = mp.mpf(0)
        for x in xs:
            for y in xs:
                if x == y:
                    continue
                sq = mp.sqrt(weight_scaled(x, params) * weight_scaled(y, params))
                s = sq * mp.fsum(sys.poly(j, x) * sys.poly(j, y) / sys.norms[j] for j in range(params.N))
                cd = sq / (2j * mp.pi * (x - y)) * (Ys[y].inv() @ Ys[x]).c
                worst = max(worst, abs(s - cd))
        return worst


def contour_radius(params: ModelParams, bits: int):
    """Radius r with w_N(+-r) < 2^-bits."""
    return _cutoff(params, bits)


def _trace_sigma3(Y, dY):
    M = Y.inv() @ dY
    return M.a - M.d


def contour_identities(params: ModelParams, sys: ScaledSystem, ctx: PrecisionContext, points: int = 32):
    """Trapezoid values of
        -(1/(4 pi i)) oint tr(Y^{-1} Y' sigma3) dy / y   and
        (N/(8 pi i)) oint tr(Y^{-1} Y' sigma3) dy / y^2
    on the circle |y| = r, with Y taken from the half-plane of each node.
    Returns (d_v1, d_v2, change from halving the node count)."""
    N = params.N
    with ctx.workprec():
        r = contour_radius(params, ctx.mantissa_bits)
        if not r > 0:
            raise InputError("no admissible contour radius")
        xc = sys.cutoff
        line = [Segment(-mp.inf, -xc), Segment(xc, mp.inf)]
        vals = []
        for k in range(points):
            th = 2 * mp.pi * (k + mp.mpf(1) / 2) / points
            y = r * mp.expj(th)
            Y, dY = _assemble(sys, y, _cauchy(sys, y, None, ctx, path=line))
            vals.append((y, _trace_sigma3(Y, dY)))

        def rule(sub):
            m = len(sub)
            a = -mp.fsum(tr for _, tr in sub) / (2 * m)
            b = N * mp.fsum(tr / y for y, tr in sub) / (4 * m)
            return a, b

        d1, d2 = rule(vals)
        # every other node still forms a shifted trapezoid rule
        e1, e2 = rule(vals[::2])
        change = max(abs(d1 - e1), abs(d2 - e2))
        return d1, d2, change


@dataclass
class RHCheckReport:
    params: ModelParams
    jump_residual_max: object
    det_residual_max: object
    id_v1: dict
    id_v2: dict

    def to_json(self) -> dict:
        def s(v):
            return mp.nstr(v, 17)

        return {
            "params": self.params.as_json(),
            "jump_residual_max": s(self.jump_residual_max),
            "det_residual_max": s(self.det_residual_max),
            "id_v1": {k: s(v) for k, v in self.id_v1.items()},
            "id_v2": {k: s(v) for k, v in self.id_v2.items()},
        }


def _log_g(N, v1, v2, ctx):
    with ctx.workprec():
        p = ModelParams(N, N * mp.sqrt(v2), v1 * mp.sqrt(N))
    return partition_exact(p, ctx).log_G_N


def check_identities(params: ModelParams, ctx: PrecisionContext, points: int = 32, step="1e-6") -> RHCheckReport:
    """Contour identities against centered differences of the exact log G_N,
    plus jump and determinant residuals of Y at a few points."""
    N = params.N
    if N > 10:
        raise InputError("check_identities is meant for N <= 10")
    sys = scaled_system(params, ctx)
    c1, c2, _ = contour_identities(params, sys, ctx, points)
    with ctx.workprec():
        h = mp.mpf(step)
        v1, v2 = params.v1, params.v2
        fd1 = (_log_g(N, v1 + h, v2, ctx) - _log_g(N, v1 - h, v2, ctx)) / (2 * h)
        fd2 = (_log_g(N, v1, v2 + h, ctx) - _log_g(N, v1, v2 - h, ctx)) / (2 * h)

        def rel(c, f):
            c = mp.re(c) if abs(mp.im(c)) < 1e-20 * max(1, abs(c)) else c
            return abs(c - f) / abs(f) if f != 0 else abs(c - f)

        jump = mp.mpf(0)
        for x in ("0.5", "-0.7", "1.3"):
            x = mp.mpf(x)
            Yp = y_matrix(x, "+", params, sys, ctx)
            Ym = y_matrix(x, "-", params, sys, ctx)
            J = Matrix2(1, weight_scaled(x, params), 0, 1)
            jump = max(jump, Yp.max_diff(Ym @ J))
        det = mp.mpf(0)
        for y in (mp.mpc(0.3, 0.5), mp.mpc(-1, 0.2), mp.mpc(2, -1), mp.mpc(0, 2)):
            det = max(det, abs(y_matrix(y, None, params, sys, ctx).det() - 1))
        return RHCheckReport(
            params,
            jump,
            det,
            {"contour": mp.re(c1), "finite_diff": fd1, "rel_err": rel(c1, fd1)},
            {"contour": mp.re(c2), "finite_diff": fd2, "rel_err": rel(c2, fd2)},
        )
