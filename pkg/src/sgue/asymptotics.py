"""Large-N predictions for E_N(z, t) and the checks that go with them: the
leading exponential factor, its theta-function correction, the t^{2m}
coefficients, the derivative formulas in (v1, v2) and the small-v2 laws
of the curve."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import mpmath as mp

from .elliptic import CurveData, c_constant, curve_data, theta
from .equilibrium import solve_branch_points
from .hankel import b_n, partition_exact
from .moments import MomentCache, ModelParams
from .precision import InputError, PrecisionContext, to_decimal

__all__ = [
    "AsymptoticReport",
    "theorem1_factor",
    "theta_correction",
    "curve_for",
    "predict",
    "corollary_coeff",
    "corollary_for_order",
    "asym_derivatives",
    "small_v2_report",
    "convergence_csv",
]


def theorem1_factor(N: int, z, t, ctx: PrecisionContext):
    """exp(z^2/4 - (9/2^{10/3})(N^{2/3} z^{4/3} - 1) + t^2 N^{1/3}/(2^{5/3} z^{4/3}))."""
    with ctx.workprec():
        z, t = mp.mpf(z), mp.mpf(t)
        if z <= 0:
            raise InputError("z must be positive")
        N = mp.mpf(N)
        z43 = z ** (mp.mpf(4) / 3)
        e = (
            z * z / 4
            - 9 / mp.mpf(2) ** (mp.mpf(10) / 3) * (N ** (mp.mpf(2) / 3) * z43 - 1)
            + t * t * mp.cbrt(N) / (mp.mpf(2) ** (mp.mpf(5) / 3) * z43)
        )
        return mp.exp(e)


def _varsigma(N):
    return -mp.mpf(N) / 2 - mp.mpf(1) / 4


def theta_correction(N: int, z, t, cd: CurveData, ctx: PrecisionContext):
    """sqrt(theta(u_inf + s - a) theta(u_inf + s + a)) with s = -N/2 - 1/4 and
    a = t xi / (2 pi i sqrt N); both arguments are real."""
    with ctx.workprec():
        a = mp.re(mp.mpf(t) * cd.xi / (2j * mp.pi * mp.sqrt(N)))
        base = cd.u_inf + _varsigma(N)
        prod = theta(base - a, cd.Pi, ctx) * theta(base + a, cd.Pi, ctx)
        if abs(mp.im(prod)) > mp.mpf("1e-10") * abs(prod) or mp.re(prod) <= 0:
            raise ArithmeticError(f"theta product {mp.nstr(prod, 10)} is not positive real")
        return mp.sqrt(mp.re(prod))


def curve_for(N: int, z, ctx: PrecisionContext) -> CurveData:
    """Curve data at v2 = (z/N)^2."""
    with ctx.workprec():
        v2 = (mp.mpf(z) / N) ** 2
    return curve_data(solve_branch_points(v2, ctx), ctx)


@dataclass
class AsymptoticReport:
    params: ModelParams
    exact: object
    b_n: object
    leading_factor: object
    theta_factor: object
    ratio: object
    regime_ok: bool
    mantissa_bits: int = 512

    @property
    def prediction(self):
        return self.b_n * self.leading_factor * self.theta_factor

    def to_json(self) -> dict:
        n = int(self.mantissa_bits * 0.30103 / 2)
        out = self.params.as_json()
        for k in ("exact", "b_n", "leading_factor", "theta_factor", "prediction", "ratio"):
            out[k] = to_decimal(getattr(self, k), n)
        out["regime_ok"] = self.regime_ok
        return out


def predict(
    params: ModelParams,
    ctx: PrecisionContext,
    c1=1,
    c2=1,
    cache: MomentCache | None = None,
    cd: CurveData | None = None,
) -> AsymptoticReport:
    """Exact E_N against B_N times the leading factor times the theta
    correction. ``regime_ok`` flags c1 N^{-1/2} < z < c2 N^{1/4}."""
    N = params.N
    exact = partition_exact(params, ctx, cache=cache).E_N
    bn = b_n(N, ctx, cache=cache)
    if cd is None:
        cd = curve_for(N, params.z, ctx)
    with ctx.workprec():
        z = params.zm
        lead = theorem1_factor(N, z, params.tm, ctx)
        th = theta_correction(N, z, params.tm, cd, ctx)
        ratio = exact / (bn * lead * th)
        ok = bool(mp.mpf(c1) / mp.sqrt(N) < z < mp.mpf(c2) * mp.root(N, 4))
    return AsymptoticReport(params, exact, bn, lead, th, ratio, ok, ctx.mantissa_bits)


def corollary_coeff(N: int, z, m: int, ctx: PrecisionContext, bn=None):
    """Leading-order t^{2m} coefficient of E_N(z, t):
    B_N exp(z^2/4 - (9/2^{10/3})(N^{2/3} z^{4/3} - 1)) N^{m/3}/(2^{5m/3} m! z^{4m/3})."""
    if m < 0 or int(m) != m:
        raise InputError("m must be a nonnegative integer")
    if bn is None:
        bn = b_n(N, ctx)
    with ctx.workprec():
        z = mp.mpf(z)
        if z <= 0:
            raise InputError("z must be positive")
        lead = theorem1_factor(N, z, 0, ctx)
        k = mp.mpf(m)
        return bn * lead * mp.mpf(N) ** (k / 3) / (mp.mpf(2) ** (5 * k / 3) * mp.factorial(m) * z ** (4 * k / 3))


def corollary_for_order(N: int, z, order: int, ctx: PrecisionContext, bn=None):
    """The prediction for the t^order coefficient; E_N is even in t, so odd
    orders have no leading-order term and are rejected."""
    if order % 2:
        raise InputError("only even Taylor orders have a leading-order prediction")
    return corollary_coeff(N, z, order // 2, ctx, bn=bn)


def _log_theta_pair(N, v1, cd, ctx):
    a = mp.re(mp.mpmathify(v1) * cd.xi / (2j * mp.pi))
    base = cd.u_inf + _varsigma(N)
    return mp.log(theta(base - a, cd.Pi, ctx) * theta(base + a, cd.Pi, ctx))


def asym_derivatives(N: int, v1, cd: CurveData, ctx: PrecisionContext):
    """Large-N formulas for (d log G_N / d v1, N^{-1} d log G_N / d v2).

    The theta logarithmic derivative is a centered difference in v1 with
    step h = 2^{-bits/4}, checked against step 2h.
    """
    eq = cd.eq
    with ctx.workprec():
        v1 = mp.mpmathify(v1)
        v2 = eq.v2
        l1sq = eq.A1  # lambda1^2
        l2, l3 = eq.lambda2, eq.lambda3
        h = mp.ldexp(mp.mpf(1), -(ctx.mantissa_bits // 4))

        def dlog(step):
            return (_log_theta_pair(N, v1 + step, cd, ctx) - _log_theta_pair(N, v1 - step, cd, ctx)) / (2 * step)

        d1, d2 = dlog(h), dlog(2 * h)
        if abs(d1 - d2) > mp.ldexp(mp.mpf(1), -(ctx.mantissa_bits // 8)) * max(1, abs(d1)):
            raise ArithmeticError("theta derivative did not settle under step doubling")
        pref = mp.pi * 1j * l1sq / (v2 * cd.K0 * cd.xi)
        C = c_constant(v1, cd, ctx)
        dv1 = mp.re(pref * d1) - v1 / (2 * l1sq) - C / (2 * l2 * l3)
        dv2 = N * (mp.mpf(1) / 4 - v2 / 32 * ((l2**-2 - l3**-2) ** 2 + 8 / l1sq**2))
        return dv1, dv2


def small_v2_report(v2_list, ctx: PrecisionContext) -> dict:
    """Deviations from the small-v2 laws of the curve for each v2.

    Columns: lambda (max of the |lambda1|, lambda2 and lambda3 laws), K0
    (|K0 lambda3/(2 pi) - 1|), Pi (ratio to (1/(pi i)) log(lambda2/(16 lambda3^2))),
    Pi_fit (ratio to (1/(pi i)) log(lambda2/(4 lambda3))), u_inf (|u_inf - 1/4|).
    ``monotone`` tells, per column, whether the deviations strictly decrease
    along the list as given.
    """
    rows = []
    for v2 in v2_list:
        with ctx.workprec():
            v2m = mp.mpf(v2)
            if not 0 < v2m < mp.mpf("0.1"):
                raise InputError("v2 must lie in (0, 0.1)")
        eq = solve_branch_points(v2m, ctx)
        cd = curve_data(eq, ctx)
        with ctx.workprec():
            l1 = abs(eq.lambda1)
            lam = max(
                abs(l1 / (mp.mpf(2) ** (-mp.mpf(1) / 6) * mp.cbrt(v2m)) - 1),
                abs(eq.lambda2 / (l1 / mp.sqrt(2)) - 1),
                abs(eq.lambda3 / 2 - 1),
            )
            k0 = abs(cd.K0 * eq.lambda3 / (2 * mp.pi) - 1)
            ip = mp.im(cd.Pi)
            stated = mp.log(16 * eq.lambda3**2 / eq.lambda2) / mp.pi
            fit = mp.log(4 * eq.lambda3 / eq.lambda2) / mp.pi
            rows.append(
                {
                    "v2": v2m,
                    "lambda": lam,
                    "K0": k0,
                    "Pi": abs(ip / stated - 1),
                    "Pi_fit": abs(ip / fit - 1),
                    "u_inf": abs(cd.u_inf - mp.mpf(1) / 4),
                }
            )
    cols = ["lambda", "K0", "Pi", "Pi_fit", "u_inf"]
    monotone = {c: all(rows[i + 1][c] < rows[i][c] for i in range(len(rows) - 1)) for c in cols}
    return {"rows": rows, "monotone": monotone, "columns": cols}


def convergence_csv(reports) -> str:
    """CSV table N, z, t, exact, prediction, ratio, |ratio-1| sorted by N."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "z", "t", "exact", "prediction", "ratio", "abs_ratio_minus_1"])
    for r in sorted(reports, key=lambda r: r.params.N):
        n = int(r.mantissa_bits * 0.30103 / 2)
        j = r.params.as_json()
        w.writerow(
            [
                r.params.N,
                j["z"],
                j["t"],
                to_decimal(r.exact, n),
                to_decimal(r.prediction, n),
                to_decimal(r.ratio, n),
                to_decimal(abs(r.ratio - 1), n),
            ]
        )
    return buf.getvalue()
