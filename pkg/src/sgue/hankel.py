"""Hankel determinants of the singular weight: norms h_j, recurrence
coefficients, E_N(z, t), G_N, B_N, Taylor coefficients in t and the
Berry-Shukla moments built from them."""

from __future__ import annotations

from dataclasses import dataclass, field

import mpmath as mp

from .moments import MomentCache, MomentTable, ModelParams, gaussian_side_moment, moment_table
from .precision import InputError, PrecisionContext, integrate_adaptive, to_decimal

__all__ = [
    "PrecisionError",
    "PositiveDefinitenessError",
    "HankelFactorization",
    "PartitionResult",
    "z_gue",
    "factorize",
    "partition_exact",
    "partition_series",
    "b_n",
    "taylor_coeff",
    "berry_shukla_moment",
    "hankel_det_direct",
]


class PrecisionError(ArithmeticError):
    """Working precision is not sufficient for the requested result."""


class PositiveDefinitenessError(PrecisionError):
    """A non-positive pivot appeared in the Hankel factorization."""


@dataclass
class HankelFactorization:
    """h_j, monic orthogonal polynomials and their recurrence.

    ``a`` holds a_0..a_{n-2} and ``b`` holds b_1..b_{n-1} (index shifted by
    one, so ``b[0]`` is b_1) for
    pi_{j+1}(y) = (y - a_j) pi_j(y) - b_j pi_{j-1}(y).
    ``polys[j]`` lists the coefficients of pi_j in ascending order.
    """

    params: ModelParams
    norms: list
    a: list
    b: list
    polys: list
    log_det: object
    condition: object
    mantissa_bits: int

    @property
    def n(self) -> int:
        return len(self.norms)

    def scaled(self):
        """Norms and recurrence in the variable y = x / sqrt(N)."""
        N = self.params.N
        with mp.workprec(self.mantissa_bits):
            sN = mp.sqrt(N)
            norms = [h / sN ** (2 * j + 1) for j, h in enumerate(self.norms)]
            a = [x / sN for x in self.a]
            b = [x / N for x in self.b]
            polys = [[c / sN ** (j - k) for k, c in enumerate(p)] for j, p in enumerate(self.polys)]
        return norms, a, b, polys

    def poly_value(self, j: int, y):
        """pi_j(y) by Horner's rule in the original variable."""
        acc = 0
        for c in reversed(self.polys[j]):
            acc = acc * y + c
        return acc


@dataclass
class PartitionResult:
    params: ModelParams
    E_N: object
    log_G_N: object
    log_Z_N: object
    log_E_N: object = None
    mantissa_bits: int = 512
    retries: int = 0
    factorization: HankelFactorization | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        digits = int(self.mantissa_bits * 0.30103 / 2)
        h = self.factorization.norms if self.factorization else []
        return {
            "N": self.params.N,
            "z": self.params.as_json()["z"],
            "t": self.params.as_json()["t"],
            "E_N": to_decimal(self.E_N, digits),
            "log_G_N": to_decimal(self.log_G_N, digits),
            "h": [to_decimal(x, digits) for x in h],
            "mantissa_bits": self.mantissa_bits,
        }


def z_gue(N: int, ctx: PrecisionContext):
    """log Z_N = (N/2) log(2 pi) + sum_{j<N} log j!."""
    if N < 1:
        raise InputError("N must be positive")
    with ctx.workprec():
        return N * mp.log(2 * mp.pi) / 2 + sum((mp.loggamma(j + 1) for j in range(1, N)), mp.mpf(0))


def _ldl(H, n, bits):
    """Unit lower L and diagonal D with H = L D L^T (no pivoting)."""
    L = [[mp.mpf(0)] * n for _ in range(n)]
    D = [mp.mpf(0)] * n
    cond = mp.mpf(1)
    for j in range(n):
        s = H[j][j] - mp.fsum(L[j][k] ** 2 * D[k] for k in range(j))
        if s <= 0:
            raise PositiveDefinitenessError(
                f"pivot {j} is not positive at {bits} bits; moments too inaccurate or precision too low"
            )
        D[j] = s
        L[j][j] = mp.mpf(1)
        cond = max(cond, H[j][j] / s)
        for i in range(j + 1, n):
            L[i][j] = (H[i][j] - mp.fsum(L[i][k] * L[j][k] * D[k] for k in range(j))) / s
    return L, D, cond


def _unit_lower_inverse(L, n):
    M = [[mp.mpf(0)] * n for _ in range(n)]
    for i in range(n):
        M[i][i] = mp.mpf(1)
        for j in range(i - 1, -1, -1):
            M[i][j] = -mp.fsum(L[i][k] * M[k][j] for k in range(j, i))
    return M


def factorize(table: MomentTable, ctx: PrecisionContext, n: int | None = None) -> HankelFactorization:
    """LDL^T factorization of the n x n Hankel matrix (default n = N).

    Row j of L^{-1} holds the monic orthogonal polynomial pi_j and D_j = h_j.
    Raises PrecisionError when max_j mu_{2j}/h_j exceeds 2^(bits-64).
    """
    n = table.params.N if n is None else n
    if len(table.entries) < 2 * n - 1:
        raise InputError(f"need {2 * n - 1} moments, table has {len(table.entries)}")
    bits = ctx.mantissa_bits
    with ctx.workprec():
        H = [[mp.mpf(table.entries[j + k]) for k in range(n)] for j in range(n)]
        L, D, cond = _ldl(H, n, bits)
        if cond > mp.ldexp(1, bits - 64):
            raise PrecisionError(f"Hankel condition estimate 2^{float(mp.log(cond, 2)):.0f} too large for {bits} bits")
        M = _unit_lower_inverse(L, n)
        polys = [[M[j][k] for k in range(j + 1)] for j in range(n)]
        sub = [mp.mpf(0)] + [polys[j][j - 1] for j in range(1, n)]
        a = [sub[j] - sub[j + 1] for j in range(n - 1)]
        b = [D[j] / D[j - 1] for j in range(1, n)]
        log_det = mp.fsum(mp.log(d) for d in D)
    return HankelFactorization(table.params, D, a, b, polys, log_det, cond, bits)


def hankel_det_direct(table: MomentTable, ctx: PrecisionContext, n: int | None = None):
    """det(mu_{j+k}) by mpmath's LU determinant; used as an oracle."""
    n = table.params.N if n is None else n
    with ctx.workprec():
        return mp.det(mp.matrix(table.hankel(n)))


def partition_exact(
    params: ModelParams,
    ctx: PrecisionContext,
    cache: MomentCache | None = None,
    max_retries: int = 2,
) -> PartitionResult:
    """E_N(z, t) = det(mu_{j+k}) / Z_N from moments of the unscaled weight.

    On PrecisionError the mantissa width is doubled, at most ``max_retries``
    times.
    """
    c = ctx
    for attempt in range(max_retries + 1):
        try:
            table = moment_table(params, c, cache=cache)
            fac = factorize(table, c)
            break
        except PrecisionError:
            if attempt == max_retries:
                raise
            c = c.with_bits(2 * c.mantissa_bits)
    N = params.N
    with c.workprec():
        logZ = z_gue(N, c)
        logE = fac.log_det - logZ
        # scaled route: h~_j = N^{-(2j+1)/2} h_j
        logN = mp.log(N)
        logG = mp.fsum(mp.log(h) - (2 * j + 1) * logN / 2 for j, h in enumerate(fac.norms))
        logG_alt = logE + logZ - N * N * logN / 2
        if abs(logG - logG_alt) > 16 * c.eps * (abs(logG) + N * N * logN + 1):
            raise PrecisionError("scaled and unscaled log G_N disagree")
        E = mp.exp(logE)
    return PartitionResult(params, E, logG, logZ, logE, c.mantissa_bits, attempt, fac)


def b_n(N: int, ctx: PrecisionContext, cache: MomentCache | None = None):
    """B_N = E_N(N^{-1/2}, 0)."""
    with mp.workprec(ctx.mantissa_bits + 32):
        z = 1 / mp.sqrt(N)
    return partition_exact(ModelParams(N, z, 0), ctx, cache=cache).E_N


# ---------------------------------------------------------------- power series in t


def _ser_mul(p, q, M):
    return [mp.fsum(p[i] * q[k - i] for i in range(k + 1)) for k in range(M + 1)]


def _ser_div(p, q, M):
    out = []
    for k in range(M + 1):
        out.append((p[k] - mp.fsum(out[i] * q[k - i] for i in range(k))) / q[0])
    return out


def partition_series(N: int, z, order: int, ctx: PrecisionContext):
    """Coefficients E_{N,0..order}(z) of E_N(z, t) as a power series in t.

    The moments expand as mu_j(z, t) = sum_k t^k/k! nu_{j-k}(z) with nu the
    closed-form t = 0 moments (negative indices included), and the Hankel
    determinant is eliminated in the ring of truncated series.
    """
    if order < 0:
        raise InputError("order must be nonnegative")
    with ctx.workprec():
        z = mp.mpf(z)
        if z <= 0:
            raise InputError("series route needs z > 0")
        M = order
        nu = {i: gaussian_side_moment(i, z, ctx) for i in range(-M, 2 * N - 1)}
        fact = [mp.factorial(k) for k in range(M + 1)]
        mu = [[nu[i - k] / fact[k] for k in range(M + 1)] for i in range(2 * N - 1)]
        A = [[list(mu[j + k]) for k in range(N)] for j in range(N)]
        det = [mp.mpf(1)] + [mp.mpf(0)] * M
        for p in range(N):
            piv = A[p][p]
            if piv[0] <= 0:
                raise PositiveDefinitenessError(f"pivot {p} not positive")
            det = _ser_mul(det, piv, M)
            for i in range(p + 1, N):
                f = _ser_div(A[i][p], piv, M)
                for k in range(p + 1, N):
                    fk = _ser_mul(f, A[p][k], M)
                    A[i][k] = [x - y for x, y in zip(A[i][k], fk)]
        scale = mp.exp(-z_gue(N, ctx))
        return [c * scale for c in det]


def taylor_coeff(
    N: int, z, m: int, ctx: PrecisionContext, method: str = "fd", cache: MomentCache | None = None
):
    """E_{Nm}(z), the t^m coefficient of E_N(z, t).

    ``method="fd"``: m-th central difference of E_N(z, .) at t = 0 with step
    h = 2^(-bits/(2m+4)), Richardson-extrapolated once.
    ``method="series"``: exact truncated power-series elimination.
    """
    if m < 0 or m > 8:
        raise InputError("m must lie in 0..8")
    if method == "series":
        return partition_series(N, z, m, ctx)[m]
    if method != "fd":
        raise InputError(f"unknown method {method!r}")
    with ctx.workprec():
        z = mp.mpf(z)
        if z <= 0:
            raise InputError("z must be positive")
        h = mp.ldexp(mp.mpf(1), -(ctx.mantissa_bits // (2 * m + 4)))
        values = {}

        def E(t):
            key = mp.nstr(t, 40)
            if key not in values:
                values[key] = partition_exact(ModelParams(N, z, t), ctx, cache=cache).E_N
            return values[key]

        def central(step):
            if m == 0:
                return E(mp.mpf(0))
            s = mp.fsum(
                (-1) ** k * mp.binomial(m, k) * E((mp.mpf(m) / 2 - k) * step) for k in range(m + 1)
            )
            return s / step**m / mp.factorial(m)

        d1, d2 = central(h), central(h / 2)
        rich = (4 * d2 - d1) / 3
        scale = max(abs(rich), E(mp.mpf(0)))
        if abs(rich - d2) > mp.ldexp(scale, -(ctx.mantissa_bits // 16)):
            raise PrecisionError("finite-difference extrapolation did not settle; raise precision")
        return rich


def berry_shukla_moment(N: int, m: int, ctx: PrecisionContext):
    """M_{Nm} = 2^{1-m} (m (m+1) ... 2m) int_0^inf z^{2m-1} E_{N,2m}(z) dz.

    E_{N,2m} is taken from the exact series route; the z-integral runs over
    the whole half-line with a double-exponential rule whose tail scan stops
    once terms fall below 2^-(bits+16); convergence is judged at
    relative tolerance 2^-(bits/4).
    """
    if not (1 <= N <= 6) or not (1 <= m <= 2):
        raise InputError("desk-scale limits: 1 <= N <= 6, 1 <= m <= 2")
    qctx = PrecisionContext(ctx.mantissa_bits, rel_tol=mp.ldexp(mp.mpf(1), -(ctx.mantissa_bits // 4)))

    def f(zz):
        return zz ** (2 * m - 1) * partition_series(N, zz, 2 * m, ctx)[2 * m]

    res = integrate_adaptive(f, (0, mp.inf), qctx)
    with ctx.workprec():
        pref = mp.ldexp(mp.mpf(1), 1 - m) * mp.fprod(range(m, 2 * m + 1))
        return pref * res.value
