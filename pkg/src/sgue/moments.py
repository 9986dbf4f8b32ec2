"""Power moments of the singular weight

    w(x) = exp(-z^2/(2 x^2) + t/x - x^2/2)

in the original (unscaled) variable, with error estimates and an optional
on-disk cache.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

import mpmath as mp

from .precision import InputError, PrecisionContext, bessel_k_half, integrate_adaptive, to_decimal

__all__ = [
    "ModelParams",
    "MomentTable",
    "MomentCache",
    "weight_value",
    "moment",
    "moment_table",
    "moment_vector",
    "gaussian_side_moment",
    "moment_taylor_oracle",
]


def _canon(v):
    if isinstance(v, bool):
        raise InputError("boolean is not a number")
    if isinstance(v, (int, mp.mpf)):
        return v
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        mp.mpf(v)  # validates
        return v
    return mp.mpf(v)


@dataclass(frozen=True)
class ModelParams:
    """Matrix size and the two weight parameters.

    ``z`` and ``t`` keep the caller's exact representation (decimal strings
    for floats) so they convert at whatever precision is active.
    """

    N: int
    z: object = 0
    t: object = 0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise InputError("N must be a positive integer")
        object.__setattr__(self, "z", _canon(self.z))
        object.__setattr__(self, "t", _canon(self.t))
        if mp.mpf(self.z) < 0:
            raise InputError("z must be nonnegative")

    @property
    def zm(self):
        return mp.mpf(self.z)

    @property
    def tm(self):
        return mp.mpf(self.t)

    @property
    def v1(self):
        return self.tm / mp.sqrt(self.N)

    @property
    def v2(self):
        return (self.zm / self.N) ** 2

    def with_(self, **kw) -> "ModelParams":
        d = {"N": self.N, "z": self.z, "t": self.t}
        d.update(kw)
        return ModelParams(**d)

    def as_json(self) -> dict:
        return {"N": self.N, "z": _str(self.z), "t": _str(self.t)}


def _str(v) -> str:
    if isinstance(v, mp.mpf):
        return to_decimal(v, max(17, int(v._mpf_[3] * 0.30103) + 3))
    return str(v)


@dataclass
class MomentTable:
    params: ModelParams
    entries: list
    error_bounds: list
    mantissa_bits: int = 512

    def __post_init__(self):
        if len(self.entries) != len(self.error_bounds):
            raise InputError("entries and error_bounds differ in length")

    def __len__(self):
        return len(self.entries)

    def hankel(self, n: int | None = None):
        """The n x n moment matrix (mu_{j+k}) as nested lists."""
        n = self.params.N if n is None else n
        return [[self.entries[j + k] for k in range(n)] for j in range(n)]

    def to_json(self) -> dict:
        digits = int(self.mantissa_bits * 0.30103) + 5
        return {
            "params": self.params.as_json(),
            "mantissa_bits": self.mantissa_bits,
            "entries": [to_decimal(e, digits) for e in self.entries],
            "error_bounds": [mp.nstr(e, 6) for e in self.error_bounds],
        }

    @classmethod
    def from_json(cls, d: dict) -> "MomentTable":
        p = d["params"]
        bits = int(d.get("mantissa_bits", 512))
        with mp.workprec(bits):
            return cls(
                ModelParams(int(p["N"]), p["z"], p["t"]),
                [mp.mpf(s) for s in d["entries"]],
                [mp.mpf(s) for s in d["error_bounds"]],
                bits,
            )


class MomentCache:
    """One JSON file per (N, z, t, mantissa_bits) under ``root``."""

    def __init__(self, root=None):
        if root is None:
            root = os.environ.get("SGUE_CACHE_DIR", ".sgue-cache")
        self.root = Path(root)

    def path_for(self, params: ModelParams, bits: int) -> Path:
        key = f"{params.N}|{_str(params.z)}|{_str(params.t)}|{bits}"
        digest = hashlib.sha1(key.encode()).hexdigest()[:16]
        return self.root / f"moments_N{params.N}_b{bits}_{digest}.json"

    def load(self, params: ModelParams, bits: int):
        path = self.path_for(params, bits)
        if not path.exists():
            return None
        with open(path) as fh:
            table = MomentTable.from_json(json.load(fh))
        if table.params.as_json() != params.as_json():
            return None
        return table

    def store(self, table: MomentTable) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.path_for(table.params, table.mantissa_bits)
        tmp = path.with_suffix(".tmp")
        with open(tmp, "w") as fh:
            json.dump(table.to_json(), fh)
        os.replace(tmp, path)
        return path


# exponents below this are treated as underflow (the usual binary exponent range)
_UNDERFLOW = -(2**31) * 0.6931471805599453


def weight_value(x, params: ModelParams):
    """w(x); the essential zero at x = 0 is returned as exactly 0 when z > 0."""
    x = mp.mpf(x)
    z, t = params.zm, params.tm
    if x == 0:
        if z > 0:
            return mp.mpf(0)
        if t != 0:
            raise InputError("w has a pole in its exponent at x = 0 when z = 0 and t != 0")
        return mp.mpf(1)
    e = -z * z / (2 * x * x) + t / x - x * x / 2
    if e < _UNDERFLOW:
        return mp.mpf(0)
    return mp.exp(e)


# in-process memo: longest table computed for (z, t, bits, tol)
_MEMO: dict = {}


def _cutoff(z, t, bits):
    """Point below which |x^j w(+-x)| < 2^-(bits+16) for all j >= 0."""
    if z == 0:
        return mp.mpf(0)
    L = (bits + 16) * mp.log(2)
    at = abs(t)
    xc = z * z / (at + mp.sqrt(at * at + 2 * z * z * L))
    return min(xc, mp.mpf(1))


def moment_vector(count: int, params: ModelParams, ctx: PrecisionContext):
    """mu_0..mu_{count-1} from a single quadrature pass.

    Both half-lines are folded onto (x_c, inf): the integrand at x carries
    x^j (e^{t/x} + (-1)^j e^{-t/x}) e^{-z^2/(2x^2) - x^2/2}. Below x_c the
    integrand is below 2^-(bits+16) and that piece is bounded analytically.
    """
    if count < 1:
        raise InputError("count must be positive")
    key = (_str(params.z), _str(params.t), ctx.mantissa_bits, str(ctx.rel_tol))
    hit = _MEMO.get(key)
    if hit is not None and len(hit[0]) >= count:
        return list(hit[0][:count]), list(hit[1][:count])
    with ctx.workprec():
        z, t = params.zm, params.tm
        if z == 0 and t != 0:
            raise InputError("z = 0 with t != 0: the weight is not integrable at 0")
        z2h = z * z / 2

        def f(x):
            base = mp.exp(-z2h / (x * x) - x * x / 2)
            if t != 0:
                ep = base * mp.exp(t / x)
                em = base * mp.exp(-t / x)
            else:
                ep = em = base
            even, odd = ep + em, ep - em
            out = []
            p = mp.mpf(1)
            for j in range(count):
                out.append(p * (even if j % 2 == 0 else odd))
                p *= x
            return out

        xc = _cutoff(z, t, ctx.mantissa_bits)
        res = integrate_adaptive(f, (xc, mp.inf), ctx)
        tail = 2 * xc * mp.ldexp(mp.mpf(1), -(ctx.mantissa_bits + 16))
        vals = list(res.value)
        errs = [e + tail for e in res.error_bound]
    _MEMO[key] = (vals, errs)
    return list(vals), list(errs)


def moment(j: int, params: ModelParams, ctx: PrecisionContext):
    """(mu_j, error bound) for the weight at ``params``."""
    if j < 0:
        raise InputError("j must be nonnegative")
    vals, errs = moment_vector(j + 1, params, ctx)
    return vals[j], errs[j]


def moment_table(params: ModelParams, ctx: PrecisionContext, cache: MomentCache | None = None, count=None):
    """mu_0..mu_{2N-2} (or ``count`` entries), read/write-through ``cache``."""
    n = 2 * params.N - 1 if count is None else count
    if cache is not None and count is None:
        hit = cache.load(params, ctx.mantissa_bits)
        if hit is not None:
            return hit
    vals, errs = moment_vector(n, params, ctx)
    table = MomentTable(params, vals, errs, ctx.mantissa_bits)
    if cache is not None and count is None:
        cache.store(table)
    return table


def gaussian_side_moment(i: int, z, ctx: PrecisionContext):
    """Integral over the real line of x^i exp(-z^2/(2x^2) - x^2/2), any integer i.

    Zero for odd i; for even i it is 2 z^{(i+1)/2} K_{(i+1)/2}(z), using
    K_{-nu} = K_nu for negative orders (requires z > 0 when i < 0).
    """
    if i % 2:
        return mp.mpf(0)
    with ctx.workprec():
        z = mp.mpf(z)
        if z == 0:
            if i < 0:
                raise InputError("negative moments diverge at z = 0")
            # (i-1)!! sqrt(2 pi)
            return mp.sqrt(2 * mp.pi) * mp.fac2(i - 1)
        order2 = i + 1  # twice the Bessel order, odd
        n = (abs(order2) - 1) // 2
        return 2 * z ** (mp.mpf(order2) / 2) * bessel_k_half(n, z, ctx)


def moment_taylor_oracle(j: int, params: ModelParams, ctx: PrecisionContext, terms: int = 200):
    """mu_j(z, t) from sum_k t^k/k! * nu_{j-k}(z), with nu the t = 0 moments
    in closed Bessel form. Independent of the quadrature route."""
    with ctx.workprec():
        t = params.tm
        if t == 0:
            return gaussian_side_moment(j, params.z, ctx)
        s = mp.mpf(0)
        tk = mp.mpf(1)
        small = 0
        for k in range(terms):
            term = tk * gaussian_side_moment(j - k, params.z, ctx)
            s += term
            if term != 0 and abs(term) < ctx.eps * abs(s):
                small += 1
                if small > 3:
                    break
            tk = tk * t / (k + 1)
        return s
