"""Arbitrary-precision plumbing: working context, double-exponential quadrature,
bracketed root finding and the half-integer Bessel K oracle.

Every routine takes a :class:`PrecisionContext` and runs under
``mpmath.workprec(ctx.mantissa_bits)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import mpmath as mp

__all__ = [
    "PrecisionContext",
    "QuadratureResult",
    "QuadratureError",
    "InputError",
    "BracketError",
    "Segment",
    "Arc",
    "Ray",
    "integrate_adaptive",
    "bessel_k_half",
    "find_root_bracketed",
    "to_decimal",
]


class InputError(ValueError):
    """Bad argument, or the integrand produced NaN/inf."""


class BracketError(ValueError):
    pass


class QuadratureError(ArithmeticError):
    """Refinement budget exhausted; ``partial`` holds the last estimate."""

    def __init__(self, message, partial=None, error_bound=None):
        super().__init__(message)
        self.partial = partial
        self.error_bound = error_bound


@dataclass(frozen=True)
class PrecisionContext:
    mantissa_bits: int = 512
    rel_tol: float | None = None
    max_quad_depth: int = 12

    def __post_init__(self):
        if self.mantissa_bits < 64:
            raise InputError("mantissa_bits must be >= 64")
        if self.rel_tol is None:
            object.__setattr__(self, "rel_tol", mp.ldexp(mp.mpf(1), -(self.mantissa_bits // 2)))
        if not 0 < self.rel_tol < 1:
            raise InputError("rel_tol must lie in (0, 1)")
        if self.max_quad_depth < 1:
            raise InputError("max_quad_depth must be positive")

    def workprec(self):
        return mp.workprec(self.mantissa_bits)

    def with_bits(self, bits: int) -> "PrecisionContext":
        """Same depth, new width; the tolerance is re-derived from the width."""
        return PrecisionContext(bits, None, self.max_quad_depth)

    @property
    def eps(self):
        return mp.ldexp(mp.mpf(1), 1 - self.mantissa_bits)


@dataclass
class QuadratureResult:
    value: object
    error_bound: object
    panels_used: int

    def __post_init__(self):
        if self.panels_used < 1:
            raise InputError("panels_used must be >= 1")


def to_decimal(x, digits: int | None = None) -> str:
    """Full-precision decimal string of an mpf (real part only for mpc)."""
    if digits is None:
        digits = mp.mp.dps
    if isinstance(x, mp.mpc):
        x = x.real
    if x == 0:
        return "0"
    with mp.workprec(max(mp.mp.prec, int(digits * 3.33) + 16)):
        return mp.nstr(mp.mpf(x), digits, strip_zeros=False, min_fixed=-mp.inf, max_fixed=mp.inf)


# --------------------------------------------------------------------------
# path pieces
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    """Straight piece from ``a`` to ``b`` (complex allowed).

    ``singular`` marks endpoints where the integrand may blow up like an
    inverse square root; those ends get the substitution
    s = a + (b - a) sin^2(theta) (both ends) or s = a + (b - a) u^2 (one end).
    """

    a: object
    b: object
    singular: tuple = (False, False)


@dataclass(frozen=True)
class Arc:
    """Circular arc ``center + radius*exp(i*phi)`` for phi from phi0 to phi1."""

    center: object
    radius: object
    phi0: object
    phi1: object


@dataclass(frozen=True)
class Ray:
    """Half-line ``a + r*direction`` for r in [0, inf)."""

    a: object
    direction: object = 1


# --------------------------------------------------------------------------
# double-exponential engine on a canonical variable
# --------------------------------------------------------------------------


def _as_list(v):
    if isinstance(v, (list, tuple)):
        return list(v), True
    return [v], False


def _bad(v) -> bool:
    if isinstance(v, mp.mpc):
        return mp.isnan(v.real) or mp.isnan(v.imag) or mp.isinf(v.real) or mp.isinf(v.imag)
    return mp.isnan(v) or mp.isinf(v)


def _de_integrate(g, kind: str, ctx: PrecisionContext):
    """Integrate g over the canonical domain of ``kind``.

    kind = "finite"   : (-1, 1), tanh-sinh
           "half"     : (0, inf), exp-sinh
           "full"     : (-inf, inf), sinh-sinh
    g returns a scalar or a list; the result is in the same shape.
    """
    p = ctx.mantissa_bits
    halfpi = mp.pi / 2
    if kind == "finite":
        tmax = mp.asinh(p * mp.log(2) / mp.pi) + 1
    else:
        tmax = mp.asinh(2 * p * mp.log(2) / mp.pi) + mp.mpf("0.5")
    tiny = mp.ldexp(mp.mpf(1), -p - 16)
    state = {"vec": False, "n": 1}

    def node(tau):
        sh = halfpi * mp.sinh(tau)
        ch = halfpi * mp.cosh(tau)
        if kind == "finite":
            e = mp.exp(-2 * abs(sh))
            # 1 - |tanh| computed without cancellation
            dist = 2 * e / (1 + e)
            x = (1 - dist) if sh >= 0 else (dist - 1)
            w = ch * 4 * e / (1 + e) ** 2
            if dist == 0:
                return None
            return x, w, dist
        if kind == "half":
            x = mp.exp(sh)
            return x, x * ch, None
        x = mp.sinh(sh)
        return x, mp.cosh(sh) * ch, None

    def term(tau, h):
        nw = node(tau)
        if nw is None:
            return None
        x, w, dist = nw
        gx = g(x, dist) if kind == "finite" else g(x)
        if gx is None:
            return [mp.mpf(0)] * state["n"]
        vals, state["vec"] = _as_list(gx)
        state["n"] = len(vals)
        out = []
        for v in vals:
            if _bad(v):
                raise InputError(f"integrand not finite at {mp.nstr(x, 8)}")
            out.append(v * w * h)
        return out

    def negligible(t, acc):
        return all(abs(ti) <= tiny * (abs(ai) + tiny) or ti == 0 for ti, ai in zip(t, acc))

    # level 0: establish the useful tau range in each direction
    h = mp.mpf(1) / 2
    first = term(mp.mpf(0), h)
    acc = list(first)
    absacc = [abs(v) for v in first]
    is_vec = state["vec"]
    bounds = []
    nodes = 1
    for sign in (1, -1):
        k, quiet, last = 1, 0, 0
        while k * h <= tmax:
            t = term(sign * k * h, h)
            if t is None:
                break
            nodes += 1
            acc = [a + b for a, b in zip(acc, t)]
            absacc = [a + abs(b) for a, b in zip(absacc, t)]
            last = k
            quiet = quiet + 1 if negligible(t, acc) else 0
            if quiet >= 4:
                break
            k += 1
        bounds.append((last + 1) * h)
    hi, lo = bounds[0], -bounds[1]
    prev = acc
    err = None
    for level in range(1, ctx.max_quad_depth + 1):
        h = h / 2
        acc = [a / 2 for a in prev]
        absacc = [a / 2 for a in absacc]
        k = 1
        while True:
            tau = lo + (2 * k - 1) * h
            if tau >= hi:
                break
            t = term(tau, h)
            k += 1
            if t is None:
                continue
            nodes += 1
            acc = [a + b for a, b in zip(acc, t)]
            absacc = [a + abs(b) for a, b in zip(absacc, t)]
        err = [abs(a - b) for a, b in zip(acc, prev)]
        ok = all(
            e <= ctx.rel_tol * abs(a) or e <= ctx.rel_tol * s or (e == 0)
            for e, a, s in zip(err, acc, absacc)
        )
        prev = acc
        if ok and level >= 2:
            return acc, err, nodes, is_vec
    raise QuadratureError(
        f"no convergence after {ctx.max_quad_depth} refinements",
        partial=acc if is_vec else acc[0],
        error_bound=err if is_vec else (err[0] if err else None),
    )


def _piece_integrand(f, piece, ctx):
    """Return (g, kind) reducing a path piece to a canonical DE integral."""
    if isinstance(piece, Arc):
        c, r, p0, p1 = piece.center, mp.mpf(piece.radius), mp.mpf(piece.phi0), mp.mpf(piece.phi1)
        mid, half = (p0 + p1) / 2, (p1 - p0) / 2

        def g(x, dist):
            phi = mid + half * x
            e = mp.expj(phi)
            s = c + r * e
            jac = 1j * r * e * half
            vals, vec = _as_list(f(s))
            out = [v * jac for v in vals]
            return out if vec else out[0]

        return g, "finite"
    if isinstance(piece, Ray):
        a, d = piece.a, piece.direction

        def g(x):
            vals, vec = _as_list(f(a + d * x))
            out = [v * d for v in vals]
            return out if vec else out[0]

        return g, "half"
    a, b = piece.a, piece.b
    sl, sr = piece.singular
    ainf = mp.isinf(a) if not isinstance(a, mp.mpc) else False
    binf = mp.isinf(b) if not isinstance(b, mp.mpc) else False
    if ainf and binf:
        sgn = 1 if b > a else -1

        def g(x):
            vals, vec = _as_list(f(sgn * x))
            out = [v * sgn for v in vals]
            return out if vec else out[0]

        return g, "full"
    if binf:
        sgn = 1 if b > 0 else -1

        def g(x):
            return f(a + sgn * x)

        return g, "half"
    if ainf:
        sgn = 1 if a > 0 else -1

        # from +inf to b is minus the integral from b to +inf; from -inf it is
        # the integral of f(b - x) over (0, inf)
        def g(x):
            vals, vec = _as_list(f(b + sgn * x))
            out = [-sgn * v for v in vals]
            return out if vec else out[0]

        return g, "half"
    d = b - a
    prec = ctx.mantissa_bits

    def locate(x, dist):
        # point and jacobian from the exact distance to the nearer end
        left = x < 0
        if sl and sr:
            th = mp.pi / 4 * dist
            s = a + d * mp.sin(th) ** 2 if left else b - d * mp.sin(th) ** 2
            jac = d * mp.sin(2 * th) * mp.pi / 4
        elif sl or sr:
            u = dist / 2 if left else 1 - dist / 2
            s = a + d * u * u if sl else b - d * u * u
            jac = d * u
        else:
            s = a + d * dist / 2 if left else b - d * dist / 2
            jac = d / 2
        return s, jac

    def g(x, dist):
        s, jac = locate(x, dist)
        if s == a or s == b:
            with mp.workprec(3 * prec):
                s, jac = locate(x, dist)
                if s == a or s == b:
                    return None
                vals, vec = _as_list(f(s))
                out = [+(v * jac) for v in vals]
            out = [+v for v in out]
        else:
            vals, vec = _as_list(f(s))
            out = [v * jac for v in vals]
        return out if vec else out[0]

    return g, "finite"


def integrate_adaptive(
    f: Callable,
    path,
    ctx: PrecisionContext,
    singular: tuple = (False, False),
) -> QuadratureResult:
    """Integrate ``f`` along ``path`` to relative tolerance ``ctx.rel_tol``.

    ``path`` is an ``(a, b)`` pair (either end may be ``±mp.inf``), a single
    :class:`Segment`/:class:`Arc`/:class:`Ray`, or a list of pieces whose
    contributions are summed. ``f`` may return a list, in which case the
    value and error bound are lists. Refinement halves the DE step until two
    successive levels agree; the reported bound is that difference.
    """
    with ctx.workprec():
        if isinstance(path, tuple) and len(path) == 2 and not isinstance(path[0], (Segment, Arc, Ray)):
            pieces = [Segment(path[0], path[1], tuple(singular))]
        elif isinstance(path, (Segment, Arc, Ray)):
            pieces = [path]
        else:
            pieces = list(path)
        total = None
        errs = None
        used = 0
        vec = False
        for piece in pieces:
            g, kind = _piece_integrand(f, piece, ctx)
            val, err, n, vec = _de_integrate(g, kind, ctx)
            used += n
            if total is None:
                total, errs = val, err
            else:
                total = [a + b for a, b in zip(total, val)]
                errs = [a + b for a, b in zip(errs, err)]
        if vec:
            return QuadratureResult(total, errs, used)
        return QuadratureResult(total[0], errs[0], used)


# --------------------------------------------------------------------------
# oracle and root finding
# --------------------------------------------------------------------------


def bessel_k_half(n: int, z, ctx: PrecisionContext):
    """K_{n+1/2}(z) from the terminating closed form.

    K_{n+1/2}(z) = sqrt(pi/(2z)) e^{-z} sum_{k=0}^{n} (n+k)! / (k! (n-k)! (2z)^k)
    """
    if n < 0:
        raise InputError("order index must be nonnegative (use K_{-nu} = K_nu)")
    with ctx.workprec():
        z = mp.mpf(z)
        if z <= 0:
            raise InputError("bessel_k_half needs z > 0")
        s = mp.mpf(0)
        two_z = 2 * z
        for k in range(n + 1):
            s += mp.mpf(math.factorial(n + k)) / (math.factorial(k) * math.factorial(n - k)) / two_z**k
        return mp.sqrt(mp.pi / two_z) * mp.exp(-z) * s


def find_root_bracketed(f: Callable, a, b, ctx: PrecisionContext):
    """Root of ``f`` in [a, b] by the Illinois variant of regula falsi.

    A bisection step is forced whenever an iteration fails to halve the
    bracket, so the width shrinks at least geometrically.
    """
    with ctx.workprec():
        a, b = mp.mpf(a), mp.mpf(b)
        fa, fb = f(a), f(b)
        if fa == 0:
            return a
        if fb == 0:
            return b
        if fa * fb > 0:
            raise BracketError("no sign change on the bracket")
        width_tol = ctx.rel_tol * max(abs(a), abs(b), 1)
        kept = 0  # +1: a retained last step, -1: b retained
        for _ in range(4 * ctx.mantissa_bits + 100):
            if abs(b - a) <= width_tol:
                break
            old = abs(b - a)
            c = (a * fb - b * fa) / (fb - fa)
            if not (min(a, b) < c < max(a, b)):
                c = (a + b) / 2
            fc = f(c)
            if fc == 0:
                return c
            if fc * fa < 0:
                b, fb = c, fc
                if kept == 1:
                    fa /= 2
                kept = 1
            else:
                a, fa = c, fc
                if kept == -1:
                    fb /= 2
                kept = -1
            if abs(b - a) > old / 2:
                m = (a + b) / 2
                fm = f(m)
                if fm == 0:
                    return m
                if fm * fa < 0:
                    b, fb = m, fm
                else:
                    a, fa = m, fm
                kept = 0
        return (a + b) / 2
