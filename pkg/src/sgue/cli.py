"""Command-line front end: ``sgue <command> [flags]``.

Numbers are printed as decimal strings so JSON output keeps full precision.
Exit codes: 0 success, 1 verification failure, 2 bad flags or input,
3 precision still insufficient after retries.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import mpmath as mp

from .precision import InputError, PrecisionContext, QuadratureError, to_decimal

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_PRECISION = 0, 1, 2, 3


def _default_prec() -> int:
    raw = os.environ.get("SGUE_DEFAULT_PREC", "512")
    try:
        return int(raw)
    except ValueError:
        return 512


def _jsonable(v, digits=40):
    if isinstance(v, bool) or v is None or isinstance(v, (int, str)):
        return v
    if isinstance(v, mp.mpc):
        return {"re": to_decimal(v.real, digits), "im": to_decimal(v.imag, digits)}
    if isinstance(v, mp.mpf):
        if v != 0 and abs(v) < mp.mpf("1e-6"):
            return mp.nstr(v, digits)
        return to_decimal(v, digits)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, complex):
        return {"re": repr(v.real), "im": repr(v.imag)}
    if isinstance(v, dict):
        return {k: _jsonable(x, digits) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x, digits) for x in v]
    if hasattr(v, "to_json"):
        return v.to_json()
    return str(v)


def _emit(obj, out):
    json.dump(obj, out, indent=1)
    out.write("\n")


def _cache(args):
    if args.no_cache:
        return None
    from .moments import MomentCache

    return MomentCache(args.cache_dir)


# ------------------------------------------------------------------ commands


def cmd_moments(args, ctx, out):
    from .moments import ModelParams, moment_table

    table = moment_table(ModelParams(args.n, args.z, args.t), ctx, cache=_cache(args))
    _emit(table.to_json(), out)
    return EXIT_OK


def cmd_partition(args, ctx, out):
    from .hankel import partition_exact
    from .moments import ModelParams

    _emit(partition_exact(ModelParams(args.n, args.z, args.t), ctx, cache=_cache(args)).to_json(), out)
    return EXIT_OK


def cmd_bn(args, ctx, out):
    from .hankel import b_n

    val = b_n(args.n, ctx, cache=_cache(args))
    _emit({"N": args.n, "B_N": to_decimal(val, int(ctx.mantissa_bits * 0.30103 / 2))}, out)
    return EXIT_OK


def cmd_equilibrium(args, ctx, out):
    from .equilibrium import lagrange_l, solve_branch_points, verify_equilibrium

    eq = lagrange_l(solve_branch_points(args.v2, ctx), ctx)
    rep = verify_equilibrium(eq, ctx, n=args.grid)
    _emit({"equilibrium": eq.to_json(), "verification": _jsonable(rep, 17)}, out)
    return EXIT_OK


def cmd_asymptotic(args, ctx, out):
    from .asymptotics import predict
    from .moments import ModelParams

    rep = predict(ModelParams(args.n, args.z, args.t), ctx, c1=args.c1, c2=args.c2, cache=_cache(args))
    _emit(rep.to_json(), out)
    return EXIT_OK


def cmd_compare(args, ctx, out):
    from .asymptotics import convergence_csv, predict
    from .moments import ModelParams

    ns = sorted(int(x) for x in args.n_list.split(",") if x.strip())
    if not ns:
        raise InputError("--n-list is empty")
    reps = [predict(ModelParams(n, args.z, args.t), ctx, c1=args.c1, c2=args.c2, cache=_cache(args)) for n in ns]
    if args.format == "json":
        _emit([r.to_json() for r in reps], out)
    else:
        out.write(convergence_csv(reps))
    return EXIT_OK


def cmd_taylor(args, ctx, out):
    from .hankel import taylor_coeff

    val = taylor_coeff(args.n, args.z, args.m, ctx, method=args.method, cache=_cache(args))
    _emit({"N": args.n, "z": args.z, "m": args.m, "coefficient": to_decimal(val, int(ctx.mantissa_bits * 0.30103 / 4))}, out)
    return EXIT_OK


def cmd_qmoment(args, ctx, out):
    from .hankel import berry_shukla_moment

    val = berry_shukla_moment(args.n, args.m, ctx)
    _emit({"N": args.n, "m": args.m, "M": to_decimal(val, 20)}, out)
    return EXIT_OK


def cmd_mc(args, ctx, out):
    from .mc import estimate_en

    res = estimate_en(args.n, args.z, args.t, args.samples, seed=args.seed)
    d = res.to_json()
    d.update({"N": args.n, "z": args.z, "t": args.t, "seed": args.seed})
    _emit(d, out)
    return EXIT_OK


# ------------------------------------------------------------------ verification suites


def _suite_identities(args, ctx):
    from .moments import ModelParams
    from .rhverify import check_identities

    rows, ok = [], True
    for N, z, t in ((4, "1", "0.3"), (6, "0.8", "0.2")):
        r = check_identities(ModelParams(N, z, t), ctx)
        good = (
            r.id_v1["rel_err"] < 1e-5
            and r.id_v2["rel_err"] < 1e-5
            and r.jump_residual_max < 1e-8
            and r.det_residual_max < 1e-10
        )
        ok &= bool(good)
        d = r.to_json()
        d["pass"] = bool(good)
        rows.append(d)
    return ok, rows


def _suite_gfun(args, ctx):
    from .equilibrium import lagrange_l, solve_branch_points, verify_equilibrium

    # the 1e-40 constraint threshold needs more than 128 bits
    c = ctx if ctx.mantissa_bits >= 256 else PrecisionContext(256)
    eq = lagrange_l(solve_branch_points(args.v2, c), c)
    rep = verify_equilibrium(eq, c, n=50)
    good = (
        rep["constraints"] < mp.mpf("1e-40")
        and max(rep["sigma"], rep["left_jump"], rep["gap_jump"]) < 1e-8
        and rep["inequality_margin"] < 0
    )
    d = _jsonable(rep, 17)
    d["pass"] = bool(good)
    return bool(good), [d]


def _suite_outer(args, ctx):
    from .elliptic import curve_data, verify_outer
    from .equilibrium import solve_branch_points

    c = ctx if ctx.mantissa_bits <= 128 else PrecisionContext(128)
    cd = curve_data(solve_branch_points(args.v2, c), c)
    rows, ok = [], True
    cache: dict = {}
    for N in (8, 9):
        for v1 in ("0", "0.2"):
            with c.workprec():
                r = verify_outer(N, mp.mpf(v1), cd, c, n=args.grid, u_cache=cache)
            good = (
                max(r["sigma_jump"], r["gap_jump"]) < 1e-8
                and r["det_residual"] < 1e-10
                and abs(r["decay_ratio"] - 10) < 2
            )
            ok &= bool(good)
            d = _jsonable(r, 17)
            d["pass"] = bool(good)
            rows.append(d)
    return ok, rows


def _suite_smallv2(args, ctx):
    from .asymptotics import small_v2_report

    rep = small_v2_report(["1e-3", "1e-6", "1e-9"], ctx)
    mono = rep["monotone"]
    mid = rep["rows"][1]
    good = mono["lambda"] and mono["K0"] and mono["Pi"] and mid["K0"] < 1e-2 and mid["u_inf"] < 1e-2
    return bool(good), [_jsonable(rep, 17) | {"pass": bool(good)}]


SUITES = {
    "identities": _suite_identities,
    "gfun": _suite_gfun,
    "outer": _suite_outer,
    "smallv2": _suite_smallv2,
}


def cmd_verify(args, ctx, out):
    names = list(SUITES) if args.suite == "all" else [args.suite]
    result, ok = {}, True
    for name in names:
        good, rows = SUITES[name](args, ctx)
        result[name] = {"pass": good, "details": rows}
        ok &= good
    result["pass"] = ok
    _emit(result, out)
    return EXIT_OK if ok else EXIT_VERIFY


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    def globals_(parser, suppress):
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        parser.add_argument("--prec", type=int, default=d(_default_prec()), help="mantissa bits (default $SGUE_DEFAULT_PREC or 512)")
        parser.add_argument("--cache-dir", default=d(None), help="moment cache directory (default $SGUE_CACHE_DIR)")
        parser.add_argument("--no-cache", action="store_true", default=d(False), help="do not read or write the moment cache")
        parser.add_argument("--format", choices=["json", "csv"], default=d("json"))

    p = argparse.ArgumentParser(prog="sgue", description=__doc__.splitlines()[0])
    globals_(p, False)
    # the same flags are accepted after the subcommand too
    common = argparse.ArgumentParser(add_help=False)
    globals_(common, True)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_, parents=[common])
        sp.set_defaults(func=fn)
        return sp

    def nzt(sp, t=True):
        sp.add_argument("--n", type=int, required=True)
        sp.add_argument("--z", default="1")
        if t:
            sp.add_argument("--t", default="0")

    nzt(add("moments", cmd_moments, "moments mu_0..mu_{2N-2}"))
    nzt(add("partition", cmd_partition, "exact E_N(z, t)"))
    add("bn", cmd_bn, "B_N = E_N(N^{-1/2}, 0)").add_argument("--n", type=int, required=True)
    sp = add("equilibrium", cmd_equilibrium, "branch points, l and the g-function checks")
    sp.add_argument("--v2", default="1")
    sp.add_argument("--grid", type=int, default=50)
    for name, fn, h in (("asymptotic", cmd_asymptotic, "large-N prediction vs exact"),):
        sp = add(name, fn, h)
        nzt(sp)
        sp.add_argument("--c1", default="1")
        sp.add_argument("--c2", default="1")
    sp = add("compare", cmd_compare, "convergence table over several N")
    sp.add_argument("--n-list", required=True, help="comma separated, e.g. 16,32,64")
    sp.add_argument("--z", default="1")
    sp.add_argument("--t", default="0")
    sp.add_argument("--c1", default="1")
    sp.add_argument("--c2", default="1")
    sp = add("taylor", cmd_taylor, "t^m coefficient of E_N(z, t)")
    nzt(sp, t=False)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--method", choices=["fd", "series"], default="series")
    sp = add("qmoment", cmd_qmoment, "Berry-Shukla moment M_{N,m}")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp = add("mc", cmd_mc, "Monte Carlo estimate of E_N(z, t)")
    nzt(sp)
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp = add("verify", cmd_verify, "run a verification suite")
    sp.add_argument("--suite", choices=["identities", "gfun", "outer", "smallv2", "all"], default="all")
    sp.add_argument("--v2", default="1")
    sp.add_argument("--grid", type=int, default=25)
    return p


def main(argv=None, out=None) -> int:
    from .hankel import PrecisionError

    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    if args.prec < 64:
        print("sgue: --prec must be at least 64", file=sys.stderr)
        return EXIT_USAGE
    if args.format == "csv" and args.command != "compare":
        print("sgue: --format csv is only available for compare", file=sys.stderr)
        return EXIT_USAGE
    ctx = PrecisionContext(args.prec)
    try:
        return args.func(args, ctx, out)
    except (InputError, ValueError) as e:
        print(f"sgue: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (PrecisionError, QuadratureError) as e:
        print(f"sgue: precision insufficient: {e}", file=sys.stderr)
        return EXIT_PRECISION


if __name__ == "__main__":
    sys.exit(main())
