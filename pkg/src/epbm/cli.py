"""Command-line front end.

    epbm converge  --problem ks --method epbm-legendre:q=4,alpha=2 ...
    epbm stability --method epbm-legendre:q=4,alpha=2 --grid "-6 1 -4 4 200 200"
    epbm timing    --method epbm-legendre:q=4,alpha=2 --thread-counts "1 2 4"
    epbm coeffs    --method epbm-legendre:q=3,alpha=2
    epbm solve     --problem kdv --h-ladder 0.001:1:2

Every flag can instead live in a config file (--config file, flat
key = value lines); explicit flags win.  Exit codes: 0 success, 2 bad
configuration, 3 divergence or Krylov stall, 4 determinism failure.
"""

import argparse
import sys

from .errors import (
    ConfigurationError,
    DeterminismError,
    DivergenceError,
    KrylovConvergenceError,
)
from .harness import (
    config_from_mapping,
    dump_coefficients,
    load_config_file,
    run_convergence,
    run_solve,
    run_stability_export,
    run_timing,
)


def _parser():
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="flat key = value config file")
    shared.add_argument("--problem", help="registered problem name")
    shared.add_argument("--modes", type=int, help="spectral mode count")
    shared.add_argument("--grid-n", type=int, help="ADR grid points per side")
    shared.add_argument("--t-final", type=float, help="integration horizon")
    shared.add_argument("--regime", help="ADR regime override")
    shared.add_argument("--method", action="append",
                        help="method string; repeatable")
    shared.add_argument("--h-ladder", metavar="H0:RUNGS:RATIO",
                        help="geometric stepsize ladder, e.g. 0.05:4:2")
    shared.add_argument("--reference-h", type=float,
                        help="fine stepsize for the reference")
    shared.add_argument("--reference-method", action="append",
                        help="reference method string; repeatable")
    shared.add_argument("--threads", type=int, help="worker threads per step")
    shared.add_argument("--thread-counts",
                        help="space-separated counts for timing")
    shared.add_argument("--out", help="output file or directory")
    shared.add_argument("--tolerance", type=float,
                        help="Krylov projection tolerance")
    shared.add_argument("--max-dim", type=int,
                        help="Krylov subspace size limit")
    shared.add_argument("--z1-radii", help="space-separated |z1| values")
    shared.add_argument("--z1-rays",
                        help="space-separated rays: neg imag oblique")
    shared.add_argument("--grid", metavar="'RE0 RE1 IM0 IM1 NRE NIM'",
                        help="z2 grid for stability scans")

    top = argparse.ArgumentParser(
        prog="epbm",
        description="block exponential integrators: experiments and exports",
    )
    sub = top.add_subparsers(dest="command", required=True)
    sub.add_parser("converge", parents=[shared],
                   help="stepsize ladder + fitted orders")
    sub.add_parser("stability", parents=[shared],
                   help="stability region CSV export")
    sub.add_parser("timing", parents=[shared],
                   help="threads vs wall time with determinism check")
    sub.add_parser("coeffs", parents=[shared],
                   help="dump method coefficient tables")
    sub.add_parser("solve", parents=[shared],
                   help="single run, final state dump")
    return top


def _mapping_from_args(args):
    mapping = {}
    if args.config:
        mapping.update(load_config_file(args.config))
    direct = {
        "problem": args.problem, "modes": args.modes, "grid-n": args.grid_n,
        "t-final": args.t_final, "regime": args.regime,
        "reference-h": args.reference_h, "threads": args.threads,
        "out": args.out, "tolerance": args.tolerance,
        "max-dim": args.max_dim,
    }
    for key, val in direct.items():
        if val is not None:
            mapping[key] = val
    if args.method:
        mapping["method"] = list(args.method)
    if args.reference_method:
        mapping["reference-method"] = list(args.reference_method)
    if args.h_ladder:
        parts = args.h_ladder.split(":")
        if len(parts) != 3:
            raise ConfigurationError(
                "--h-ladder wants H0:RUNGS:RATIO, got %r" % args.h_ladder
            )
        try:
            mapping["h0"] = float(parts[0])
            mapping["rungs"] = int(parts[1])
            mapping["ratio"] = float(parts[2])
        except ValueError as exc:
            raise ConfigurationError("bad --h-ladder: %s" % exc)
    for key, text in (("thread-counts", args.thread_counts),
                      ("z1-radii", args.z1_radii),
                      ("z1-rays", args.z1_rays),
                      ("grid", args.grid)):
        if text is not None:
            toks = text.split()
            if key == "z1-rays":
                mapping[key] = toks
            else:
                vals = []
                for tok in toks:
                    try:
                        vals.append(float(tok) if "." in tok or "e" in tok
                                    else int(tok))
                    except ValueError:
                        raise ConfigurationError(
                            "bad number %r in --%s" % (tok, key)
                        )
                mapping[key] = vals
    return mapping


def _cmd_converge(cfg, args):
    records, fits, deviation = run_convergence(cfg)
    print("reference deviation: %.3e" % deviation)
    for f in fits:
        print("%-40s order=%6.3f  flag=%s  kept=%d"
              % (f.method, f.order, f.flag, f.kept))
    return 0


def _cmd_stability(cfg, args):
    written = run_stability_export(cfg)
    for path in written:
        print(path)
    return 0


def _cmd_timing(cfg, args):
    records = run_timing(cfg)
    for r in records:
        print("threads=%d  %8.3fs  speedup=%.2f  checksum=%s"
              % (r.threads, r.seconds, r.speedup, r.checksum))
    return 0


def _cmd_coeffs(cfg, args):
    for text in cfg.methods:
        sys.stdout.write(dump_coefficients(text))
    return 0


def _cmd_solve(cfg, args):
    final = run_solve(cfg)
    print("final state: %d entries, norm %.6e"
          % (final.size, float(abs(final).max())))
    return 0


_COMMANDS = {
    "converge": _cmd_converge,
    "stability": _cmd_stability,
    "timing": _cmd_timing,
    "coeffs": _cmd_coeffs,
    "solve": _cmd_solve,
}


def main(argv=None):
    try:
        args = _parser().parse_args(argv)
        cfg = config_from_mapping(_mapping_from_args(args))
        return _COMMANDS[args.command](cfg, args)
    except ConfigurationError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except (DivergenceError, KrylovConvergenceError) as exc:
        print("run failed: %s" % exc, file=sys.stderr)
        return 3
    except DeterminismError as exc:
        print("determinism failure: %s" % exc, file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
