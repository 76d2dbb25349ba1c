"""Command-line entry points.

Exit codes: 0 = all checks passed, 1 = a check failed, 2 = config error,
3 = numerical abort (CFL violation or blow-up).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .kolmo import CflViolation, NumericalBlowUp
from .lab import ConfigError, RunManifest, parse_config, run, sweep
from .torus import Field, load_slices, make_grid
from .weights import Weight, a2_constant, maximal_function
from .torus import dump_field


def _load_config(path: str, kind: str):
    with open(path) as fh:
        cfg = parse_config(fh.read())
    if cfg.kind != kind:
        raise ConfigError(
            f"config kind {cfg.kind!r} does not match subcommand "
            f"(expected {kind!r})")
    return cfg


def _finish(manifest) -> int:
    if isinstance(manifest, RunManifest):
        print(manifest.to_json(), end="")
        return 0 if manifest.passed else 1
    return 1


def _config_command(sub, kind):
    def handler(args):
        cfg = _load_config(args.config, kind)
        if getattr(args, "eps", None):
            cfg.raw["eps"] = [float(e) for e in args.eps.split(",")]
        return _finish(run(cfg, args.out))
    sub.add_argument("--config", required=True)
    sub.add_argument("--out", default=None,
                     help="output directory for manifest/CSV/dumps")
    sub.set_defaults(handler=handler)


def _weight_from_arg(arg: str, n: int, dim: int) -> Weight:
    grid = make_grid(dim, n, 1.0, 1)
    if ":" in arg:
        name, _, params = arg.partition(":")
        vals = [float(x) for x in params.split(",")] if params else []
        if name == "constant":
            return Weight(Field.constant(grid, vals[0] if vals else 1.0))
        if name == "twolevel":
            lo, hi = vals
            half = np.where(np.arange(grid.size) < grid.size // 2, lo, hi)
            return Weight(Field(grid, half))
        if name == "spike":
            base, peak, width = vals
            x = np.arange(grid.n) * grid.h
            d = np.minimum(x, 1.0 - x)
            line = base + (peak - base) * np.exp(-(d / width) ** 2)
            if dim == 2:
                field = np.sqrt(line[:, None] * line[None, :])
            else:
                field = line
            return Weight(Field(grid, np.ascontiguousarray(field).reshape(-1)))
        raise ConfigError(f"unknown weight family {name!r}")
    fdim, fn, data = load_slices(arg)
    grid = make_grid(fdim, fn, 1.0, 1)
    return Weight(Field(grid, data[0]))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cdl",
        description="Periodic-torus lab for Kolmogorov/dual/cross-diffusion "
                    "studies")
    subs = parser.add_subparsers(dest="command", required=True)

    _config_command(subs.add_parser(
        "solve-kolmogorov", help="forward Kolmogorov solve"), "kolmogorov")
    _config_command(subs.add_parser(
        "solve-dual", help="backward dual solve + a-priori checks"), "dual")
    _config_command(subs.add_parser(
        "verify-duality", help="randomized duality-identity check"),
        "verify_duality")
    _config_command(subs.add_parser(
        "stability-study", help="rough-vs-mollified diffusion stability"),
        "stability")
    _config_command(subs.add_parser("skt-run", help="cross-diffusion solve"),
                    "skt")
    conv = subs.add_parser("skt-converge",
                           help="kernel-to-Dirac convergence study")
    conv.add_argument("--eps", default=None,
                      help="comma-separated kernel widths, overrides config")
    _config_command(conv, "converge")

    a2p = subs.add_parser("a2-check", help="A2 constant of a weight")
    a2p.add_argument("--weight", required=True,
                     help="field dump path or family spec like twolevel:1,9")
    a2p.add_argument("--n", type=int, default=64)
    a2p.add_argument("--dim", type=int, default=1)

    def a2_handler(args):
        w = _weight_from_arg(args.weight, args.n, args.dim)
        out = {"a2_constant": a2_constant(w),
               "n": w.values.grid.n, "dim": w.values.grid.dim}
        print(json.dumps(out, indent=2))
        return 0
    a2p.set_defaults(handler=a2_handler)

    mx = subs.add_parser("maximal", help="discrete maximal function")
    mx.add_argument("--field", required=True, help="input field dump")
    mx.add_argument("--out", default=None, help="output dump for Mf")

    def maximal_handler(args):
        dim, n, data = load_slices(args.field)
        grid = make_grid(dim, n, 1.0, 1)
        mf = maximal_function(Field(grid, data[0]))
        if args.out:
            dump_field(args.out, mf)
        print(json.dumps({"sup": float(mf.values.max()),
                          "mean": float(mf.values.mean())}, indent=2))
        return 0
    mx.set_defaults(handler=maximal_handler)

    sw = subs.add_parser("sweep", help="sweep one numeric config axis")
    sw.add_argument("--config", required=True)
    sw.add_argument("--axis", required=True, help="dotted path, e.g. grid.n")
    sw.add_argument("--values", required=True, help="comma-separated values")
    sw.add_argument("--out", default=None)

    def sweep_handler(args):
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
        values = [json.loads(v) for v in args.values.split(",")]
        results = sweep(cfg, args.axis, values, args.out)
        code = 0
        for v, res in zip(values, results):
            if isinstance(res, RunManifest):
                status = "pass" if res.passed else "FAIL"
                code = max(code, 0 if res.passed else 1)
            else:
                status = f"ERROR: {res}"
                code = max(code, 3 if isinstance(
                    res, (CflViolation, NumericalBlowUp)) else 2)
            print(f"{args.axis}={v}: {status}")
        return code
    sw.set_defaults(handler=sweep_handler)

    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (CflViolation, NumericalBlowUp) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
