"""Command-line front end: ``dacinl <command> [flags]``.

Exit codes: 0 success, 2 usage error, 1 runtime failure.

The default seed is 0 unless the ``DACINL_SEED`` environment variable is
set. The resolved configuration is printed to stderr before any result;
documents written to stdout/--out-file carry the same configuration minus
execution-only settings (workers, output destination), so reruns with a
different worker count produce byte-identical files.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys

import numpy as np

from . import binary, density, export, montecarlo, thermo
from .mismatch import DacSpec, sample_unit_currents
from .transfer import Architecture, nonlinearity, transfer

SEED_ENV = "DACINL_SEED"
EXECUTION_ONLY = ("workers", "output", "out_file", "command", "dump_samples", "curve_out", "config")
DEFAULT_BITS = 10
DEFAULT_SIGMA_REL = 0.01
CONFIG_KEYS = {"n", "bits", "mean_current", "sigma_u", "relative_matching", "seed"}


class UsageError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _common(p: argparse.ArgumentParser, arch_required=False, mc=True):
    p.add_argument("--bits", type=int, default=None, help=f"resolution N (default {DEFAULT_BITS})")
    p.add_argument("--sigma-rel", type=float, default=None,
                   help=f"relative matching sigma_u / I_u (default {DEFAULT_SIGMA_REL})")
    p.add_argument("--config", default=None,
                   help="key = value file: N, mean_current, sigma_u or relative_matching, seed")
    p.add_argument("--arch", choices=["thermo", "binary", "segmented"], required=arch_required,
                   default=None if arch_required else "thermo")
    p.add_argument("--segmentation", type=int, default=None, help="S, thermometer-coded MSBs")
    if mc:
        p.add_argument("--trials", type=int, default=10_000)
        p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", choices=["csv", "json"], default="csv")
    p.add_argument("--out-file", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dacinl", description="DAC INL statistics under current mismatch")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo distribution of the normalized INL_max")
    _common(p, arch_required=True)
    p.add_argument("--dump-samples", default=None, help="write raw samples as little-endian float64")
    p.add_argument("--curve-out", default=None, help="write trial 0's transfer curve (CSV or JSON per --output)")

    p = sub.add_parser("analytic", help="limit-law quantities")
    p.add_argument("--law", choices=["thermo", "binary"], required=True)
    p.add_argument("--what", choices=["mean", "var", "cdf", "quantile"], required=True)
    p.add_argument("--x", type=float, nargs="+", default=None)
    p.add_argument("--p", type=float, nargs="+", default=None)
    p.add_argument("--output", choices=["csv", "json"], default="csv")
    p.add_argument("--out-file", default=None)

    p = sub.add_parser("density", help="density of the truncated binary law M^(m)")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--mode", choices=["quad", "mc"], default="quad")
    p.add_argument("--grid-min", type=float, default=0.0)
    p.add_argument("--grid-max", type=float, default=2.5)
    p.add_argument("--grid-step", type=float, default=0.01)
    p.add_argument("--quad-tol", type=float, default=1e-9)
    p.add_argument("--trials", type=int, default=1_000_000, help="samples for --mode mc")
    p.add_argument("--bandwidth", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", choices=["csv", "json"], default="csv")
    p.add_argument("--out-file", default=None)

    p = sub.add_parser("yield", help="P(INL_max <= threshold)")
    _common(p)
    p.add_argument("--threshold-lsb", type=float, required=True)
    p.add_argument("--method", choices=["analytic", "mc"], default="analytic")
    p.add_argument("--samples", type=int, default=1_000_000, help="M draws for the binary analytic path")

    p = sub.add_parser("convergence", help="discrete-to-limit convergence experiments")
    p.add_argument("--kind", choices=["thermo", "binary"], required=True)
    p.add_argument("--grid", type=int, nargs="+", default=None,
                   help="n values (thermo) or resolutions N (binary)")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--n-fine", type=int, default=2**20)
    p.add_argument("--c", type=float, default=4.5, help="constant C > 4 of the thermometer tail bound")
    p.add_argument("--output", choices=["csv", "json"], default="csv")
    p.add_argument("--out-file", default=None)

    p = sub.add_parser("compare", help="thermometer vs binary (or any two architectures)")
    p.add_argument("--bits", type=int, default=None)
    p.add_argument("--sigma-rel", type=float, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--arch-a", choices=["thermo", "binary", "segmented"], default="thermo")
    p.add_argument("--arch-b", choices=["thermo", "binary", "segmented"], default="binary")
    p.add_argument("--segmentation-a", type=int, default=None)
    p.add_argument("--segmentation-b", type=int, default=None)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", choices=["csv", "json"], default="csv")
    p.add_argument("--out-file", default=None)
    return parser


def _arch(kind: str, segmentation, bits: int, flag: str) -> Architecture:
    if kind == "segmented":
        if segmentation is None:
            raise UsageError(f"--arch segmented requires {flag}")
        if not 0 <= segmentation <= bits:
            raise UsageError(f"{flag} must lie in [0, --bits]")
        return Architecture.segmented(segmentation)
    if segmentation is not None:
        raise UsageError(f"{flag} only applies to --arch segmented")
    return Architecture(kind)


def read_config(path) -> dict:
    """Plain ``key = value`` document; '#' starts a comment line."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_string("[dac]\n" + fh.read())
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"--config: {exc}") from None
    out = dict(parser["dac"])
    unknown = set(out) - CONFIG_KEYS
    if unknown:
        raise UsageError(f"--config: unknown keys {sorted(unknown)}")
    if "sigma_u" in out and "relative_matching" in out:
        raise UsageError("--config: give sigma_u or relative_matching, not both")
    try:
        return {k: (int(v) if k in ("n", "bits", "seed") else float(v)) for k, v in out.items()}
    except ValueError as exc:
        raise UsageError(f"--config: {exc}") from None


def _resolve_spec_flags(args):
    """Flags win over --config entries, which win over built-in defaults."""
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    if args.bits is None:
        args.bits = cfg.get("bits", cfg.get("n", DEFAULT_BITS))
    args.mean_current = cfg.get("mean_current", 1.0)
    if args.sigma_rel is None:
        if "sigma_u" in cfg:
            args.sigma_rel = cfg["sigma_u"] / args.mean_current
        else:
            args.sigma_rel = cfg.get("relative_matching", DEFAULT_SIGMA_REL)
    if args.seed is None and "seed" in cfg:
        args.seed = cfg["seed"]


def _spec(args) -> DacSpec:
    if not 1 <= args.bits <= 24:
        raise UsageError("--bits must lie in [1, 24]")
    if not (math.isfinite(args.sigma_rel) and args.sigma_rel > 0):
        raise UsageError("--sigma-rel must be positive")
    if not (math.isfinite(args.mean_current) and args.mean_current > 0):
        raise UsageError("mean_current must be positive")
    return DacSpec.from_relative(args.bits, args.sigma_rel, args.mean_current)


def _check_positive(value, flag):
    if value is not None and value < 1:
        raise UsageError(f"{flag} must be >= 1")


def _resolve_seed(args):
    if getattr(args, "seed", None) is None:
        args.seed = _default_seed()
    if not 0 <= args.seed < 2**64:
        raise UsageError("--seed must lie in [0, 2**64)")


def _config(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in EXECUTION_ONLY}


def _emit(args, header, rows, payload: dict):
    comments = [" ".join(f"{k}={v}" for k, v in _config(args).items())]
    if args.output == "csv":
        text = export.to_csv(header, rows, comments)
    else:
        text = export.to_json({"command": args.command, "config": _config(args), **payload})
    if args.out_file:
        with open(args.out_file, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _summary_rows(summary: montecarlo.EmpiricalSummary):
    d = summary.to_dict()
    rows = [(k, d[k]) for k in ("count", "mean", "variance", "standard_error_mean", "variance_se")]
    rows += [(f"quantile_{p:g}", v) for p, v in summary.quantiles.items()]
    return rows


def cmd_simulate(args):
    spec = _spec(args)
    arch = _arch(args.arch, args.segmentation, args.bits, "--segmentation")
    _check_positive(args.trials, "--trials")
    _check_positive(args.workers, "--workers")
    config = montecarlo.TrialConfig(spec, arch, args.trials, args.seed, args.workers)
    samples = montecarlo.simulate(config)
    summary = montecarlo.summarize(samples.normalized)
    if args.dump_samples:
        export.write_raw_samples(args.dump_samples, samples.normalized)
    if args.curve_out:
        units = sample_unit_currents(spec, args.seed, trial=0)
        curve = transfer(arch, units)
        prof = nonlinearity(curve, units.i_lsb)
        text = (export.curve_csv(curve.outputs, prof.dnl, prof.inl) if args.output == "csv"
                else export.curve_json(curve.outputs, prof.dnl, prof.inl, arch.label(), prof.inl_max))
        with open(args.curve_out, "w", newline="\n") as fh:
            fh.write(text)
    _emit(args, ["statistic", "value"], _summary_rows(summary), {"summary": summary.to_dict()})


def cmd_analytic(args):
    if args.law == "binary" and args.what in ("cdf", "quantile"):
        raise UsageError(
            "no closed-form CDF exists for the binary law; use `dacinl yield --arch binary` "
            "for a sampled estimate"
        )
    rows = []
    if args.what == "mean":
        rows.append(("mean", thermo.mean_X() if args.law == "thermo" else binary.mean_M()))
    elif args.what == "var":
        rows.append(("var", thermo.var_X() if args.law == "thermo" else binary.var_M()))
    elif args.what == "cdf":
        if not args.x:
            raise UsageError("--what cdf requires --x")
        if any(not x >= 0 for x in args.x):
            raise UsageError("--x must be non-negative")
        rows += [(f"cdf({x:g})", thermo.kolmogorov_cdf(x)) for x in args.x]
    else:
        if not args.p:
            raise UsageError("--what quantile requires --p")
        if any(not 0 < p < 1 for p in args.p):
            raise UsageError("--p must lie in (0, 1)")
        rows += [(f"quantile({p:g})", thermo.quantile_X(p)) for p in args.p]
    rows = [(k, float(f"{v:.12g}")) for k, v in rows]
    _emit(args, ["quantity", "value"], rows, {"values": dict(rows)})


def cmd_density(args):
    if args.m < 1:
        raise UsageError("--m must be >= 1")
    if args.mode == "quad" and args.m > density.MAX_QUAD_ORDER:
        raise UsageError(f"--mode quad supports --m <= {density.MAX_QUAD_ORDER}; use --mode mc")
    if not args.grid_step > 0 or args.grid_max < args.grid_min or args.grid_min < 0:
        raise UsageError("grid must satisfy 0 <= --grid-min <= --grid-max and --grid-step > 0")
    count = int(math.floor((args.grid_max - args.grid_min) / args.grid_step + 1e-9)) + 1
    grid = args.grid_min + args.grid_step * np.arange(count)
    if args.mode == "quad":
        f = density.density_grid(grid, args.m, args.quad_tol)
    else:
        if args.trials < 10_000:
            raise UsageError("--trials must be >= 10000 for --mode mc")
        if not args.bandwidth > 0:
            raise UsageError("--bandwidth must be positive")
        f = density.density_M_mc(grid, args.m, args.trials, args.bandwidth, args.seed)
    _emit(args, ["y", "f"], zip(grid, f), {"y": grid, "f": f})


def cmd_yield(args):
    spec = _spec(args)
    arch = _arch(args.arch, args.segmentation, args.bits, "--segmentation")
    if not args.threshold_lsb > 0:
        raise UsageError("--threshold-lsb must be positive")
    _check_positive(args.trials, "--trials")
    _check_positive(args.workers, "--workers")
    if args.method == "mc":
        est = montecarlo.yield_mc(montecarlo.TrialConfig(spec, arch, args.trials, args.seed, args.workers),
                                  args.threshold_lsb)
        result = {"yield": est.yield_, "ci_low": est.ci_low, "ci_high": est.ci_high}
    elif arch.kind.value == "thermo":
        result = {"yield": thermo.yield_thermometer(args.threshold_lsb, spec)}
    elif arch.kind.value == "binary":
        _check_positive(args.samples, "--samples")
        y, lo, hi = binary.yield_binary(args.threshold_lsb, spec, args.samples, seed=args.seed)
        result = {"yield": y, "ci_low": lo, "ci_high": hi}
    else:
        raise UsageError("--method analytic has no limit law for segmented DACs; use --method mc")
    result["scaled_threshold"] = thermo.scaled_threshold(args.threshold_lsb, spec)
    _emit(args, ["quantity", "value"], list(result.items()), result)


def cmd_convergence(args):
    _check_positive(args.trials, "--trials")
    _check_positive(args.workers, "--workers")
    for unused in (("eps",) if args.kind == "thermo" else ("n_fine", "c")):
        delattr(args, unused)
    if args.kind == "thermo":
        grid = args.grid or [2**k for k in range(6, 15)]
        try:
            rep = montecarlo.convergence_thermo(grid, args.trials, args.seed, args.n_fine, args.c, args.workers)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        grid = args.grid or list(range(6, 17))
        if any(not 1 <= b <= 22 for b in grid):
            raise UsageError("--grid resolutions must lie in [1, 22]")
        try:
            rep = montecarlo.convergence_binary(grid, args.trials, args.seed, args.eps, workers=args.workers)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    header = list(rep.rows[0])
    _emit(args, header, [[r[h] for h in header] for r in rep.rows],
          {"kind": rep.kind, "rows": rep.rows, "fitted_slope": rep.fitted_slope, "notes": rep.notes})


def cmd_compare(args):
    spec = _spec(args)
    arch_a = _arch(args.arch_a, args.segmentation_a, args.bits, "--segmentation-a")
    arch_b = _arch(args.arch_b, args.segmentation_b, args.bits, "--segmentation-b")
    _check_positive(args.trials, "--trials")
    _check_positive(args.workers, "--workers")
    rep = montecarlo.compare_architectures(
        montecarlo.TrialConfig(spec, arch_a, args.trials, args.seed, args.workers),
        montecarlo.TrialConfig(spec, arch_b, args.trials, args.seed, args.workers),
    )
    rows = [
        ("mean_a", rep.summary_a.mean), ("variance_a", rep.summary_a.variance),
        ("mean_b", rep.summary_b.mean), ("variance_b", rep.summary_b.variance),
        ("mean_difference", rep.mean_difference), ("combined_se", rep.combined_se),
        ("ks_distance", rep.ks_distance), ("ks_pvalue", rep.ks_pvalue),
    ]
    _emit(args, ["quantity", "value"], rows, {
        "a": {"architecture": rep.label_a, **rep.summary_a.to_dict()},
        "b": {"architecture": rep.label_b, **rep.summary_b.to_dict()},
        **dict(rows[4:]),
    })


COMMANDS = {
    "simulate": cmd_simulate,
    "analytic": cmd_analytic,
    "density": cmd_density,
    "yield": cmd_yield,
    "convergence": cmd_convergence,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if hasattr(args, "sigma_rel"):
            _resolve_spec_flags(args)
        if hasattr(args, "seed"):
            _resolve_seed(args)
        print("# resolved config: " + " ".join(f"{k}={v}" for k, v in vars(args).items()), file=sys.stderr)
        COMMANDS[args.command](args)
    except UsageError as exc:
        parser.error(f"{args.command}: {exc}")
    except Exception as exc:  # noqa: BLE001 - stable exit-code contract
        print(f"dacinl: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
