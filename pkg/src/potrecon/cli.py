"""Command-line interface.

Subcommands: ``forward`` (spectral data), ``gbm`` (moment tables),
``reconstruct`` (full pipeline), ``lsq`` (least-squares baseline),
``bench`` (canonical suite), ``validate`` (moment-bound checks).
Exit status: 0 success, 1 pipeline error, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bench, gbm, solver
from .pipeline import MODES, LaplaceGBMReconstructor, LSQReconstructor
from .potentials import CANONICAL_SUITE, PotentialSpec

_MODE_ALIASES = {"full": "gbm-even-interp-odd"}

_PARAM_FLAGS = {
    "Z": "Z", "omega": "omega", "V0": "V0", "lam": "lam", "B": "B", "a": "a",
    "A_sinh": "A_sinh", "B_cosh": "B_cosh", "alpha": "alpha", "beta": "beta",
}


class ConfigError(ValueError):
    pass


def _add_potential_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--potential", required=True,
                   choices=sorted(CANONICAL_SUITE))
    for flag in _PARAM_FLAGS:
        p.add_argument(f"--{flag}", type=float, default=None)


def _build_spec(args: argparse.Namespace) -> PotentialSpec:
    base = CANONICAL_SUITE[args.potential]
    params = dict(base.params)
    for flag, key in _PARAM_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            if key not in params:
                raise ConfigError(
                    f"parameter {flag!r} does not apply to {args.potential}")
            params[key] = v
    return PotentialSpec(base.family, params, units=base.units)


def _parse_pade(text: str) -> list[tuple[int, int]]:
    nums = [int(tok) for tok in text.split(",") if tok != ""]
    if not nums or len(nums) % 2:
        raise ConfigError(f"--pade expects N,D pairs, got {text!r}")
    return [(nums[i], nums[i + 1]) for i in range(0, len(nums), 2)]


def _apply_config(args: argparse.Namespace) -> argparse.Namespace:
    if getattr(args, "config", None):
        try:
            overrides = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        if not isinstance(overrides, dict):
            raise ConfigError("config file must hold a JSON object")
        for key, value in overrides.items():
            if not hasattr(args, key):
                raise ConfigError(f"unknown config key {key!r}")
            setattr(args, key, value)
    return args


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="potrecon", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None,
                       help="JSON file whose entries override flags")

    p = sub.add_parser("forward", help="solve bound-state levels")
    _add_potential_args(p)
    p.add_argument("--ell-max", type=int, default=10)
    p.add_argument("--nr-max", type=int, default=11)
    p.add_argument("--r-max", type=float, default=60.0)
    p.add_argument("--n-points", type=int, default=4000)
    common(p)

    p = sub.add_parser("gbm", help="even-moment ladder from spectra")
    _add_potential_args(p)
    p.add_argument("--ell-max", type=int, default=None)
    p.add_argument("--gbm-mode", choices=("raw-bound", "saturated"),
                   default="saturated")
    common(p)

    p = sub.add_parser("reconstruct", help="full reconstruction pipeline")
    _add_potential_args(p)
    p.add_argument("--mode", default="gbm-even-interp-odd",
                   choices=sorted(set(MODES) | set(_MODE_ALIASES)))
    p.add_argument("--odd-family", default=bench.BENCH_ODD_FAMILY)
    p.add_argument("--pade", type=str, default=None,
                   metavar="N,D[,N,D...]")
    p.add_argument("--filter-delta", type=float, default=0.0)
    p.add_argument("--invert", choices=("residues", "numeric"),
                   default="residues")
    p.add_argument("--out", default="runs")
    common(p)

    p = sub.add_parser("lsq", help="two-spectra least-squares baseline")
    _add_potential_args(p)
    p.add_argument("--r-max", type=float, default=bench.LSQ_BENCH["r_max"])
    p.add_argument("--n-grid", type=int, default=bench.LSQ_BENCH["n_grid"])
    p.add_argument("--num-pairs", type=int,
                   default=bench.LSQ_BENCH["num_pairs"])
    p.add_argument("--max-iter", type=int, default=bench.LSQ_BENCH["max_iter"])
    p.add_argument("--out", default="runs")
    common(p)

    p = sub.add_parser("bench", help="benchmark suite")
    p.add_argument("--suite", choices=("canonical",), default="canonical")
    p.add_argument("--mode", default="gbm-even-interp-odd",
                   choices=sorted(set(MODES) | set(_MODE_ALIASES)))
    p.add_argument("--out", default="runs")
    common(p)

    p = sub.add_parser("validate", help="moment-bound validator report")
    _add_potential_args(p)
    p.add_argument("--r-max", type=float, default=60.0)
    p.add_argument("--n-points", type=int, default=4000)
    common(p)
    return top


def _cmd_forward(args) -> int:
    spec = _build_spec(args)
    cfg = solver.SolverConfig(r_max=args.r_max, n_points=args.n_points)
    ds = solver.build_spectral_dataset(spec, args.ell_max, args.nr_max, cfg,
                                       bound_only=False)
    out = {"potential": spec.potential_id,
           "levels": [{"ell": lv.ell, "n_r": lv.n_r, "value": lv.value}
                      for lv in ds.levels]}
    print(json.dumps(out, indent=2))
    return 0


def _cmd_gbm(args) -> int:
    spec = _build_spec(args)
    est = LaplaceGBMReconstructor(mode="gbm-even-interp-odd",
                                  ell_max=args.ell_max,
                                  gbm_mode=args.gbm_mode,
                                  odd_family=bench.BENCH_ODD_FAMILY)
    path, ell_max = est._resolve(spec)
    cfg = est._solver_config(spec, ell_max)
    moments = est._moments(spec, None, path, ell_max, cfg)
    acct = est.accounting_
    out = {"potential": spec.potential_id,
           "path": path,
           "moments": {str(n): moments.value(n)
                       for n in sorted(moments.entries)},
           "consumed_count": acct.consumed_count,
           "ell_used": list(acct.ell_used)}
    print(json.dumps(out, indent=2))
    return 0


def _cmd_reconstruct(args) -> int:
    spec = _build_spec(args)
    mode = _MODE_ALIASES.get(args.mode, args.mode)
    overrides = {"odd_family": args.odd_family,
                 "filter_delta": args.filter_delta,
                 "invert": args.invert}
    if args.pade:
        overrides["pade_orders"] = _parse_pade(args.pade)
    results = bench.run_benchmark(suite=[spec], mode=mode,
                                  cfgs={spec.family: overrides},
                                  out_root=args.out,
                                  suite_name="reconstruct")
    entry = results[spec.family]
    print(json.dumps(bench._jsonable({
        "dir": str(entry["dir"]),
        "status": entry["manifest"]["status"],
        "metrics": entry["manifest"].get("metrics"),
        "error": entry["manifest"].get("error")}), indent=2))
    return 0 if entry["manifest"]["status"] == "ok" else 1


def _cmd_lsq(args) -> int:
    spec = _build_spec(args)
    cfg = {"r_max": args.r_max, "n_grid": args.n_grid,
           "num_pairs": args.num_pairs, "max_iter": args.max_iter}
    results = bench.run_lsq_comparison(suite=[spec], cfg=cfg,
                                       out_root=args.out)
    entry = results[spec.family]
    print(json.dumps(bench._jsonable({
        "dir": str(entry["dir"]),
        "status": entry["manifest"]["status"],
        "metrics": entry["manifest"].get("metrics"),
        "error": entry["manifest"].get("error")}), indent=2))
    return 0 if entry["manifest"]["status"] == "ok" else 1


def _cmd_bench(args) -> int:
    mode = _MODE_ALIASES.get(args.mode, args.mode)
    results = bench.run_benchmark(mode=mode, out_root=args.out,
                                  suite_name=args.suite)
    ok = True
    for fam, entry in results.items():
        status = entry["manifest"]["status"]
        rel = (entry["manifest"].get("metrics") or {}).get("rel_l2_V")
        print(f"{fam:12s} {status:6s} rel_l2_V="
              f"{rel if rel is None else format(rel, '.3e')} -> {entry['dir']}")
        ok &= status == "ok"
    return 0 if ok else 1


def _cmd_validate(args) -> int:
    spec = _build_spec(args)
    cfg = solver.SolverConfig(r_max=args.r_max, n_points=args.n_points,
                              n_eigs=3)
    sols = solver.solve_channels(spec, range(3), cfg)
    report = gbm.validate_moment_bounds(spec, sols)
    for item in report.items:
        verdict = {True: "pass", False: "FAIL", None: "skip"}[item.passed]
        print(f"[{verdict}] {item.name}: {item.detail}")
    print("conditions:", report.conditions)
    return 0 if report.all_passed else 1


_COMMANDS = {"forward": _cmd_forward, "gbm": _cmd_gbm,
             "reconstruct": _cmd_reconstruct, "lsq": _cmd_lsq,
             "bench": _cmd_bench, "validate": _cmd_validate}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config(args)
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"pipeline error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
