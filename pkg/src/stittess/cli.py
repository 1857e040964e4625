"""Command line front end.

One structured JSON config file drives every subcommand; a few flags
(--seed, --replicates, --threads, --out-dir) override it.  All randomness
derives from the single base seed recorded in every output, so repeated runs
with the same config produce byte-identical artifacts.

Exit status: 0 on success, 1 on usage or config errors, 2 when --assert is
given and a computed pass flag is false.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import functionals as F
from . import harness, mixing, tessio
from .geometry import CuboidRegion, GeometryError
from .measure import HyperplaneMeasure, InvalidMeasureError, measure_from_config
from .process import SimulationConfig, SimulationConfigError, simulate
from .rand import derive_rng


class ConfigError(ValueError):
    pass


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _region_label(region: CuboidRegion) -> str:
    return "x".join(f"[{_fmt(l)},{_fmt(u)}[" for l, u in zip(region.lower, region.upper))


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: line {exc.lineno}: {exc.msg}")


def _require(cfg: dict, key: str, context: str):
    if key not in cfg:
        raise ConfigError(f"missing field '{key}' in {context}")
    return cfg[key]


def _base_setup(cfg: dict, args) -> tuple[int, float, HyperplaneMeasure]:
    dim = int(_require(cfg, "dimension", "config"))
    if dim not in (2, 3):
        raise ConfigError("field 'dimension' must be 2 or 3")
    t = float(_require(cfg, "time", "config"))
    if t <= 0.0:
        raise ConfigError("field 'time' must be positive")
    seed = int(args.seed if args.seed is not None else cfg.get("seed", 0))
    if seed < 0:
        raise ConfigError("seed must be nonnegative")
    try:
        measure = measure_from_config(_require(cfg, "measure", "config"), dim)
    except InvalidMeasureError as exc:
        raise ConfigError(f"invalid measure: {exc}")
    return seed, t, measure


def _parse_region(spec: dict, context: str) -> CuboidRegion:
    lower = _require(spec, "lower", context)
    upper = _require(spec, "upper", context)
    try:
        return CuboidRegion.make(lower, upper)
    except GeometryError as exc:
        raise ConfigError(f"bad region in {context}: {exc}")


def _parse_functional(spec: dict, context: str) -> F.FunctionalSpec:
    name = _require(dict(spec), "name", context)
    params = {k: v for k, v in spec.items() if k != "name"}
    try:
        return F.functional(name, **params)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0]))


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _write_summary(path: Path, record: dict) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(record, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _config_hash(cfg: dict, seed: int) -> str:
    payload = json.dumps({"config": cfg, "seed": seed}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


# -- subcommands -----------------------------------------------------------------


def cmd_simulate(cfg, args, out: Path) -> dict:
    seed, t, measure = _base_setup(cfg, args)
    block = _require(cfg, "simulate", "config")
    window = _parse_region(_require(block, "window", "simulate block"), "simulate.window")
    sim = SimulationConfig(window=window, t=t, measure=measure, seed=seed)
    tess = simulate(sim, rng=derive_rng(seed))
    tess_path = out / "tessellation.txt"
    tessio.write_tessellation(tess, tess_path)
    outputs = {"tessellation": str(tess_path)}
    if block.get("svg") and measure.dim == 2:
        svg_path = out / "tessellation.svg"
        tessio.write_svg(tess, svg_path)
        outputs["svg"] = str(svg_path)
    return {
        "outputs": outputs,
        "flags": {},
        "stats": {"cells": len(tess.cells), "events": len(tess.events)},
    }


def cmd_functionals(cfg, args, out: Path) -> dict:
    seed, t, measure = _base_setup(cfg, args)
    block = _require(cfg, "functionals", "config")
    region = _parse_region(_require(block, "region", "functionals block"), "functionals.region")
    margin = float(block.get("margin", 0.0))
    replicates = int(args.replicates or block.get("replicates", 10))
    if replicates < 1:
        raise ConfigError("functionals needs at least 1 replicate")
    specs = [_parse_functional(s, "functionals.names") for s in _require(block, "names", "functionals block")]
    lo = np.asarray(region.lower) - margin
    hi = np.asarray(region.upper) + margin
    window = CuboidRegion.make(lo, hi)
    for spec in specs:
        if spec.name in harness.MARGIN_REQUIRED and margin <= 0.0:
            raise ConfigError(f"functional {spec.name} needs a positive margin")
    rows = []
    for rep in range(replicates):
        sim = SimulationConfig(window=window, t=t, measure=measure, seed=seed)
        tess = simulate(sim, rng=derive_rng(seed, rep))
        for spec in specs:
            value = F.evaluate(spec, tess, region)
            rows.append([seed, t, _region_label(region), spec.name, json.dumps(spec.params, sort_keys=True), value])
    path = out / "functionals.csv"
    _write_csv(path, ["seed", "t", "region", "functional", "params", "value"], rows)
    return {"outputs": {"csv": str(path)}, "flags": {}, "stats": {"rows": len(rows)}}


def cmd_variance_scan(cfg, args, out: Path) -> dict:
    seed, t, measure = _base_setup(cfg, args)
    block = _require(cfg, "variance_scan", "config")
    spec = _parse_functional(_require(block, "functional", "variance_scan block"), "variance_scan.functional")
    plan = harness.ExperimentPlan(
        measure=measure,
        t=t,
        functional=spec,
        n_values=tuple(int(n) for n in _require(block, "n_values", "variance_scan block")),
        replicates=int(args.replicates or _require(block, "replicates", "variance_scan block")),
        margin=float(block.get("margin", 0.0)),
        seed=seed,
        threads=args.threads,
    )
    theta = float(block.get("theta", 0.9))
    delta = float(block.get("delta", 2.0))
    result = harness.variance_scan(plan, theta=theta, delta=delta)
    rows = [
        [
            result.plan_hash,
            spec.label(),
            t,
            seed,
            plan.replicates,
            plan.margin,
            lvl.n,
            lvl.mean,
            lvl.variance,
            lvl.var_ci[0],
            lvl.var_ci[1],
            lvl.moment_2_delta,
        ]
        for lvl in result.levels
    ]
    path = out / "variance_scan.csv"
    _write_csv(
        path,
        [
            "plan",
            "functional",
            "t",
            "seed",
            "replicates",
            "margin",
            "n",
            "mean",
            "variance",
            "var_ci_lo",
            "var_ci_hi",
            "moment_2_delta",
        ],
        rows,
    )
    return {
        "outputs": {"csv": str(path)},
        "flags": {"slope_consistent": result.slope_consistent, "moments_stable": result.moments_stable},
        "stats": result.summary(),
    }


def cmd_ergodic_scan(cfg, args, out: Path) -> dict:
    seed, t, measure = _base_setup(cfg, args)
    block = _require(cfg, "ergodic_scan", "config")
    spec = _parse_functional(_require(block, "functional", "ergodic_scan block"), "ergodic_scan.functional")
    plan = harness.ExperimentPlan(
        measure=measure,
        t=t,
        functional=spec,
        n_values=tuple(int(n) for n in _require(block, "n_values", "ergodic_scan block")),
        replicates=int(args.replicates or _require(block, "replicates", "ergodic_scan block")),
        margin=float(block.get("margin", 0.0)),
        seed=seed,
        threads=args.threads,
    )
    trace = harness.ergodic_scan(plan)
    rows = []
    for rep in range(trace.values.shape[0]):
        for pos, n in enumerate(trace.n_values):
            rows.append([trace.plan_hash, spec.label(), t, seed, n, rep, trace.values[rep, pos]])
    path = out / "ergodic_scan.csv"
    _write_csv(path, ["plan", "functional", "t", "seed", "n", "replicate", "value"], rows)
    mean_traj = trace.mean_trajectory()
    diffs = np.abs(np.diff(mean_traj))
    flags = {
        "l1_trend_nonincreasing": bool(trace.l1_deviation[-1] <= trace.l1_deviation[0]),
        "successive_means_contract": bool(diffs[-1] <= diffs[0]) if diffs.size >= 2 else True,
    }
    return {
        "outputs": {"csv": str(path)},
        "flags": flags,
        "stats": {
            "gamma_hat": trace.gamma_hat,
            "l1_deviation": [float(x) for x in trace.l1_deviation],
            "sd_per_level": [float(x) for x in trace.sd_per_level],
        },
    }


def cmd_beta(cfg, args, out: Path) -> dict:
    seed, t, measure = _base_setup(cfg, args)
    block = _require(cfg, "beta", "config")
    a = float(_require(block, "a", "beta block"))
    b_values = [float(b) for b in _require(block, "b_values", "beta block")]
    replicates = int(args.replicates or _require(block, "replicates", "beta block"))
    estimates = []
    for pos, b in enumerate(sorted(b_values)):
        if not (0.0 < a < b):
            raise ConfigError("beta needs 0 < a < every b")
        inner, outer = mixing.default_probe_layout(a, b, measure.dim)
        est = mixing.empirical_beta(
            measure, t, a, b, inner, outer, n_samples=replicates, seed=seed + pos
        )
        estimates.append(est)
    chi_hat = theta_hat = None
    degenerate = False
    try:
        fit = mixing.fit_decay(estimates)
        chi_hat, theta_hat = fit.chi, fit.theta
    except (mixing.DegenerateFitError, ValueError):
        degenerate = True
    rows = [
        [
            e.a,
            e.b,
            e.pattern_dims[0],
            e.pattern_dims[1],
            e.n_samples,
            e.value,
            e.stderr,
            "" if chi_hat is None else chi_hat,
            "" if theta_hat is None else theta_hat,
        ]
        for e in estimates
    ]
    path = out / "beta.csv"
    _write_csv(path, ["a", "b", "m", "k", "N", "value", "stderr", "chi_hat", "theta_hat"], rows)
    values = [e.value for e in estimates]
    nonincreasing_trend = values[-1] <= values[0]
    flags = {"decay_consistent": bool(degenerate or nonincreasing_trend)}
    return {
        "outputs": {"csv": str(path)},
        "flags": flags,
        "stats": {
            "estimates": [
                {"b": e.b, "value": e.value, "stderr": e.stderr} for e in estimates
            ],
            "chi_hat": chi_hat,
            "theta_hat": theta_hat,
            "degenerate_fit": degenerate,
        },
    }


def cmd_check_assumptions(cfg, args, out: Path) -> dict:
    seed, t, measure = _base_setup(cfg, args)
    block = _require(cfg, "check_assumptions", "config")
    a = float(_require(block, "a", "check_assumptions block"))
    b = float(_require(block, "b", "check_assumptions block"))
    report = measure.check_assumptions(a, b)
    rows = [["direction_rank", "", float(report.direction_rank)]]
    for r, mass in enumerate(report.separator_masses, start=1):
        rows.append(["separator_mass", r, mass])
    path = out / "assumptions.csv"
    _write_csv(path, ["check", "facet", "value"], rows)
    return {
        "outputs": {"csv": str(path)},
        "flags": {
            "span_ok": report.span_ok,
            "separators_ok": report.separators_ok,
            "assumptions_pass": report.passed,
        },
        "stats": {"a": a, "b": b, "direction_rank": report.direction_rank},
    }


_COMMANDS = {
    "simulate": cmd_simulate,
    "functionals": cmd_functionals,
    "variance-scan": cmd_variance_scan,
    "ergodic-scan": cmd_ergodic_scan,
    "beta": cmd_beta,
    "check-assumptions": cmd_check_assumptions,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stittess",
        description="Simulate division-process tessellations and run the statistics suite.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--replicates", type=int, default=None, help="override replicate count")
        p.add_argument("--threads", type=int, default=1, help="worker processes for replicates")
        p.add_argument("--out-dir", default="out", help="output directory")
        p.add_argument(
            "--assert",
            dest="assert_flags",
            action="store_true",
            help="exit 2 when a computed pass flag is false",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        result = _COMMANDS[args.command](cfg, args, out)
        seed = int(args.seed if args.seed is not None else cfg.get("seed", 0))
        summary = {
            "command": args.command,
            "config_hash": _config_hash(cfg, seed),
            "seed": seed,
            "outputs": result["outputs"],
            "flags": result["flags"],
            "stats": result["stats"],
        }
        summary_path = out / f"{args.command.replace('-', '_')}_summary.json"
        _write_summary(summary_path, summary)
        print(json.dumps({"summary": str(summary_path), "flags": result["flags"]}, sort_keys=True))
        if args.assert_flags and not all(result["flags"].values()):
            return 2
        return 0
    except (
        ConfigError,
        SimulationConfigError,
        InvalidMeasureError,
        harness.InvalidParamsError,
        mixing.InsufficientSamplesError,
        GeometryError,
        ValueError,
        KeyError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
