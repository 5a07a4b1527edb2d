"""Command line front door: run one scenario, sweep a grid, compare policies.

Exit codes: 0 on success, 1 for I/O problems, 2 for validation problems.
All outputs are deterministic byte for byte for a given input, including
sweeps run with process parallelism: workers may finish in any order but
results are written in configuration order.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .config import ConfigError, load_scenario
from .engine import run_job, run_scenario

METRIC_COLUMNS = [
    "kind",
    "run_id",
    "scenario",
    "cell",
    "params",
    "seed",
    "link_accuracy",
    "traceability",
    "mean_anonymity_set",
    "mean_awareness_ratio",
    "ghost_ticks",
    "missing_ticks",
    "silence_blind_s",
    "max_stack_switch_gap_s",
    "min_valid_tickets",
    "sybil_violations",
    "n_changes",
    "config_digest",
]

_AGGREGATED = [
    "link_accuracy",
    "traceability",
    "mean_anonymity_set",
    "mean_awareness_ratio",
    "ghost_ticks",
    "missing_ticks",
    "silence_blind_s",
    "max_stack_switch_gap_s",
    "min_valid_tickets",
    "sybil_violations",
    "n_changes",
]


def _cell(value) -> str:
    if value is None:
        return ""
    return str(value)


def summary_to_row(summary: dict, *, run_id: str, cell: str, params: dict) -> dict:
    p = summary["privacy"]
    s = summary["safety"]
    return {
        "kind": "run",
        "run_id": run_id,
        "scenario": summary["scenario"],
        "cell": cell,
        "params": json.dumps(params, sort_keys=True, separators=(",", ":")),
        "seed": summary["seed"],
        "link_accuracy": p["link_accuracy"],
        "traceability": p["traceability"],
        "mean_anonymity_set": p["mean_anonymity_set"],
        "mean_awareness_ratio": s["mean_awareness_ratio"],
        "ghost_ticks": s["ghost_ticks"],
        "missing_ticks": s["missing_ticks"],
        "silence_blind_s": s["silence_blind_s"],
        "max_stack_switch_gap_s": s["max_stack_switch_gap_s"],
        "min_valid_tickets": s["min_valid_tickets"],
        "sybil_violations": s["sybil_violations"],
        "n_changes": s.get("n_changes", summary["n_changes"]),
        "config_digest": summary["config_digest"],
    }


def _aggregate_rows(rows: list[dict], cell: str, params_json: str) -> list[dict]:
    """Mean and population-std rows over one cell's runs, fixed field order."""
    out = []
    for kind in ("mean", "std"):
        agg = {c: "" for c in METRIC_COLUMNS}
        agg["kind"] = kind
        agg["scenario"] = rows[0]["scenario"]
        agg["cell"] = cell
        agg["params"] = params_json
        for col in _AGGREGATED:
            values = [r[col] for r in rows if r[col] is not None and r[col] != ""]
            if not values:
                continue
            values = [float(v) for v in values]
            mean = sum(values) / len(values)
            if kind == "mean":
                agg[col] = mean
            else:
                agg[col] = math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))
        out.append(agg)
    return out


def write_metrics_csv(path: str, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRIC_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(row.get(k)) for k in METRIC_COLUMNS})


# --- run ----------------------------------------------------------------------


def cmd_run(args: argparse.Namespace) -> int:
    config = load_scenario(args.config, strict=args.strict)
    result = run_scenario(
        config, seed_override=args.seed_override, collect_trace=args.trace
    )
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "summary.json"), "w", encoding="utf-8") as fh:
        fh.write(result.summary_json())
    row = summary_to_row(result.summary, run_id="run0", cell="", params={})
    write_metrics_csv(os.path.join(args.out, "metrics.csv"), [row])
    if args.trace:
        with open(os.path.join(args.out, "trace.jsonl"), "w", encoding="utf-8") as fh:
            for trace_row in result.trace_rows:
                fh.write(json.dumps(trace_row, sort_keys=True, separators=(",", ":")))
                fh.write("\n")
        with open(os.path.join(args.out, "linkage.json"), "w", encoding="utf-8") as fh:
            fh.write(result.linkage.to_json())
            fh.write("\n")
    print(f"run complete: {result.summary['scenario']} seed={result.summary['seed']}")
    print(
        "link_accuracy={link_accuracy} traceability={traceability} "
        "mean_anonymity_set={mean_anonymity_set}".format(**result.summary["privacy"])
    )
    return 0


# --- sweep ----------------------------------------------------------------------


def _apply_override(obj: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = obj
    for part in parts[:-1]:
        if not isinstance(node.get(part), dict):
            raise ConfigError([f"axes.{dotted}: path not found in base config"])
        node = node[part]
    node[parts[-1]] = value


def _load_sweep_spec(path: str) -> tuple[dict, dict, int, int]:
    with open(path, "r", encoding="utf-8") as fh:
        spec = json.load(fh)
    violations = []
    allowed = {"base", "axes", "replications", "seed_base"}
    for key in sorted(set(spec) - allowed):
        violations.append(f"{key}: unknown field")
    base = spec.get("base")
    if isinstance(base, str):
        base_path = os.path.join(os.path.dirname(os.path.abspath(path)), base)
        try:
            with open(base_path, "r", encoding="utf-8") as fh:
                base = json.load(fh)
        except FileNotFoundError:
            raise
    elif not isinstance(base, dict):
        violations.append("base: must be a path or an inline config object")
        base = {}
    axes = spec.get("axes", {})
    if not isinstance(axes, dict) or not all(
        isinstance(v, list) and v for v in axes.values()
    ):
        violations.append("axes: must map dotted config paths to non-empty arrays")
        axes = {}
    reps = spec.get("replications", 1)
    if not isinstance(reps, int) or reps < 1:
        violations.append("replications: must be a positive integer")
        reps = 1
    seed_base = spec.get("seed_base", 0)
    if not isinstance(seed_base, int) or seed_base < 0:
        violations.append("seed_base: must be a non-negative integer")
        seed_base = 0
    if violations:
        raise ConfigError(sorted(violations))
    return base, axes, reps, seed_base


def plan_sweep(base: dict, axes: dict, reps: int, seed_base: int) -> list[dict]:
    """Every (cell, replication) as a config dict, in deterministic order."""
    axis_names = sorted(axes)
    cells = list(itertools.product(*(axes[a] for a in axis_names))) or [()]
    jobs = []
    for cell_idx, values in enumerate(cells):
        params = dict(zip(axis_names, values))
        for rep in range(reps):
            config = json.loads(json.dumps(base))
            for dotted, value in params.items():
                _apply_override(config, dotted, value)
            config["seed"] = seed_base + rep
            load_scenario(config)  # validate before any run starts
            jobs.append(
                {
                    "cell_idx": cell_idx,
                    "rep": rep,
                    "params": params,
                    "config": config,
                }
            )
    return jobs


def _execute_jobs(jobs: list[dict], parallel: int) -> list[tuple[str, dict]]:
    if parallel <= 1:
        return [run_job(job["config"]) for job in jobs]
    results: list = [None] * len(jobs)
    with ProcessPoolExecutor(max_workers=parallel) as pool:
        futures = {
            pool.submit(run_job, job["config"]): i for i, job in enumerate(jobs)
        }
        for future in futures:
            results[futures[future]] = future.result()
    return results


def cmd_sweep(args: argparse.Namespace) -> int:
    base, axes, reps, seed_base = _load_sweep_spec(args.spec)
    jobs = plan_sweep(base, axes, reps, seed_base)
    results = _execute_jobs(jobs, args.parallel)

    os.makedirs(args.out, exist_ok=True)
    summaries_dir = os.path.join(args.out, "summaries")
    os.makedirs(summaries_dir, exist_ok=True)

    rows: list[dict] = []
    manifest = []
    by_cell: dict[int, list[dict]] = {}
    for job, (summary_json, summary) in zip(jobs, results):
        cell_label = ",".join(
            f"{k}={json.dumps(job['params'][k])}" for k in sorted(job["params"])
        )
        run_id = f"c{job['cell_idx']:03d}r{job['rep']:03d}"
        name = f"{run_id}.summary.json"
        with open(os.path.join(summaries_dir, name), "w", encoding="utf-8") as fh:
            fh.write(summary_json)
        row = summary_to_row(summary, run_id=run_id, cell=cell_label, params=job["params"])
        rows.append(row)
        by_cell.setdefault(job["cell_idx"], []).append(row)
        manifest.append(
            {"run_id": run_id, "cell": cell_label, "params": job["params"],
             "seed": summary["seed"], "summary": f"summaries/{name}"}
        )

    all_rows = list(rows)
    for cell_idx in sorted(by_cell):
        cell_rows = by_cell[cell_idx]
        all_rows.extend(
            _aggregate_rows(cell_rows, cell_rows[0]["cell"], cell_rows[0]["params"])
        )
    write_metrics_csv(os.path.join(args.out, "metrics.csv"), all_rows)
    with open(os.path.join(args.out, "sweep_manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"sweep complete: {len(jobs)} runs, {len(by_cell)} cells -> {args.out}")
    return 0


# --- compare ----------------------------------------------------------------------


_POLICY_SUBTREES = {"policy", "name"}


def _comparable_view(canonical: dict) -> dict:
    return {k: v for k, v in canonical.items() if k not in _POLICY_SUBTREES}


def cmd_compare(args: argparse.Namespace) -> int:
    configs = [load_scenario(path) for path in args.configs]
    if len(configs) < 2:
        raise ConfigError(["compare: need at least two configs"])
    reference = _comparable_view(configs[0].canonical_dict())
    for path, cfg in zip(args.configs[1:], configs[1:]):
        if _comparable_view(cfg.canonical_dict()) != reference:
            raise ConfigError(
                [f"compare: {path} differs from {args.configs[0]} outside policy fields"]
            )

    rows: list[dict] = []
    report = []
    for path, cfg in zip(args.configs, configs):
        jobs = []
        for rep in range(args.reps):
            obj = cfg.canonical_dict()
            obj["seed"] = cfg.seed + rep
            jobs.append({"cell_idx": 0, "rep": rep, "params": {}, "config": obj})
        results = _execute_jobs(jobs, args.parallel)
        cfg_rows = []
        for job, (_, summary) in zip(jobs, results):
            row = summary_to_row(
                summary,
                run_id=f"{cfg.name}-r{job['rep']:03d}",
                cell=cfg.name,
                params={"config": os.path.basename(path)},
            )
            cfg_rows.append(row)
        rows.extend(cfg_rows)
        aggregates = _aggregate_rows(cfg_rows, cfg.name, cfg_rows[0]["params"])
        rows.extend(aggregates)
        mean_row, std_row = aggregates
        report.append(
            {
                "name": cfg.name,
                "config": os.path.basename(path),
                "policy": cfg.canonical_dict()["policy"],
                "replications": args.reps,
                "metrics_mean": {c: mean_row[c] for c in _AGGREGATED if mean_row[c] != ""},
                "metrics_std": {c: std_row[c] for c in _AGGREGATED if std_row[c] != ""},
            }
        )

    os.makedirs(args.out, exist_ok=True)
    write_metrics_csv(os.path.join(args.out, "comparison.csv"), rows)
    with open(os.path.join(args.out, "comparison.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"compare complete: {len(configs)} configs x {args.reps} reps -> {args.out}")
    return 0


# --- entry point --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pseudosim",
        description="Simulate pseudonym lifecycles of connected vehicles and score the privacy/safety trade-off.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario")
    p_run.add_argument("--config", required=True, help="scenario JSON path")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--trace", action="store_true", help="also write trace.jsonl and linkage.json")
    p_run.add_argument("--seed-override", type=int, default=None)
    p_run.add_argument("--strict", action=argparse.BooleanOptionalAction, default=True,
                       help="reject unknown config fields (default on)")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a parameter grid")
    p_sweep.add_argument("--spec", required=True, help="sweep spec JSON path")
    p_sweep.add_argument("--out", required=True, help="output directory")
    p_sweep.add_argument("--parallel", type=int, default=1, help="worker processes")
    p_sweep.set_defaults(func=cmd_sweep)

    p_cmp = sub.add_parser("compare", help="compare change policies on one scenario")
    p_cmp.add_argument("--configs", nargs="+", required=True,
                       help="scenario JSONs differing only in policy fields")
    p_cmp.add_argument("--out", required=True, help="output directory")
    p_cmp.add_argument("--reps", type=int, default=5, help="replications per config")
    p_cmp.add_argument("--parallel", type=int, default=1, help="worker processes")
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for violation in exc.violations:
            print(f"config error: {violation}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
