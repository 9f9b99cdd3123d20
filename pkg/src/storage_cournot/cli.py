"""storage-cournot command line driver.

    storage-cournot validate --config run.json
    storage-cournot ingest   --config run.json --out prepared/
    storage-cournot size     --config run.json
    storage-cournot nash     --config run.json --out runs/duopoly
    storage-cournot planner  --config run.json --out runs/planner
    storage-cournot sweep    --config run.json --jobs 4
    storage-cournot compare  runs/a/summary.json runs/b/summary.json --out cmp.csv

Exit codes: 0 success (also for best-response cycles, flagged in the
summary), 2 configuration error, 3 data error, 4 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .best_response import InfeasibleBestResponse
from .experiments import ConfigError, RunConfig, build_scenario, config_dict, load_market, run_point
from .ingest import DataError, write_demand_csv, write_res_csv
from .milp import MilpError
from .model import validate_scenario
from .planner import InfeasiblePlanner

log = logging.getLogger("storage_cournot")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_SOLVER = 0, 2, 3, 4
COMPARE_FIELDS = ("social_welfare", "consumer_surplus", "producer_surplus", "unmet", "curtailment",
                  "mean_price", "peak_price")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, default=_json_default) + "\n", encoding="utf-8")


def write_rows(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)


def write_run(result, out: Path) -> dict:
    header, rows = result.outcome_rows()
    write_rows(out / "outcome.csv", header, rows)
    summary = result.summary()
    write_json(out / "summary.json", summary)
    return summary


# -- subcommands ----------------------------------------------------------------


def cmd_validate(cfg: RunConfig, args) -> int:
    scenario, info = build_scenario(cfg)
    violations = validate_scenario(scenario)
    for v in violations:
        print(v)
    if violations:
        return EXIT_DATA
    print(f"ok: {scenario.T} hours, {len(scenario.players)} players, {info.get('demand_day')}")
    return EXIT_OK


def cmd_ingest(cfg: RunConfig, args) -> int:
    curves, res, info = load_market(cfg)
    out = args.out or cfg.out
    out.mkdir(parents=True, exist_ok=True)
    write_demand_csv(out / "curves.csv", curves, day=str(info.get("demand_day", "d1")))
    write_res_csv(out / "res.csv", res)
    write_json(out / "ingest.json", info)
    print(json.dumps(info))
    return EXIT_OK


def cmd_size(cfg: RunConfig, args) -> int:
    scenario, info = build_scenario(cfg)
    report = {
        "e_max": info["e_max"],
        "q_max": info["q_max"],
        "theta": cfg.theta,
        "players": [{"id": p.player_id, "e_max": p.e_max, "q_max": p.q_max, "offers": p.levels.tolist()}
                    for p in scenario.players],
    }
    if args.out:
        write_json(args.out / "sizing.json", report)
    print(json.dumps(report, indent=2, default=_json_default))
    return EXIT_OK


def _cmd_single(mode: str):
    def run(cfg: RunConfig, args) -> int:
        result = run_point(cfg, mode)
        out = args.out or cfg.out
        summary = write_run(result, out)
        t = summary["totals"]
        print(f"{mode}: SW {t['social_welfare']:.2f}  unmet {t['unmet']:.1f}  peak {t['peak_price']:.2f}"
              f"  converged {summary['converged']}  -> {out}")
        return EXIT_OK

    return run


def _sweep_point(cfg: RunConfig, overrides: dict, out: Path) -> dict:
    result = run_point(cfg, cfg.sweep_mode, **overrides)
    write_run(result, out)
    return result.summary()


def cmd_sweep(cfg: RunConfig, args) -> int:
    grid = cfg.grid()
    out = args.out or cfg.out
    dirs = [out / f"point_{k:03d}" for k in range(len(grid))]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            summaries = list(pool.map(_sweep_point, [cfg] * len(grid), grid, dirs))
    else:
        summaries = [_sweep_point(cfg, g, d) for g, d in zip(grid, dirs)]
    axes = list(grid[0])
    header = ["point", *axes, "converged", *COMPARE_FIELDS]
    rows = []
    for k, (g, s) in enumerate(zip(grid, summaries)):
        rows.append([k, *(g[a] for a in axes), s["converged"], *(s["totals"][f] for f in COMPARE_FIELDS)])
    write_rows(out / "sweep.csv", header, rows)
    print(f"sweep: {len(rows)} points -> {out / 'sweep.csv'}")
    return EXIT_OK


def compare_runs(paths) -> tuple[list[str], list[list]]:
    """Side-by-side totals of several run summaries, with deltas against the first."""
    paths = [Path(p) for p in paths]
    if len(paths) < 2:
        raise ConfigError("compare needs at least two summaries")
    summaries = []
    for p in paths:
        try:
            s = json.loads(p.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"{p}: {exc}") from None
        if not isinstance(s, dict) or "totals" not in s or "horizon" not in s:
            raise DataError(f"{p}: not a run summary")
        missing = [f for f in COMPARE_FIELDS if f not in s["totals"]]
        if missing:
            raise DataError(f"{p}: summary lacks {missing}")
        summaries.append(s)
    if len({s["horizon"] for s in summaries}) != 1:
        raise DataError("summaries cover different horizons")
    n_players = max(len(s.get("players", [])) for s in summaries)
    header = ["run", "mode", *COMPARE_FIELDS, *(f"delta_{f}" for f in COMPARE_FIELDS),
              *(f"profit_{k + 1}" for k in range(n_players))]
    base = summaries[0]["totals"]
    rows = []
    for p, s in zip(paths, summaries):
        t = s["totals"]
        profits = [pl["profit"] for pl in s.get("players", [])]
        profits += [""] * (n_players - len(profits))
        rows.append([str(p), s.get("mode", ""), *(t[f] for f in COMPARE_FIELDS),
                     *(t[f] - base[f] for f in COMPARE_FIELDS), *profits])
    return header, rows


def cmd_compare(args) -> int:
    header, rows = compare_runs(args.summaries)
    if args.out:
        target = args.out if args.out.suffix == ".csv" else args.out / "comparison.csv"
        write_rows(target, header, rows)
    else:
        w = csv.writer(sys.stdout)
        w.writerow(header)
        w.writerows(rows)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "ingest": cmd_ingest,
    "size": cmd_size,
    "nash": _cmd_single("nash"),
    "planner": _cmd_single("planner"),
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="storage-cournot", description="Strategic storage in a day-ahead market.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, required=True)
        p.add_argument("--out", type=Path)
        p.add_argument("--tolerance", type=float)
        p.add_argument("--max-sweeps", type=int)
        p.add_argument("--jobs", type=int, default=1)
    p = sub.add_parser("compare")
    p.add_argument("summaries", nargs="+", type=Path)
    p.add_argument("--out", type=Path)
    return parser


def _provenance(exc: BaseException) -> str:
    module = type(exc).__module__.rsplit(".", 1)[-1]
    tb = exc.__traceback__
    while tb is not None and tb.tb_next is not None:
        tb = tb.tb_next
    if tb is not None:
        module = Path(tb.tb_frame.f_code.co_filename).stem
    return module


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "compare":
            return cmd_compare(args)
        cfg = RunConfig.load(args.config)
        overrides = {}
        if args.tolerance is not None:
            overrides["tolerance"] = args.tolerance
        if args.max_sweeps is not None:
            overrides["max_sweeps"] = args.max_sweeps
        if overrides:
            cfg = cfg.point(**overrides)
        if args.command == "sweep" and not cfg.sweep:
            raise ConfigError("config has no sweep axes")
        if args.command == "validate":
            log.debug("config: %s", config_dict(cfg))
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"data error [{_provenance(exc)}]: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InfeasibleBestResponse, InfeasiblePlanner, MilpError, RuntimeError, ValueError) as exc:
        print(f"solver error [{_provenance(exc)}]: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
