"""Command-line entry point: ``aoipower <command> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from .config import ConfigError, SystemConfig, config_from_dict, load_config
from .harness import SWEEP_PARAMS, compare_solvers, run_simulation, sweep, write_outputs, write_sweep_csv
from .solver import GuardError, InfeasibleError, SlotProblem, solve_exhaustive, solve_suboptimal
from .state import sampling_weight

EXIT_CONFIG = 2
EXIT_GUARD = 3

# flag name -> config key
_FLAG_KEYS = {
    "K": "K",
    "N": "N",
    "T": "T",
    "V": "V",
    "seed": "seed",
    "delta_max": "delta_max",
    "policy": "policy",
    "solver": "solver",
    "refill": "greedy_refill",
    "topology": "topology",
}


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML config file")
    p.add_argument("--K", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--T", type=int)
    p.add_argument("--V", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--delta-max", dest="delta_max", type=float)
    p.add_argument("--policy", choices=["dpp", "fixed_rate"])
    p.add_argument("--solver", choices=["suboptimal", "exhaustive"])
    p.add_argument("--refill", choices=["sampling", "all"])
    p.add_argument("--topology", help="topology YAML file")
    p.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override any config field; VALUE is parsed as YAML",
    )


def _config(args) -> SystemConfig:
    cfg = load_config(args.config) if args.config else SystemConfig()
    overrides = {key: getattr(args, flag) for flag, key in _FLAG_KEYS.items() if getattr(args, flag) is not None}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = yaml.safe_load(value)
    if overrides:
        cfg = config_from_dict(overrides, base=cfg, root=Path.cwd())
    return cfg.validate()


def _print_json(doc) -> None:
    json.dump(doc, sys.stdout, indent=2)
    sys.stdout.write("\n")


def cmd_run(args) -> int:
    cfg = _config(args)
    metrics, trace = run_simulation(cfg)
    trace_path, metrics_path = write_outputs(args.out, metrics, trace, cfg)
    print(f"avg_total_power={metrics.avg_total_power:.6g} W  max avg AoI={metrics.avg_aoi.max():.4f}")
    print(f"wrote {trace_path} and {metrics_path}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    values = [int(v) if v.is_integer() else v for v in args.values]
    rows = sweep(args.param, values, cfg, seeds=args.seeds, workers=args.workers)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(rows, out)
    for r in rows:
        print(f"{r['param']}={r['value']}: power={r['avg_total_power']:.6g} queue_sum={r['avg_queue_sum']:.4g}")
    print(f"wrote {out}")
    return 0


def cmd_compare(args) -> int:
    cfg = _config(args)
    report = compare_solvers(cfg, trials=args.trials)
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2) + "\n")
    _print_json(report)
    return 0


def _load_doc(path: Path) -> dict:
    text = path.read_text()
    return json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)


def cmd_solve(args) -> int:
    doc = _load_doc(args.problem)
    try:
        gains = np.asarray(doc["gains"], dtype=float)
        if "weights" in doc:
            weights = np.asarray(doc["weights"], dtype=float)
        else:
            weights = sampling_weight(doc["aoi"], doc["queues"])
        eta = float(doc["eta_bits"]) if "eta_bits" in doc else 8.0 * float(doc.get("eta_bytes", 600))
        problem = SlotProblem(
            gains=gains,
            weights=np.atleast_1d(weights),
            V=float(doc.get("V", 8000.0)),
            W=float(doc.get("W", 180e3)),
            N0=float(doc.get("N0", 4e-21)),
            eta=eta,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad problem file: {exc}") from exc
    solver = args.solver or doc.get("solver", "suboptimal")
    if solver == "exhaustive":
        decision = solve_exhaustive(problem)
    elif solver == "suboptimal":
        decision = solve_suboptimal(problem, refill=doc.get("refill", "sampling"))
    else:
        raise ConfigError(f"unknown solver {solver!r}")
    _print_json(decision.to_dict())
    return 0


def cmd_validate(args) -> int:
    cfg = _config(args)
    print(f"ok: K={cfg.K} N={cfg.N} T={cfg.T} policy={cfg.policy} solver={cfg.solver}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aoipower", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single simulation; writes trace.csv and metrics.json")
    _add_config_args(p)
    p.add_argument("--out", default="out", help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="sweep V, N or deltaMax; writes sweep.csv")
    _add_config_args(p)
    p.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    p.add_argument("--values", required=True, nargs="+", type=float)
    p.add_argument("--seeds", nargs="+", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="sweep.csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare-solvers", help="suboptimal versus exhaustive on shared channels")
    _add_config_args(p)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--out", help="also write the report to this JSON file")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("solve", help="solve one per-slot problem from a YAML/JSON file")
    p.add_argument("problem", type=Path)
    p.add_argument("--solver", choices=["suboptimal", "exhaustive"])
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("validate-config", help="check a config and its overrides")
    _add_config_args(p)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InfeasibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
