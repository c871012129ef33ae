"""Command line entry point: ``moasha run|sweep|metrics|front|bench gen``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from moasha.bench import generate_tabular
from moasha.core import EvaluationLog
from moasha.experiment import (
    CLOCKS,
    FRONT_FILE,
    LOG_FILE,
    METHODS,
    ConfigError,
    ExperimentConfig,
    compute_metrics,
    final_front,
    front_to_csv,
    method_slug,
    run_experiment,
)

logger = logging.getLogger("moasha")


class CliError(Exception):
    pass


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    path = Path(args.config)
    if not path.is_file():
        raise CliError(f"config file not found: {path}")
    config = ExperimentConfig.load(path)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "method", None):
        overrides["method"] = args.method
    if args.clock:
        overrides["clock"] = args.clock
    return config.replace(**overrides) if overrides else config


def cmd_run(args: argparse.Namespace) -> None:
    config = _load_config(args)
    result = run_experiment(config, args.out)
    print(f"{config.method}: {len(result.log)} evaluations -> {args.out}")


def _parse_seeds(text: str) -> list[int]:
    if "-" in text:
        lo, hi = text.split("-", 1)
        return list(range(int(lo), int(hi) + 1))
    if "," in text:
        return [int(s) for s in text.split(",")]
    return list(range(int(text)))


def cmd_sweep(args: argparse.Namespace) -> None:
    base = _load_config(args)
    methods = args.methods.split(",") if args.methods else list(METHODS)
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r}")
    out = Path(args.out)
    logs: dict[str, EvaluationLog] = {}
    for method in methods:
        for seed in _parse_seeds(args.seeds):
            name = f"{method_slug(method)}-seed{seed}"
            result = run_experiment(base.replace(method=method, seed=seed), out / name)
            logs[name] = result.log
            print(f"{name}: {len(result.log)} evaluations")
    _write_metrics(logs, out / "pooled")


def _write_metrics(logs: dict[str, EvaluationLog], out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    series, reference = compute_metrics(logs.values())
    for name, s in zip(logs, series):
        (out / f"{name}.metrics.csv").write_text(s.to_csv(), encoding="utf-8")
    points = reference.points[reference.points[:, 0].argsort()] if reference else final_front(EvaluationLog())
    (out / "reference_front.csv").write_text(front_to_csv(points), encoding="utf-8")


def _log_name(path: Path, taken: set[str]) -> str:
    base = path.parent.name if path.name == LOG_FILE and path.parent.name else path.stem
    name, i = base, 1
    while name in taken:
        name = f"{base}-{i}"
        i += 1
    taken.add(name)
    return name


def _read_log(path: str) -> EvaluationLog:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"log file not found: {p}")
    return EvaluationLog.load(p)


def cmd_metrics(args: argparse.Namespace) -> None:
    taken: set[str] = set()
    logs = {_log_name(Path(p), taken): _read_log(p) for p in args.logs}
    _write_metrics(logs, Path(args.out))
    print(f"metrics for {len(logs)} logs -> {args.out}")


def cmd_front(args: argparse.Namespace) -> None:
    log = _read_log(args.log)
    out = Path(args.out)
    if out.suffix != ".csv":
        out.mkdir(parents=True, exist_ok=True)
        out = out / FRONT_FILE
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(front_to_csv(final_front(log)), encoding="utf-8")
    print(f"front -> {out}")


def cmd_bench_gen(args: argparse.Namespace) -> None:
    bench = generate_tabular(args.configs, args.seed, args.objectives, args.R, args.noise)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    bench.save(out)
    print(f"tabular benchmark with {bench.n_configs} configs -> {out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="moasha", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment_flags(p: argparse.ArgumentParser, with_method: bool = True) -> None:
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--out", required=True, metavar="DIR")
        p.add_argument("--seed", type=int, metavar="N", help="overrides the config seed")
        if with_method:
            p.add_argument("--method", choices=METHODS)
        p.add_argument("--clock", choices=CLOCKS)

    p = sub.add_parser("run", help="run one experiment")
    experiment_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="repeat an experiment over seeds and methods")
    experiment_flags(p, with_method=False)
    p.add_argument("--seeds", default="10", help="count N (0..N-1), range A-B, or list a,b,c")
    p.add_argument("--methods", help="comma-separated subset of: " + ", ".join(METHODS))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("metrics", help="hypervolume series for logs against their pooled front")
    p.add_argument("logs", nargs="+", metavar="LOG")
    p.add_argument("--out", required=True, metavar="DIR")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("front", help="final normalized Pareto front of a log")
    p.add_argument("log", metavar="LOG")
    p.add_argument("--out", required=True, metavar="PATH")
    p.set_defaults(func=cmd_front)

    bench = sub.add_parser("bench", help="benchmark utilities")
    bench_sub = bench.add_subparsers(dest="bench_command", required=True)
    p = bench_sub.add_parser("gen", help="generate and store a tabular benchmark")
    p.add_argument("--configs", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--objectives", type=int, default=2)
    p.add_argument("--R", type=int, default=200)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--out", required=True, metavar="PATH")
    p.set_defaults(func=cmd_bench_gen)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        args.func(args)
    except (CliError, ConfigError, ValueError, OSError) as exc:
        print(f"moasha: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
