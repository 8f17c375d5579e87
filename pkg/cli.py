#!/usr/bin/env python
"""
Anomaly detection in dynamic multigraphs from the command line.

Usage:
    python cli.py detect --input data/example_stream.txt --stats MSC,DSC,TP,GED --null loo --out out
    python cli.py detect --config data/detect.conf --alpha 0.01
    python cli.py attribute --input data/example_stream.txt --t 7 --statistic MS --out out
    python cli.py benchmark --config data/benchmark.conf --seed 42 --out out

Settings come from built-in defaults, then the flat `key = value` file given
by --config, then command-line flags (later wins).

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numeric degeneracy.
"""

import argparse
import logging
import sys
from collections.abc import Callable
from pathlib import Path

from attribution import DEFAULT_MAX_ELEMENTS, DEFAULT_TARGET, base_statistic, decompose, extract_subgraph
from detector import DetectorConfig, NullPolicy, detect
from errors import AnomalyError, ConfigError
from experiments import BenchmarkConfig, run_benchmark
from graph_core import DynamicNetwork, StreamSchema, parse_edge_stream, window_into_snapshots
from graph_stats import StatisticId
from report_io import (
    BIAS_COLUMNS,
    DENSITY_COLUMNS,
    RECALL_COLUMNS,
    REPORT_COLUMNS,
    TIMELINE_COLUMNS,
    attribution_dict,
    bias_rows,
    density_rows,
    detection_report_dict,
    load_flat_config,
    recall_rows,
    report_rows,
    save_csv,
    save_json,
    timeline_rows,
)
from synthgen import EdgeCountRange

logger = logging.getLogger(__name__)


def _stats(text: str) -> tuple[StatisticId, ...]:
    return tuple(StatisticId.parse(code) for code in text.split(",") if code.strip())


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _ranges(text: str) -> tuple[EdgeCountRange, ...]:
    return tuple(EdgeCountRange.parse(x) for x in text.split(",") if x.strip())


def _flag(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered not in ("true", "false"):
        raise ValueError(f"must be true or false, got {text!r}")
    return lowered == "true"


def _choice(*options: str) -> Callable[[str], str]:
    def convert(text: str) -> str:
        if text not in options:
            raise ValueError(f"must be one of {', '.join(options)}, got {text!r}")
        return text

    return convert


# key -> (converter, default as it would appear in a config file)
DETECT_KEYS = {
    "input": (Path, None),
    "window": (int, "1"),
    "strict": (_flag, "true"),
    "alpha": (float, "0.05"),
    "stats": (_stats, "MSC,DSC,TP"),
    "detrend": (_choice("none", "linear"), "none"),
    "null": (NullPolicy.parse, "loo"),
    "empty": (_choice("error", "skip"), "error"),
    "out": (Path, "out"),
    "format": (_choice("json", "csv"), "json"),
    "n_nodes": (int, None),
}
ATTRIBUTE_KEYS = {
    "input": (Path, None),
    "window": (int, "1"),
    "strict": (_flag, "true"),
    "t": (int, None),
    "statistic": (StatisticId.parse, "MS"),
    "target": (float, str(DEFAULT_TARGET)),
    "max_elements": (int, str(DEFAULT_MAX_ELEMENTS)),
    "out": (Path, "out"),
    "n_nodes": (int, None),
}
BENCHMARK_KEYS = {
    "seed": (int, "42"),
    "out": (Path, "out"),
    "alpha": (float, "0.05"),
    "statistics": (_stats, "GED,DD,CB,MSC,DSC,TP"),
    "edge_ranges": (_ranges, "1000-2000,3000-5000,7000-10000"),
    "n_null_samples": (int, "100"),
    "n_test_samples": (int, "100"),
    "skew_nodes": (int, None),
    "skew_levels": (_floats, None),
    "transitivity_nodes": (int, None),
    "transitivity_ratios": (_floats, None),
    "degree_nodes": (int, None),
    "powerlaw_exponents": (_floats, None),
    "bias_nodes": (int, None),
    "bias_edge_counts": (_ints, None),
    "bias_trials": (int, None),
    "density_nodes": (int, None),
    "density_e_min": (_ints, None),
    "density_e_delta": (_ints, None),
    "density_trials": (int, None),
}
COMMAND_KEYS = {"detect": DETECT_KEYS, "attribute": ATTRIBUTE_KEYS, "benchmark": BENCHMARK_KEYS}


def build_parser() -> argparse.ArgumentParser:
    """Subcommands detect, attribute and benchmark with their shared flags."""
    parser = argparse.ArgumentParser(
        description="Density-consistent anomaly detection for dynamic multigraphs."
    )
    commands = parser.add_subparsers(dest="command", required=True)

    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", type=Path, help="flat key = value settings file")
    shared.add_argument("--out", help="output directory (default: out)")
    shared.add_argument("--quiet", action="store_true", help="only warnings and errors")

    graph = argparse.ArgumentParser(add_help=False)
    graph.add_argument("--input", help="edge stream: one 'timestamp,i,j[,count]' per line")
    graph.add_argument("--window", help="window width in timestamp units (default: 1)")
    graph.add_argument("--n-nodes", help="node universe size (default: nodes seen)")
    graph.add_argument("--strict", help="true | false: false skips malformed lines (default: true)")

    p = commands.add_parser("detect", parents=[shared, graph], help="flag anomalous time steps")
    p.add_argument("--alpha", help="two-tailed test level (default: 0.05)")
    p.add_argument("--stats", help="comma list of GED,DD,CB,EC,MS,MSC,MSU,DS,DSC,DSU,TP,TPU")
    p.add_argument("--detrend", help="none | linear")
    p.add_argument("--null", help="loo | learning:T1..T2")
    p.add_argument("--empty", help="empty snapshot policy: error | skip")
    p.add_argument("--format", help="report format: json | csv")

    p = commands.add_parser("attribute", parents=[shared, graph], help="localise an anomaly")
    p.add_argument("--t", help="time step to explain")
    p.add_argument("--statistic", help="MS, DS or TP (corrected variants decompose as their base)")
    p.add_argument("--target", help="score fraction to cover (default: 0.5)")
    p.add_argument("--max-elements", help="cap on selected pairs or nodes (default: 50)")

    p = commands.add_parser("benchmark", parents=[shared], help="synthetic recall and bias experiments")
    p.add_argument("--seed", help="experiment seed (default: 42)")
    p.add_argument("--alpha", help="two-tailed test level (default: 0.05)")
    p.add_argument("--stats", dest="statistics", help="comma list of statistic codes")
    return parser


def resolve_settings(command: str, args: argparse.Namespace) -> dict:
    """defaults < config file < flags, converted per key."""
    keys = COMMAND_KEYS[command]
    raw = {key: default for key, (_, default) in keys.items() if default is not None}
    if args.config is not None:
        from_file = load_flat_config(args.config)
        unknown = sorted(set(from_file) - set(keys))
        if unknown:
            raise ConfigError(f"{args.config.name}: unknown key {unknown[0]!r} for {command}")
        raw.update(from_file)
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value

    settings = {}
    for key, text in raw.items():
        convert = keys[key][0]
        try:
            settings[key] = convert(text)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None
    return settings


def load_network(settings: dict) -> DynamicNetwork:
    """Read the input edge stream and window it into snapshots."""
    path = settings.get("input")
    if path is None:
        raise ConfigError("input: no edge stream given")
    if not path.is_file():
        raise ConfigError(f"input: file not found: {path}")
    stream = parse_edge_stream(path, StreamSchema(strict=settings["strict"]))
    net = window_into_snapshots(stream, settings["window"], settings.get("n_nodes"))
    logger.info("loaded %d snapshots over %d nodes from %s", len(net), net.n_nodes, path)
    return net


def cmd_detect(settings: dict, verbose: bool = True) -> list[Path]:
    """Run detection and write the report plus a timeline."""
    cfg = DetectorConfig(
        alpha=settings["alpha"],
        statistics=settings["stats"],
        null_policy=settings["null"],
        detrend=settings["detrend"],
        empty_snapshot_policy=settings["empty"],
    )
    net = load_network(settings)
    report = detect(net, cfg)

    out = settings["out"]
    if settings["format"] == "json":
        report_file = out / "report.json"
        save_json(detection_report_dict(report, net), report_file)
    else:
        report_file = out / "report.csv"
        save_csv(report_rows(report), REPORT_COLUMNS, report_file)
    timeline_file = out / "timeline.csv"
    save_csv(timeline_rows(report), TIMELINE_COLUMNS, timeline_file)

    if verbose:
        print("=" * 60)
        print("Detection Complete")
        print("=" * 60)
        for result in report.results:
            flagged = ", ".join(str(t) for t in result.flagged_times) or "-"
            print(f"{result.statistic.code:<4} flagged: {flagged}")
        print(f"Output: {report_file}, {timeline_file}")
    return [report_file, timeline_file]


def cmd_attribute(settings: dict, verbose: bool = True) -> list[Path]:
    """Explain one flagged step and write attribution.json."""
    stat = settings["statistic"]
    base_statistic(stat)
    if "t" not in settings:
        raise ConfigError("t: time step to attribute is required")
    net = load_network(settings)
    t = settings["t"]
    cm = decompose(stat, net, t)
    sub = extract_subgraph(cm, net, t, settings["target"], settings["max_elements"])

    out_file = settings["out"] / "attribution.json"
    save_json(attribution_dict(cm, sub, net), out_file)
    if verbose:
        print("=" * 60)
        print(f"Attribution of {cm.statistic.code} at t={t}")
        print("=" * 60)
        print(f"Nodes: {len(sub.nodes)}, elements: {len(sub.contributing_elements)}")
        print(f"Covered: {100 * sub.covered_fraction:.1f}% of {cm.total:.6g}")
        print(f"Output: {out_file}")
    return [out_file]


def cmd_benchmark(settings: dict, verbose: bool = True) -> list[Path]:
    """Run the recall, bias and density experiments and write their CSVs."""
    fields = {k: v for k, v in settings.items() if k != "out"}
    cfg = BenchmarkConfig(**fields)
    recall, bias, density = run_benchmark(cfg, progress=verbose, verbose=verbose)

    out = settings["out"]
    files = [out / "recall.csv", out / "bias.csv", out / "density.csv"]
    save_csv(recall_rows(recall), RECALL_COLUMNS, files[0])
    save_csv(bias_rows(bias), BIAS_COLUMNS, files[1])
    save_csv(density_rows(density), DENSITY_COLUMNS, files[2])
    if verbose:
        print("\n" + "=" * 60)
        print("Benchmark Complete")
        print("=" * 60)
        print(f"Output: {', '.join(str(f) for f in files)}")
    return files


COMMANDS = {"detect": cmd_detect, "attribute": cmd_attribute, "benchmark": cmd_benchmark}


def main(argv: list[str] | None = None) -> int:
    """Entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        settings = resolve_settings(args.command, args)
        COMMANDS[args.command](settings, verbose=not args.quiet)
    except AnomalyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
