"""Shared read/write helpers: flat config files, JSON/CSV reports."""

import csv
import json
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path

from attribution import AnomalySubgraph, ContributionMap
from detector import DetectionReport, NullModel, StatisticReport, TrendFit
from errors import ConfigError
from experiments import BiasRow, DensityRow, RecallResult
from graph_core import DynamicNetwork

RECALL_COLUMNS = ("statistic", "edge_lo", "edge_hi", "recall", "stderr", "n")
BIAS_COLUMNS = ("statistic", "edges", "mean", "sd", "stderr", "true_value", "expected")
DENSITY_COLUMNS = ("statistic", "e_min", "e_delta", "same_p", "median")
TIMELINE_COLUMNS = ("t", "statistic", "value", "z", "flag")
REPORT_COLUMNS = ("statistic", "t", "raw", "detrended", "z", "lower", "upper", "flagged", "skipped")


# --- files -------------------------------------------------------------------


def dump_json(obj) -> str:
    """Two-space indented JSON text with a trailing newline. NaN is rejected."""
    return json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def save_json(obj, path: Path):
    """Write dump_json output, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dump_json(obj))


def save_csv(rows: Iterable[Mapping], columns: Sequence[str], path: Path):
    """Write rows under a fixed header, None as an empty cell."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _csv_value(row[k]) for k in columns})


def _csv_value(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return int(value)
    return value


def load_flat_config(path: Path) -> dict[str, str]:
    """
    Parse `key = value` lines. '#' starts a comment, blank lines are ignored,
    a repeated key is an error.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if not sep or not key:
                raise ConfigError(f"{path.name} line {line_no}: expected 'key = value'")
            if key in values:
                raise ConfigError(f"{path.name} line {line_no}: duplicate key {key!r}")
            values[key] = value.strip()
    return values


# --- report payloads -----------------------------------------------------------


def _trend_dict(trend: TrendFit | None):
    return None if trend is None else {"intercept": trend.intercept, "slope": trend.slope}


def _null_dict(null: NullModel | None):
    if null is None:
        return None
    return {
        "mean": null.mean,
        "sd": null.sd,
        "phi_lower": null.phi_lower,
        "phi_upper": null.phi_upper,
        "z_crit": null.z_crit,
    }


def _statistic_dict(result: StatisticReport) -> dict:
    stat = result.statistic
    return {
        "statistic": stat.code,
        "name": stat.value,
        "family": stat.family,
        "trend": _trend_dict(result.trend),
        "null": _null_dict(result.null),
        "flagged": list(result.flagged_times),
        "skipped": list(result.skipped_times),
        "rows": [
            {
                "t": r.t,
                "raw": r.raw,
                "detrended": r.detrended,
                "z": r.z,
                "lower": r.lower,
                "upper": r.upper,
                "flagged": r.flagged,
                "skipped": r.skipped,
            }
            for r in result.rows
        ],
    }


def detection_report_dict(report: DetectionReport, net: DynamicNetwork | None = None) -> dict:
    cfg = report.config
    payload = {
        "config": {
            "alpha": cfg.alpha,
            "statistics": [s.code for s in cfg.statistics],
            "null": str(cfg.null_policy),
            "detrend": cfg.detrend,
            "empty": cfg.empty_snapshot_policy,
        }
    }
    if net is not None:
        payload["network"] = {
            "n_nodes": net.n_nodes,
            "first_t": net.times[0],
            "last_t": net.times[-1],
            "n_snapshots": len(net),
            "dropped_self_loops": net.dropped_self_loops,
        }
    payload["statistics"] = [_statistic_dict(r) for r in report.results]
    return payload


def report_rows(report: DetectionReport) -> list[dict]:
    """One row per statistic and time step."""
    return [
        {"statistic": result.statistic.code, **row}
        for result in report.results
        for row in _statistic_dict(result)["rows"]
    ]


def timeline_rows(report: DetectionReport) -> list[dict]:
    """One row per (t, statistic), ordered by t, for plotting flag timelines."""
    keyed = [
        ((r.t, k), {"t": r.t, "statistic": result.statistic.code, "value": r.raw, "z": r.z, "flag": r.flagged})
        for k, result in enumerate(report.results)
        for r in result.rows
    ]
    return [row for _, row in sorted(keyed, key=lambda item: item[0])]


def _element(element, net: DynamicNetwork, kind: str):
    if kind == "per_pair":
        return [net.label_of(element[0]), net.label_of(element[1])]
    return net.label_of(element)


def _edge_list(edges: Mapping, net: DynamicNetwork) -> list[dict]:
    return [
        {"i": net.label_of(i), "j": net.label_of(j), "count": c}
        for (i, j), c in sorted(edges.items())
    ]


def attribution_dict(cm: ContributionMap, sub: AnomalySubgraph, net: DynamicNetwork) -> dict:
    """JSON payload for an extracted subgraph, with node labels."""
    return {
        "statistic": sub.statistic.code,
        "t": sub.t,
        "kind": cm.kind,
        "total": cm.total,
        "target_fraction": sub.target_fraction,
        "covered_fraction": sub.covered_fraction,
        "target_reached": sub.target_reached,
        "nodes": [net.label_of(i) for i in sub.nodes],
        "contributing_elements": [
            {"element": _element(e, net, cm.kind), "score": score}
            for e, score in sub.contributing_elements
        ],
        "edges_before": _edge_list(sub.edges_before, net),
        "edges_after": _edge_list(sub.edges_after, net),
    }


def recall_rows(results: Iterable[RecallResult]) -> list[dict]:
    return [
        {
            "statistic": r.statistic.code,
            "edge_lo": r.edge_lo,
            "edge_hi": r.edge_hi,
            "recall": r.recall,
            "stderr": r.stderr,
            "n": r.n,
        }
        for r in results
    ]


def bias_rows(rows: Iterable[BiasRow]) -> list[dict]:
    return [
        {
            "statistic": r.statistic.code,
            "edges": r.edges,
            "mean": r.mean,
            "sd": r.sd,
            "stderr": r.stderr,
            "true_value": r.true_value,
            "expected": r.expected,
        }
        for r in rows
    ]


def density_rows(rows: Iterable[DensityRow]) -> list[dict]:
    return [
        {
            "statistic": r.statistic.code,
            "e_min": r.e_min,
            "e_delta": r.e_delta,
            "same_p": r.same_p,
            "median": r.median,
        }
        for r in rows
    ]
