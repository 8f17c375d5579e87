"""
Statistic-based anomaly detection over a dynamic network.

For each requested statistic: compute its series, optionally remove a linear
trend fitted on the learning points, fit a normal null (sample mean and sd)
on the learning residuals, and flag every time step whose residual falls
outside mean +/- z(1 - alpha/2) * sd.

Two null policies:
    learning:T1..T2   fit once on the given time steps, test every step
    loo               leave-one-out, refit trend and null for each step
                      on all other steps
"""

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.stats import norm

from errors import ConfigError, DegenerateNullError
from graph_core import DynamicNetwork
from graph_stats import EmptyPolicy, StatisticId, StatisticSeries, compute_series

logger = logging.getLogger(__name__)

DetrendMode = Literal["none", "linear"]

DEFAULT_STATISTICS = (StatisticId.MS_CORRECTED, StatisticId.DS_CORRECTED, StatisticId.TP)


@dataclass(frozen=True)
class NullPolicy:
    kind: Literal["learning", "loo"]
    learning_ts: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in ("learning", "loo"):
            raise ConfigError(f"null policy must be 'learning' or 'loo', got {self.kind!r}")
        if self.kind == "learning" and not self.learning_ts:
            raise ConfigError("null: learning window is empty")

    @classmethod
    def leave_one_out(cls) -> "NullPolicy":
        """Refit the null without each test point in turn."""
        return cls("loo")

    @classmethod
    def learning(cls, ts: Iterable[int]) -> "NullPolicy":
        """Fit once on the given time steps."""
        return cls("learning", tuple(sorted(set(int(t) for t in ts))))

    @classmethod
    def parse(cls, text: str) -> "NullPolicy":
        """'loo', 'learning:0..99' (inclusive) or 'learning:3,5,8'."""
        text = text.strip()
        if text in ("loo", "leave_one_out"):
            return cls.leave_one_out()
        kind, _, window = text.partition(":")
        if kind != "learning" or not window:
            raise ConfigError(f"null must be 'loo' or 'learning:T1..T2', got {text!r}")
        try:
            if ".." in window:
                lo, hi = (int(x) for x in window.split(".."))
                if lo > hi:
                    raise ConfigError(f"null: empty learning window {window!r}")
                return cls.learning(range(lo, hi + 1))
            return cls.learning(int(x) for x in window.split(","))
        except ValueError:
            raise ConfigError(f"null: cannot parse learning window {window!r}") from None

    def __str__(self):
        if self.kind == "loo":
            return "loo"
        ts = self.learning_ts
        if ts == tuple(range(ts[0], ts[-1] + 1)):
            return f"learning:{ts[0]}..{ts[-1]}"
        return "learning:" + ",".join(str(t) for t in ts)


@dataclass(frozen=True)
class DetectorConfig:
    alpha: float = 0.05
    statistics: tuple[StatisticId, ...] = DEFAULT_STATISTICS
    null_policy: NullPolicy = field(default_factory=NullPolicy.leave_one_out)
    detrend: DetrendMode = "none"
    empty_snapshot_policy: EmptyPolicy = "error"

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.statistics:
            raise ConfigError("stats: no statistic requested")
        object.__setattr__(self, "statistics", tuple(dict.fromkeys(self.statistics)))
        if self.detrend not in ("none", "linear"):
            raise ConfigError(f"detrend must be 'none' or 'linear', got {self.detrend!r}")
        if self.empty_snapshot_policy not in ("error", "skip"):
            raise ConfigError(
                f"empty must be 'error' or 'skip', got {self.empty_snapshot_policy!r}"
            )


@dataclass(frozen=True)
class TrendFit:
    intercept: float = 0.0
    slope: float = 0.0

    def __call__(self, t):
        return self.intercept + self.slope * np.asarray(t, dtype=np.float64)


@dataclass(frozen=True)
class NullModel:
    mean: float
    sd: float
    phi_lower: float
    phi_upper: float
    z_crit: float

    def z_score(self, x: float) -> float:
        """Standardised distance from the null mean."""
        return (x - self.mean) / self.sd

    def rejects(self, x: float) -> bool:
        """True when x falls outside the two-tailed thresholds."""
        return bool(x < self.phi_lower or x > self.phi_upper)


@dataclass(frozen=True)
class DetectionRow:
    t: int
    raw: float | None
    detrended: float | None
    z: float | None
    lower: float | None
    upper: float | None
    flagged: bool
    skipped: bool = False


@dataclass(frozen=True)
class StatisticReport:
    statistic: StatisticId
    rows: tuple[DetectionRow, ...]
    # fitted once under a learning window; None under leave-one-out
    trend: TrendFit | None = None
    null: NullModel | None = None

    @property
    def flagged_times(self) -> tuple[int, ...]:
        return tuple(r.t for r in self.rows if r.flagged)

    @property
    def skipped_times(self) -> tuple[int, ...]:
        return tuple(r.t for r in self.rows if r.skipped)

    @property
    def flag_rate(self) -> float:
        """Share of tested rows that were flagged."""
        tested = [r for r in self.rows if not r.skipped]
        return sum(r.flagged for r in tested) / len(tested) if tested else 0.0


@dataclass(frozen=True)
class DetectionReport:
    config: DetectorConfig
    results: tuple[StatisticReport, ...]

    def __getitem__(self, stat: StatisticId) -> StatisticReport:
        for result in self.results:
            if result.statistic == stat:
                return result
        raise KeyError(stat)

    def flagged(self, stat: StatisticId) -> tuple[int, ...]:
        """Flagged time steps for one statistic."""
        return self[stat].flagged_times


def critical_value(alpha: float) -> float:
    """Two-tailed normal critical value z(1 - alpha/2)."""
    return float(norm.ppf(1.0 - alpha / 2.0))


def _fit_line(ts: np.ndarray, values: np.ndarray, mode: DetrendMode) -> TrendFit:
    if mode == "none":
        return TrendFit()
    if len(np.unique(ts)) < 2:
        raise ConfigError("linear detrending needs at least 2 distinct learning time steps")
    slope, intercept = np.polyfit(ts.astype(np.float64), values, 1)
    return TrendFit(float(intercept), float(slope))


def fit_trend(series: StatisticSeries, learning_ts: Sequence[int], mode: DetrendMode) -> TrendFit:
    """Least-squares line through the series' values at learning_ts (zero fit for mode='none')."""
    ts, values = series.valid()
    mask = np.isin(ts, np.asarray(list(learning_ts), dtype=np.int64))
    return _fit_line(ts[mask], values[mask], mode)


def fit_null(values: Sequence[float], alpha: float, statistic: str = "statistic") -> NullModel:
    """Normal null from a sample; raises DegenerateNullError on zero spread."""
    values = np.asarray(values, dtype=np.float64)
    if len(values) < 3:
        raise ConfigError(f"{statistic}: null needs at least 3 values, got {len(values)}")
    mean = float(values.mean())
    sd = float(values.std(ddof=1))
    if not np.isfinite(sd) or sd <= 0.0:
        raise DegenerateNullError(statistic, "null distribution has zero variance")
    z = critical_value(alpha)
    return NullModel(mean, sd, mean - z * sd, mean + z * sd, z)


def _row(t: int, raw: float, detrended: float, null: NullModel) -> DetectionRow:
    return DetectionRow(
        int(t),
        float(raw),
        float(detrended),
        null.z_score(float(detrended)),
        null.phi_lower,
        null.phi_upper,
        null.rejects(float(detrended)),
    )


def detect_series(series: StatisticSeries, cfg: DetectorConfig) -> StatisticReport:
    """Test every time step of one statistic's series."""
    stat = series.statistic
    ts, values = series.valid()
    by_time: dict[int, DetectionRow] = {
        t: DetectionRow(t, None, None, None, None, None, False, skipped=True)
        for t in series.skipped
    }
    trend = null = None

    if cfg.null_policy.kind == "learning":
        missing = sorted(set(cfg.null_policy.learning_ts) - set(series.times))
        if missing:
            raise ConfigError(
                f"{stat.code}: learning window has no value at t={missing[0]}"
                + (" (delta statistics need t-1)" if stat.is_delta else "")
            )
        learn = np.isin(ts, np.asarray(cfg.null_policy.learning_ts, dtype=np.int64))
        trend = _fit_line(ts[learn], values[learn], cfg.detrend)
        residuals = values - trend(ts)
        null = fit_null(residuals[learn], cfg.alpha, stat.code)
        for t, raw, res in zip(ts, values, residuals):
            by_time[int(t)] = _row(t, raw, res, null)
    else:
        index = np.arange(len(ts))
        for k in index:
            rest = index != k
            fit = _fit_line(ts[rest], values[rest], cfg.detrend)
            point_null = fit_null(values[rest] - fit(ts[rest]), cfg.alpha, stat.code)
            by_time[int(ts[k])] = _row(ts[k], values[k], values[k] - fit(ts[k]), point_null)

    rows = tuple(by_time[t] for t in series.times)
    report = StatisticReport(stat, rows, trend, null)
    logger.info(
        "%s: %d of %d steps flagged, %d skipped",
        stat.code,
        len(report.flagged_times),
        len(rows) - len(report.skipped_times),
        len(report.skipped_times),
    )
    return report


def detect(net: DynamicNetwork, cfg: DetectorConfig) -> DetectionReport:
    """Compute every configured statistic over the network and test each step."""
    results = []
    for stat in cfg.statistics:
        series = compute_series(stat, net, cfg.empty_snapshot_policy)
        results.append(detect_series(series, cfg))
    return DetectionReport(cfg, tuple(results))
