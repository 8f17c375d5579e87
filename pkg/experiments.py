"""
Monte-Carlo experiments on synthetic multigraphs.

    run_recall_experiment   rejection rate of a statistic's null test on graphs
                            from contrasting model parameters (recall), or from
                            the same parameters (false-positive calibration)
    run_bias_suite          means and sds of the estimators on same-distribution
                            snapshot pairs, next to their true and expected values
    run_density_suite       median GED/DD as |E| grows with P held fixed
    run_benchmark           all three over the configured grid

Trials are keyed by (seed, task...) through synthgen.trial_rng, so results do
not depend on the order trials run in.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from detector import fit_null
from errors import ConfigError
from graph_core import EdgeDistribution
from graph_stats import StatisticId, barrat_clustering, evaluate, triangle_probability
from synthgen import (
    DEGREE_NODES,
    POWERLAW_EXPONENTS,
    SKEW_LEVELS,
    SKEW_NODES,
    TRANSITIVITY_NODES,
    TRANSITIVITY_RATIOS,
    BlockModelSpec,
    EdgeCountRange,
    GeneratorSpec,
    chung_lu_distribution,
    degree_family,
    distribution_of,
    sample_snapshot,
    skew_family,
    transitivity_family,
    trial_rng,
    two_block_spec,
)

logger = logging.getLogger(__name__)

MIN_NULL_SAMPLES = 10
MIN_BIAS_TRIALS = 1000
# spawn key of the draw shared by every family member (common random numbers)
FAMILY_DRAW_KEY = 7919

BIAS_STATISTICS = (
    StatisticId.MS,
    StatisticId.MS_CORRECTED,
    StatisticId.MS_UNBIASED,
    StatisticId.DS,
    StatisticId.DS_CORRECTED,
    StatisticId.DS_UNBIASED,
    StatisticId.TP,
    StatisticId.TP_UNBIASED,
    StatisticId.CB,
)
DENSITY_STATISTICS = (StatisticId.GED, StatisticId.DD)


@dataclass(frozen=True)
class RecallExperimentSpec:
    """null_family[k] is contrasted with alt_family[k]."""

    statistic: StatisticId
    null_family: tuple[GeneratorSpec, ...]
    alt_family: tuple[GeneratorSpec, ...]
    edge_range: EdgeCountRange
    n_null_samples: int = 100
    n_test_samples: int = 100
    alpha: float = 0.05
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "null_family", tuple(self.null_family))
        object.__setattr__(self, "alt_family", tuple(self.alt_family))
        if not self.null_family or len(self.null_family) != len(self.alt_family):
            raise ConfigError("null and alt families must be non-empty and of equal length")
        if self.n_null_samples < MIN_NULL_SAMPLES:
            raise ConfigError(
                f"n_null_samples must be at least {MIN_NULL_SAMPLES}, got {self.n_null_samples}"
            )
        if self.n_test_samples < 1:
            raise ConfigError(f"n_test_samples must be positive, got {self.n_test_samples}")
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class RecallResult:
    statistic: StatisticId
    edge_lo: int
    edge_hi: int
    recall: float
    stderr: float
    n: int
    per_pair: tuple[float, ...] = ()


@dataclass(frozen=True)
class BiasRow:
    statistic: StatisticId
    edges: int
    mean: float
    sd: float
    stderr: float
    true_value: float
    expected: float | None


@dataclass(frozen=True)
class DensityRow:
    statistic: StatisticId
    e_min: int
    e_delta: int
    same_p: bool
    median: float


@dataclass(frozen=True)
class BenchmarkConfig:
    seed: int = 42
    alpha: float = 0.05
    statistics: tuple[StatisticId, ...] = (
        StatisticId.GED,
        StatisticId.DD,
        StatisticId.CB,
        StatisticId.MS_CORRECTED,
        StatisticId.DS_CORRECTED,
        StatisticId.TP,
    )
    edge_ranges: tuple[EdgeCountRange, ...] = (
        EdgeCountRange(1000, 2000),
        EdgeCountRange(3000, 5000),
        EdgeCountRange(7000, 10000),
    )
    n_null_samples: int = 100
    n_test_samples: int = 100
    skew_nodes: int = SKEW_NODES
    skew_levels: tuple[float, ...] = SKEW_LEVELS
    transitivity_nodes: int = TRANSITIVITY_NODES
    transitivity_ratios: tuple[float, ...] = TRANSITIVITY_RATIOS
    degree_nodes: int = DEGREE_NODES
    powerlaw_exponents: tuple[float, ...] = POWERLAW_EXPONENTS
    bias_nodes: int = 20
    bias_edge_counts: tuple[int, ...] = (20, 100)
    bias_trials: int = MIN_BIAS_TRIALS
    density_nodes: int = 200
    density_e_min: tuple[int, ...] = (500, 2000, 5000)
    density_e_delta: tuple[int, ...] = (0, 1000, 5000)
    density_trials: int = 200

    def __post_init__(self):
        if self.n_null_samples < MIN_NULL_SAMPLES:
            raise ConfigError(
                f"n_null_samples must be at least {MIN_NULL_SAMPLES}, got {self.n_null_samples}"
            )
        if self.bias_trials < MIN_BIAS_TRIALS:
            raise ConfigError(f"bias_trials must be at least {MIN_BIAS_TRIALS}")
        if self.density_trials < 1 or self.n_test_samples < 1:
            raise ConfigError("trial counts must be positive")
        if not self.statistics or not self.edge_ranges:
            raise ConfigError("benchmark needs at least one statistic and one edge range")


def all_contrasts(family: Sequence[GeneratorSpec]):
    """Every ordered pair (a, b) with a != b, as positional (null, alt) families."""
    pairs = [(a, b) for a in family for b in family if a is not b]
    return tuple(a for a, _ in pairs), tuple(b for _, b in pairs)


def family_for(stat: StatisticId, cfg: BenchmarkConfig) -> list[GeneratorSpec]:
    """Model family whose parameters the statistic is meant to tell apart."""
    if stat in (StatisticId.DD, StatisticId.DS, StatisticId.DS_CORRECTED, StatisticId.DS_UNBIASED):
        return degree_family(cfg.degree_nodes, cfg.powerlaw_exponents)
    if stat in (StatisticId.CB, StatisticId.TP, StatisticId.TP_UNBIASED):
        return transitivity_family(cfg.transitivity_nodes, cfg.transitivity_ratios)
    return skew_family(cfg.skew_nodes, cfg.skew_levels)


def _draw_statistic(
    stat: StatisticId,
    d_first: EdgeDistribution,
    d_second: EdgeDistribution,
    edge_range: EdgeCountRange,
    rng: np.random.Generator,
) -> float:
    """One statistic value: a snapshot of d_second, or the pair (d_first -> d_second) for deltas."""
    s_t = sample_snapshot(d_second, edge_range.draw(rng), rng, t=1)
    if not stat.is_delta:
        return evaluate(stat, s_t)
    s_prev = sample_snapshot(d_first, edge_range.draw(rng), rng, t=0)
    return evaluate(stat, s_t, s_prev)


def run_recall_experiment(spec: RecallExperimentSpec, progress: bool = True) -> RecallResult:
    """Average rejection rate over every null/alternative contrast in the spec."""
    stat = spec.statistic
    members: list[GeneratorSpec] = []
    for member in spec.null_family + spec.alt_family:
        if not any(member is m for m in members):
            members.append(member)
    index = {id(m): k for k, m in enumerate(members)}
    dists = [distribution_of(m, trial_rng(spec.seed, FAMILY_DRAW_KEY)) for m in members]

    nulls = {}
    rates = []
    pairs = list(zip(spec.null_family, spec.alt_family))
    for k, (a, b) in enumerate(tqdm(pairs, desc=f"{stat.code} {spec.edge_range}", disable=not progress)):
        ia, ib = index[id(a)], index[id(b)]
        if ia not in nulls:
            values = [
                _draw_statistic(stat, dists[ia], dists[ia], spec.edge_range, trial_rng(spec.seed, ia, 0, n))
                for n in range(spec.n_null_samples)
            ]
            nulls[ia] = fit_null(values, spec.alpha, stat.code)
        null = nulls[ia]
        rejected = sum(
            null.rejects(
                _draw_statistic(stat, dists[ia], dists[ib], spec.edge_range, trial_rng(spec.seed, k, 1, n))
            )
            for n in range(spec.n_test_samples)
        )
        rates.append(rejected / spec.n_test_samples)

    r = np.asarray(rates)
    stderr = math.sqrt(float((r * (1.0 - r)).sum()) / spec.n_test_samples) / len(r)
    return RecallResult(
        stat,
        spec.edge_range.lo,
        spec.edge_range.hi,
        float(r.mean()),
        stderr,
        spec.n_test_samples * len(r),
        tuple(float(x) for x in r),
    )


def expected_under_null(stat: StatisticId, d: EdgeDistribution, e_t: int, e_prev: int) -> float | None:
    """
    Exact expectation of the estimator when both snapshots are multinomial
    draws of e_t and e_prev edges from d. None where no closed form is known.
    """
    pair_var = float((d.probs * (1.0 - d.probs)).sum())
    pd = d.probabilistic_degrees()
    node_var = float((pd * (1.0 - pd)).sum())
    match stat:
        case StatisticId.MS:
            return pair_var * (1.0 / e_t + 1.0 / e_prev)
        case StatisticId.MS_CORRECTED:
            return pair_var * (1.0 / e_t**2 + 1.0 / e_prev**2)
        case StatisticId.DS:
            return node_var * (1.0 / e_t + 1.0 / e_prev)
        case StatisticId.DS_CORRECTED:
            shrink = (e_t - 1) / e_t**2 + (e_prev - 1) / e_prev**2
            return node_var * (1.0 / e_t + 1.0 / e_prev) - 2.0 * pair_var * shrink
        case StatisticId.MS_UNBIASED | StatisticId.DS_UNBIASED:
            return 0.0
        case StatisticId.TP:
            return triangle_probability(d) * (e_t - 1) * (e_t - 2) / e_t**2
        case StatisticId.TP_UNBIASED:
            return triangle_probability(d)
    return None


def true_value(stat: StatisticId, d: EdgeDistribution) -> float:
    """Value of the statistic on the distribution itself (0 for deltas of P against P)."""
    if stat.is_delta:
        return 0.0
    if stat == StatisticId.CB:
        return barrat_clustering(d)
    if stat in (StatisticId.TP, StatisticId.TP_UNBIASED):
        return triangle_probability(d)
    raise ConfigError(f"{stat.code} has no distribution-level value")


def run_bias_suite(
    d: EdgeDistribution,
    edge_counts: Sequence[int],
    n_trials: int = MIN_BIAS_TRIALS,
    seed: int = 0,
    statistics: Sequence[StatisticId] = BIAS_STATISTICS,
    progress: bool = True,
) -> list[BiasRow]:
    """Both snapshots of a trial have the same edge count."""
    if n_trials < MIN_BIAS_TRIALS:
        raise ConfigError(f"n_trials must be at least {MIN_BIAS_TRIALS}, got {n_trials}")
    truths = {stat: true_value(stat, d) for stat in statistics}
    rows = []
    for e_idx, m in enumerate(edge_counts):
        values = {stat: np.empty(n_trials) for stat in statistics}
        for n in tqdm(range(n_trials), desc=f"bias |E|={m}", disable=not progress):
            rng = trial_rng(seed, e_idx, n)
            s_prev = sample_snapshot(d, m, rng, t=0)
            s_t = sample_snapshot(d, m, rng, t=1)
            for stat in statistics:
                values[stat][n] = evaluate(stat, s_t, s_prev if stat.is_delta else None)
        for stat in statistics:
            v = values[stat]
            sd = float(v.std(ddof=1))
            rows.append(
                BiasRow(
                    stat,
                    int(m),
                    float(v.mean()),
                    sd,
                    sd / math.sqrt(n_trials),
                    truths[stat],
                    expected_under_null(stat, d, m, m),
                )
            )
    return rows


def run_density_suite(
    d_same: EdgeDistribution,
    d_other: EdgeDistribution | None,
    e_min_values: Sequence[int],
    e_delta_values: Sequence[int],
    n_trials: int = 200,
    seed: int = 0,
    progress: bool = True,
) -> list[DensityRow]:
    """
    Median GED and DD between a snapshot of e_min edges from d_same and one of
    e_min + e_delta edges from d_same (same_p) or d_other.
    """
    if n_trials < 1:
        raise ConfigError(f"n_trials must be positive, got {n_trials}")
    targets = [(True, d_same)] + ([(False, d_other)] if d_other is not None else [])
    rows = []
    for same_p, d_next in targets:
        for i, e_min in enumerate(e_min_values):
            for j, e_delta in enumerate(e_delta_values):
                values = {stat: np.empty(n_trials) for stat in DENSITY_STATISTICS}
                desc = f"density {'same' if same_p else 'other'} {e_min}+{e_delta}"
                for n in tqdm(range(n_trials), desc=desc, disable=not progress):
                    rng = trial_rng(seed, int(same_p), i, j, n)
                    s_prev = sample_snapshot(d_same, e_min, rng, t=0)
                    s_t = sample_snapshot(d_next, e_min + e_delta, rng, t=1)
                    for stat in DENSITY_STATISTICS:
                        values[stat][n] = evaluate(stat, s_t, s_prev)
                rows.extend(
                    DensityRow(stat, int(e_min), int(e_delta), same_p, float(np.median(values[stat])))
                    for stat in DENSITY_STATISTICS
                )
    return rows


def density_distributions(n_nodes: int) -> tuple[EdgeDistribution, EdgeDistribution]:
    """Uniform P and a two-level Chung-Lu P (weights 1 and 2) on the same nodes."""
    uniform = distribution_of(BlockModelSpec(n_nodes, np.zeros(n_nodes, dtype=np.int64), [[1.0]]))
    weights = np.where(np.arange(n_nodes) < n_nodes // 2, 1.0, 2.0)
    return uniform, chung_lu_distribution(weights)


def run_benchmark(cfg: BenchmarkConfig, progress: bool = True, verbose: bool = True):
    """Returns (recall results, bias rows, density rows). verbose prints per-suite tables."""

    def banner(title: str, first: bool = False):
        if verbose:
            print(("" if first else "\n") + "=" * 60)
            print(title)
            print("=" * 60)

    banner("Recall experiments", first=True)
    recall = []
    for stat in cfg.statistics:
        null_family, alt_family = all_contrasts(family_for(stat, cfg))
        for edge_range in cfg.edge_ranges:
            spec = RecallExperimentSpec(
                stat,
                null_family,
                alt_family,
                edge_range,
                cfg.n_null_samples,
                cfg.n_test_samples,
                cfg.alpha,
                cfg.seed,
            )
            result = run_recall_experiment(spec, progress)
            if verbose:
                print(f"  {stat.code:<4} {str(edge_range):>12}: recall {result.recall:.3f} +/- {result.stderr:.3f}")
            recall.append(result)

    banner("Bias suite")
    d_bias = distribution_of(two_block_spec(cfg.bias_nodes, 2.0, 1.0))
    bias = run_bias_suite(d_bias, cfg.bias_edge_counts, cfg.bias_trials, cfg.seed, progress=progress)
    if verbose:
        for row in bias:
            print(f"  {row.statistic.code:<4} |E|={row.edges:<6} mean {row.mean:.6g} (true {row.true_value:.6g})")

    banner("Density suite")
    d_same, d_other = density_distributions(cfg.density_nodes)
    density = run_density_suite(
        d_same, d_other, cfg.density_e_min, cfg.density_e_delta, cfg.density_trials, cfg.seed, progress
    )
    if verbose:
        print(f"  {len(density)} rows")
    return recall, bias, density
