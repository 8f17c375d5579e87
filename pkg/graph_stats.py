"""
Network statistics for anomaly detection on dynamic multigraphs.

Density-dependent statistics (their value moves with |E_t| even when the edge
distribution is unchanged):
    GED  graph edit distance between consecutive snapshots
    DD   squared difference of degree histograms
    EC   edge count |E_t|
Density-consistent statistics (functions of the edge distribution P_t):
    CB   Barrat weighted clustering coefficient
    MS   mass shift, sum of squared changes in pair probabilities
    DS   probabilistic degree shift
    TP   triangle probability
MS and DS come with two bias corrections: *_CORRECTED subtracts the plug-in
variance estimate p(1-p)/|E|, *_UNBIASED uses the exact finite-sample
estimate p(1-p)/(|E|-1). TP_UNBIASED normalises triangle counts by
|E|(|E|-1)(|E|-2) instead of |E|^3.

Every consistent statistic has a *_terms helper returning its per-pair or
per-node summands; the statistic is the sum of those terms, which is what
attribution decomposes.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass
from enum import StrEnum
from typing import Literal

import numpy as np

from errors import (
    ConfigError,
    EmptySnapshotError,
    IncompatibleSnapshotError,
    TimeIndexError,
    TooFewEdgesError,
)
from graph_core import DynamicNetwork, EdgeDistribution, Snapshot, empirical_distribution

logger = logging.getLogger(__name__)

EmptyPolicy = Literal["error", "skip"]


class StatisticId(StrEnum):
    GED = "GED"
    DD = "DD"
    CB = "CB"
    EC = "EC"
    MS = "MS"
    MS_CORRECTED = "MS_CORRECTED"
    MS_UNBIASED = "MS_UNBIASED"
    DS = "DS"
    DS_CORRECTED = "DS_CORRECTED"
    DS_UNBIASED = "DS_UNBIASED"
    TP = "TP"
    TP_UNBIASED = "TP_UNBIASED"

    @property
    def is_delta(self) -> bool:
        """Compares t with t-1 rather than reading one snapshot."""
        return self not in _SINGLE_SNAPSHOT

    @property
    def family(self) -> str:
        """'dependent', 'consistent' or 'unbiased' (consistent with zero bias at every |E|)."""
        return _FAMILY[self]

    @property
    def code(self) -> str:
        """Short name used on the command line (MSC, DSU, ...)."""
        return _CODES.get(self, self.value)

    @classmethod
    def parse(cls, text: str) -> "StatisticId":
        key = text.strip().upper()
        for stat in cls:
            if key in (stat.value, stat.code):
                return stat
        known = ", ".join(s.code for s in cls)
        raise ConfigError(f"unknown statistic {text!r} (known: {known})")


_SINGLE_SNAPSHOT = {StatisticId.CB, StatisticId.EC, StatisticId.TP, StatisticId.TP_UNBIASED}
_CODES = {
    StatisticId.MS_CORRECTED: "MSC",
    StatisticId.MS_UNBIASED: "MSU",
    StatisticId.DS_CORRECTED: "DSC",
    StatisticId.DS_UNBIASED: "DSU",
    StatisticId.TP_UNBIASED: "TPU",
}
_FAMILY = {
    StatisticId.GED: "dependent",
    StatisticId.DD: "dependent",
    StatisticId.EC: "dependent",
    StatisticId.CB: "consistent",
    StatisticId.MS: "consistent",
    StatisticId.MS_CORRECTED: "consistent",
    StatisticId.DS: "consistent",
    StatisticId.DS_CORRECTED: "consistent",
    StatisticId.TP: "consistent",
    StatisticId.MS_UNBIASED: "unbiased",
    StatisticId.DS_UNBIASED: "unbiased",
    StatisticId.TP_UNBIASED: "unbiased",
}


@dataclass(frozen=True)
class StatisticSeries:
    """Values of one statistic per time step; None marks a skipped step."""

    statistic: StatisticId
    times: tuple[int, ...]
    values: tuple[float | None, ...]

    @property
    def skipped(self) -> tuple[int, ...]:
        return tuple(t for t, v in zip(self.times, self.values) if v is None)

    def valid(self) -> tuple[np.ndarray, np.ndarray]:
        """(times, values) of the non-skipped steps."""
        pairs = [(t, v) for t, v in zip(self.times, self.values) if v is not None]
        ts = np.array([t for t, _ in pairs], dtype=np.int64)
        vs = np.array([v for _, v in pairs], dtype=np.float64)
        return ts, vs


# --- helpers ---------------------------------------------------------------


def _check_compatible(a, b):
    if a.n_nodes != b.n_nodes:
        raise IncompatibleSnapshotError(
            f"node universes differ ({a.n_nodes} vs {b.n_nodes} nodes)"
        )


def _aligned(a_keys, a_vals, b_keys, b_vals):
    """Values of two sparse pair maps over the union of their supports."""
    keys = np.union1d(a_keys, b_keys)
    va = np.zeros(len(keys), dtype=np.result_type(a_vals, b_vals))
    vb = np.zeros(len(keys), dtype=va.dtype)
    va[np.searchsorted(keys, a_keys)] = a_vals
    vb[np.searchsorted(keys, b_keys)] = b_vals
    return keys, va, vb


def _with_edges(s: Snapshot, minimum: int) -> int:
    m = s.edge_count()
    if m == 0:
        raise EmptySnapshotError(f"snapshot t={s.t} has no edges")
    if m < minimum:
        raise TooFewEdgesError(f"snapshot t={s.t} has {m} edges, estimator needs {minimum}")
    return m


def _wedge_weights(adjacency, rows, cols) -> np.ndarray:
    """For each pair (i, j): sum over k of w_ik * w_jk (weighted common neighbours)."""
    if len(rows) == 0:
        return np.zeros(0)
    paths = adjacency @ adjacency
    return np.asarray(paths[rows, cols], dtype=np.float64).ravel()


# --- density-dependent statistics -----------------------------------------


def ged(s_t: Snapshot, s_prev: Snapshot) -> int:
    """
    Graph edit distance with a fixed node universe: node terms vanish and the
    edge term |E_t| + |E_t-1| - 2|E_t n E_t-1| with multiset intersection
    reduces to the sum of per-pair multiplicity differences.
    """
    _check_compatible(s_t, s_prev)
    _, a, b = _aligned(s_t.keys, s_t.counts, s_prev.keys, s_prev.counts)
    return int(np.abs(a - b).sum())


def degree_dist_diff(s_t: Snapshot, s_prev: Snapshot) -> int:
    """Sum over degrees k >= 1 of the squared change in the number of nodes with degree k."""
    _check_compatible(s_t, s_prev)
    h_t = np.bincount(s_t.degrees())
    h_prev = np.bincount(s_prev.degrees())
    size = max(len(h_t), len(h_prev))
    h_t = np.pad(h_t, (0, size - len(h_t)))
    h_prev = np.pad(h_prev, (0, size - len(h_prev)))
    diff = (h_t - h_prev)[1:]
    return int((diff * diff).sum())


def edge_count(s: Snapshot) -> int:
    """Number of edges, counted with multiplicity."""
    return s.edge_count()


def barrat_clustering(g: Snapshot | EdgeDistribution) -> float:
    """
    Network-average Barrat coefficient (1/N) sum_i c_i with

        c_i = 1 / ((k_i - 1) s_i) * sum_{j != k} (w_ij + w_ik) / 2 * a_ij a_ik a_jk

    over ordered neighbour pairs. Nodes with k_i < 2 contribute 0. Given an
    EdgeDistribution the weights are the probabilities, which yields CB(P)
    since c_i does not change when all weights are scaled.
    """
    w = g.adjacency()
    if w.nnz == 0:
        return 0.0
    a = w.copy()
    a.data[:] = 1.0
    k = np.asarray(a.sum(axis=1)).ravel()
    strength = np.asarray(w.sum(axis=1)).ravel()
    # sum over ordered (j, k) of (w_ij + w_ik)/2 a_ik a_jk equals sum_j w_ij (A^2)_ij
    closed = np.asarray(w.multiply(a @ a).sum(axis=1)).ravel()
    coeff = np.zeros(g.n_nodes)
    ok = k >= 2
    coeff[ok] = closed[ok] / ((k[ok] - 1) * strength[ok])
    return float(coeff.sum() / g.n_nodes)


# --- density-consistent statistics ----------------------------------------


def mass_shift_terms(d_t: EdgeDistribution, d_prev: EdgeDistribution):
    """(pair keys, squared probability change per pair) over the union of supports."""
    _check_compatible(d_t, d_prev)
    keys, a, b = _aligned(d_t.keys, d_t.probs, d_prev.keys, d_prev.probs)
    return keys, (a - b) ** 2


def mass_shift(d_t: EdgeDistribution, d_prev: EdgeDistribution) -> float:
    """Sum of squared changes in pair probabilities."""
    return float(mass_shift_terms(d_t, d_prev)[1].sum())


def degree_shift_terms(d_t: EdgeDistribution, d_prev: EdgeDistribution) -> np.ndarray:
    """Squared change in probabilistic degree, one entry per node."""
    _check_compatible(d_t, d_prev)
    return (d_t.probabilistic_degrees() - d_prev.probabilistic_degrees()) ** 2


def degree_shift(d_t: EdgeDistribution, d_prev: EdgeDistribution) -> float:
    """Sum of squared changes in probabilistic degrees."""
    return float(degree_shift_terms(d_t, d_prev).sum())


def triangle_terms(d: EdgeDistribution) -> np.ndarray:
    """
    Per-pair share of the triangle probability: every triple's product
    p_ij p_ik p_jk is split in equal thirds onto its three pairs.
    """
    wedges = _wedge_weights(d.adjacency(), d.rows, d.cols)
    return d.probs * wedges / 3.0


def triangle_probability(d: EdgeDistribution) -> float:
    """Sum over unordered node triples of p_ij * p_ik * p_jk."""
    return float(triangle_terms(d).sum())


def triangle_probability_unbiased(s: Snapshot) -> float:
    """Triangle weight sum e_ij e_ik e_jk normalised by |E|(|E|-1)(|E|-2)."""
    m = _with_edges(s, 3)
    wedges = _wedge_weights(s.adjacency(), s.rows, s.cols)
    triangles = float((s.counts * wedges).sum() / 3.0)
    return triangles / (m * (m - 1) * (m - 2))


def _pair_variance(p: np.ndarray, m: int, finite_sample: bool) -> float:
    return float((p * (1.0 - p)).sum() / (m - 1 if finite_sample else m))


def mass_shift_corrected(s_t: Snapshot, s_prev: Snapshot, *, finite_sample: bool = False) -> float:
    """
    Empirical mass shift minus its sampling bias, estimated per pair as
    p(1-p)/|E| (plug-in) or p(1-p)/(|E|-1) (finite_sample, exactly unbiased).
    """
    _check_compatible(s_t, s_prev)
    minimum = 2 if finite_sample else 1
    m_t, m_prev = _with_edges(s_t, minimum), _with_edges(s_prev, minimum)
    d_t, d_prev = empirical_distribution(s_t), empirical_distribution(s_prev)
    bias = _pair_variance(d_t.probs, m_t, finite_sample) + _pair_variance(
        d_prev.probs, m_prev, finite_sample
    )
    return mass_shift(d_t, d_prev) - bias


def degree_shift_corrected(
    s_t: Snapshot, s_prev: Snapshot, *, finite_sample: bool = False
) -> float:
    """
    Empirical degree shift minus its sampling bias.

    Plug-in form: the per-pair terms p(1-p)/|E| summed at both endpoints of
    every pair, with |E_t-1| normalising the t-1 term. finite_sample form:
    the per-node binomial variance PD(1-PD)/(|E|-1), which is exact because
    the number of edges touching a node is Binomial(|E|, PD).
    """
    _check_compatible(s_t, s_prev)
    minimum = 2 if finite_sample else 1
    m_t, m_prev = _with_edges(s_t, minimum), _with_edges(s_prev, minimum)
    d_t, d_prev = empirical_distribution(s_t), empirical_distribution(s_prev)
    if finite_sample:
        bias = _pair_variance(d_t.probabilistic_degrees(), m_t, True) + _pair_variance(
            d_prev.probabilistic_degrees(), m_prev, True
        )
    else:
        bias = 2.0 * (
            _pair_variance(d_t.probs, m_t, False) + _pair_variance(d_prev.probs, m_prev, False)
        )
    return degree_shift(d_t, d_prev) - bias


# --- dispatch --------------------------------------------------------------


def _empirical_delta(fn):
    return lambda s_t, s_prev: fn(empirical_distribution(s_t), empirical_distribution(s_prev))


_DELTA: dict[StatisticId, Callable[[Snapshot, Snapshot], float]] = {
    StatisticId.GED: ged,
    StatisticId.DD: degree_dist_diff,
    StatisticId.MS: _empirical_delta(mass_shift),
    StatisticId.MS_CORRECTED: mass_shift_corrected,
    StatisticId.MS_UNBIASED: lambda a, b: mass_shift_corrected(a, b, finite_sample=True),
    StatisticId.DS: _empirical_delta(degree_shift),
    StatisticId.DS_CORRECTED: degree_shift_corrected,
    StatisticId.DS_UNBIASED: lambda a, b: degree_shift_corrected(a, b, finite_sample=True),
}
_SINGLE: dict[StatisticId, Callable[[Snapshot], float]] = {
    StatisticId.CB: barrat_clustering,
    StatisticId.EC: edge_count,
    StatisticId.TP: lambda s: triangle_probability(empirical_distribution(s)),
    StatisticId.TP_UNBIASED: triangle_probability_unbiased,
}


def evaluate(stat: StatisticId, s_t: Snapshot, s_prev: Snapshot | None = None) -> float:
    """Value of stat at s_t; delta statistics compare against s_prev."""
    if stat.is_delta:
        if s_prev is None:
            raise TimeIndexError(f"{stat.code} is a delta statistic and needs a previous snapshot")
        return _DELTA[stat](s_t, s_prev)
    return _SINGLE[stat](s_t)


def compute(stat: StatisticId, net: DynamicNetwork, t: int) -> float:
    """Value of stat at time t; delta statistics pair snapshot t with t-1."""
    s_t = net.at(t)
    if not stat.is_delta:
        return evaluate(stat, s_t)
    if not net.has(t - 1):
        raise TimeIndexError(f"{stat.code} at t={t} needs a snapshot at t={t - 1}")
    return evaluate(stat, s_t, net.at(t - 1))


def compute_series(
    stat: StatisticId, net: DynamicNetwork, empty_policy: EmptyPolicy = "error"
) -> StatisticSeries:
    """Evaluate stat at every time step the network allows."""
    if empty_policy not in ("error", "skip"):
        raise ConfigError(f"empty snapshot policy must be 'error' or 'skip', got {empty_policy!r}")
    times = tuple(t for t in net.times if not stat.is_delta or net.has(t - 1))
    values: list[float | None] = []
    for t in times:
        try:
            values.append(compute(stat, net, t))
        except EmptySnapshotError as exc:
            if empty_policy == "error":
                raise
            logger.warning("%s: skipping t=%d (%s)", stat.code, t, exc)
            values.append(None)
    return StatisticSeries(stat, times, tuple(values))
