"""
Localising an anomaly: split a density-consistent statistic into per-pair or
per-node contributions and pick the smallest greedy set of elements that
carries a target share of the total score.
"""

import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from errors import ConfigError, NothingToAttributeError, TimeIndexError, UnsupportedStatisticError
from graph_core import DynamicNetwork, NodeId, Pair, Snapshot, empirical_distribution
from graph_stats import StatisticId, degree_shift_terms, mass_shift_terms, triangle_terms

logger = logging.getLogger(__name__)

DEFAULT_TARGET = 0.5
DEFAULT_MAX_ELEMENTS = 50
COVERAGE_TOLERANCE = 1e-12

# Corrections are global calibration terms, so every variant decomposes its raw form
_BASE = {
    StatisticId.MS: StatisticId.MS,
    StatisticId.MS_CORRECTED: StatisticId.MS,
    StatisticId.MS_UNBIASED: StatisticId.MS,
    StatisticId.DS: StatisticId.DS,
    StatisticId.DS_CORRECTED: StatisticId.DS,
    StatisticId.DS_UNBIASED: StatisticId.DS,
    StatisticId.TP: StatisticId.TP,
    StatisticId.TP_UNBIASED: StatisticId.TP,
}


@dataclass(frozen=True, eq=False)
class ContributionMap:
    statistic: StatisticId
    t: int
    kind: Literal["per_pair", "per_node"]
    elements: tuple[Pair | NodeId, ...]
    scores: np.ndarray
    total: float

    def as_dict(self) -> dict:
        return {e: float(s) for e, s in zip(self.elements, self.scores)}


@dataclass(frozen=True)
class AnomalySubgraph:
    statistic: StatisticId
    t: int
    nodes: tuple[NodeId, ...]
    edges_before: dict[Pair, int]
    edges_after: dict[Pair, int]
    covered_fraction: float
    target_fraction: float
    contributing_elements: tuple[tuple[Pair | NodeId, float], ...]

    @property
    def target_reached(self) -> bool:
        """False only when max_elements stopped the selection first."""
        return self.covered_fraction + COVERAGE_TOLERANCE >= self.target_fraction


def base_statistic(stat: StatisticId) -> StatisticId:
    """MS, DS or TP behind stat (MSC and MSU map to MS); density-dependent statistics raise."""
    try:
        return _BASE[stat]
    except KeyError:
        raise UnsupportedStatisticError(
            f"{stat.code} is density dependent and cannot be decomposed into edge or node "
            "contributions; attribute its flags with MS, DS or TP instead"
        ) from None


def decompose(stat: StatisticId, net: DynamicNetwork, t: int) -> ContributionMap:
    """Per-element contributions whose sum is the uncorrected statistic at t."""
    base = base_statistic(stat)
    s_t = net.at(t)
    n = net.n_nodes

    if base == StatisticId.TP:
        d_t = empirical_distribution(s_t)
        return _contribution_map(
            base, t, "per_pair", _pairs(d_t.rows, d_t.cols), triangle_terms(d_t)
        )

    if not net.has(t - 1):
        raise TimeIndexError(f"{stat.code} at t={t} needs a snapshot at t={t - 1}")
    d_t = empirical_distribution(s_t)
    d_prev = empirical_distribution(net.at(t - 1))
    if base == StatisticId.MS:
        keys, terms = mass_shift_terms(d_t, d_prev)
        return _contribution_map(base, t, "per_pair", _pairs(keys // n, keys % n), terms)
    terms = degree_shift_terms(d_t, d_prev)
    return _contribution_map(base, t, "per_node", tuple(range(n)), terms)


def _pairs(rows, cols) -> tuple[Pair, ...]:
    return tuple(zip(rows.tolist(), cols.tolist()))


def _contribution_map(stat, t, kind, elements, terms) -> ContributionMap:
    scores = np.asarray(terms, dtype=np.float64)
    scores.setflags(write=False)
    return ContributionMap(stat, t, kind, elements, scores, float(scores.sum()))


def _restrict(s: Snapshot, nodes: set[NodeId]) -> dict[Pair, int]:
    return {pair: c for pair, c in s.as_dict().items() if pair[0] in nodes and pair[1] in nodes}


def extract_subgraph(
    cm: ContributionMap,
    net: DynamicNetwork,
    t: int,
    target_fraction: float = DEFAULT_TARGET,
    max_elements: int = DEFAULT_MAX_ELEMENTS,
) -> AnomalySubgraph:
    """
    Greedy selection by descending score, ties broken by the smaller element,
    until the selection covers target_fraction of the total or max_elements
    elements are taken.
    """
    if not (0.0 < target_fraction <= 1.0):
        raise ConfigError(f"target must lie in (0, 1], got {target_fraction}")
    if max_elements < 1:
        raise ConfigError(f"max_elements must be positive, got {max_elements}")
    scores = cm.scores.tolist()
    total = math.fsum(scores)
    if total <= 0.0:
        raise NothingToAttributeError(f"{cm.statistic.code} at t={cm.t} has a zero total score")

    order = sorted(range(len(scores)), key=lambda k: (-scores[k], cm.elements[k]))
    goal = target_fraction * total
    chosen: list[int] = []
    covered = 0.0
    for k in order:
        if len(chosen) >= max_elements or covered + COVERAGE_TOLERANCE * total >= goal:
            break
        chosen.append(k)
        covered += scores[k]

    selected = [(cm.elements[k], scores[k]) for k in chosen]
    covered_fraction = min(1.0, math.fsum(s for _, s in selected) / total)
    nodes: set[NodeId] = set()
    for element, _ in selected:
        nodes.update(element if cm.kind == "per_pair" else (element,))

    before = _restrict(net.at(t - 1), nodes) if net.has(t - 1) else {}
    after = _restrict(net.at(t), nodes)
    if covered_fraction + COVERAGE_TOLERANCE < target_fraction:
        logger.warning(
            "%s at t=%d: max_elements=%d reached at %.3f coverage (target %.3f)",
            cm.statistic.code, t, max_elements, covered_fraction, target_fraction,
        )
    return AnomalySubgraph(
        cm.statistic,
        t,
        tuple(sorted(nodes)),
        before,
        after,
        covered_fraction,
        target_fraction,
        tuple(selected),
    )
