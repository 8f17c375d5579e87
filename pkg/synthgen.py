"""
Synthetic multigraph generators.

Edge distributions come from stochastic blockmodels or Chung-Lu power-law
weights; snapshots are drawn by placing a fixed number of edges with
independent categorical draws over the supported pairs, so multi-edges
accumulate. Every random draw goes through a numpy Generator built by
trial_rng, so a (seed, key) pair always reproduces the same graphs.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from errors import ConfigError, InvalidSpecError
from graph_core import DynamicNetwork, EdgeDistribution, Snapshot

logger = logging.getLogger(__name__)

# Designed model families (see APPROACHES.md)
SKEW_LEVELS = (0.0, 0.05, 0.10, 0.20)
TRANSITIVITY_RATIOS = (1.0, 2.0, 4.0, 8.0)
POWERLAW_EXPONENTS = (2.0, 2.3, 2.6, 3.0)
SKEW_NODES = 20
TRANSITIVITY_NODES = 100
DEGREE_NODES = 100


@dataclass(frozen=True, eq=False)
class BlockModelSpec:
    """Pair weight of (i, j) is block_probs[block_of[i], block_of[j]]."""

    n_nodes: int
    block_of: np.ndarray
    block_probs: np.ndarray
    label: str = "sbm"

    def __post_init__(self):
        block_of = np.asarray(self.block_of, dtype=np.int64).reshape(-1)
        block_probs = np.atleast_2d(np.asarray(self.block_probs, dtype=np.float64))
        object.__setattr__(self, "block_of", block_of)
        object.__setattr__(self, "block_probs", block_probs)
        if self.n_nodes < 2:
            raise InvalidSpecError(f"{self.label}: need at least 2 nodes")
        if len(block_of) != self.n_nodes:
            raise InvalidSpecError(f"{self.label}: block_of must assign every node")
        k = block_probs.shape[0]
        if block_probs.shape != (k, k) or not np.allclose(block_probs, block_probs.T):
            raise InvalidSpecError(f"{self.label}: block_probs must be a symmetric square matrix")
        if block_probs.min() < 0:
            raise InvalidSpecError(f"{self.label}: block weights must be non-negative")
        if block_of.min() < 0 or block_of.max() >= k:
            raise InvalidSpecError(f"{self.label}: block index outside [0, {k})")


@dataclass(frozen=True)
class PowerLawSpec:
    n_nodes: int
    exponent: float
    min_degree_weight: float = 1.0
    max_degree_weight: float | None = None
    label: str = "powerlaw"

    def __post_init__(self):
        if self.n_nodes < 2:
            raise InvalidSpecError(f"{self.label}: need at least 2 nodes")
        if self.exponent <= 1.0:
            raise InvalidSpecError(f"{self.label}: exponent must exceed 1, got {self.exponent}")
        if self.min_degree_weight <= 0:
            raise InvalidSpecError(f"{self.label}: min_degree_weight must be positive")
        if self.max_degree_weight is not None and self.max_degree_weight <= self.min_degree_weight:
            raise InvalidSpecError(f"{self.label}: max_degree_weight must exceed min_degree_weight")

    def draw_weights(self, rng: np.random.Generator) -> np.ndarray:
        """Inverse-CDF draw from the (optionally truncated) continuous power law."""
        a = self.exponent - 1.0
        u = rng.random(self.n_nodes)
        if self.max_degree_weight is None:
            return self.min_degree_weight * (1.0 - u) ** (-1.0 / a)
        tail = (self.min_degree_weight / self.max_degree_weight) ** a
        return self.min_degree_weight * (1.0 - u * (1.0 - tail)) ** (-1.0 / a)


GeneratorSpec = BlockModelSpec | PowerLawSpec


@dataclass(frozen=True)
class EdgeCountRange:
    lo: int
    hi: int

    def __post_init__(self):
        if not (1 <= self.lo <= self.hi):
            raise ConfigError(f"edge range needs 1 <= lo <= hi, got {self.lo}-{self.hi}")

    def draw(self, rng: np.random.Generator) -> int:
        """Sample an edge count uniformly from lo..hi."""
        return int(rng.integers(self.lo, self.hi + 1))

    @classmethod
    def parse(cls, text: str) -> "EdgeCountRange":
        """'7000-10000' -> EdgeCountRange(7000, 10000)."""
        try:
            lo, hi = (int(part) for part in text.strip().split("-"))
        except ValueError:
            raise ConfigError(f"edge range must look like LO-HI, got {text!r}") from None
        return cls(lo, hi)

    def __str__(self):
        return f"{self.lo}-{self.hi}"


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one task, addressed by (seed, key...)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def chung_lu_distribution(weights: Sequence[float]) -> EdgeDistribution:
    """p_ij proportional to w_i * w_j over all pairs i < j."""
    w = np.asarray(weights, dtype=np.float64)
    if len(w) < 2 or w.min() <= 0 or not np.all(np.isfinite(w)):
        raise InvalidSpecError("Chung-Lu weights must be finite, positive, and at least 2")
    i, j = np.triu_indices(len(w), k=1)
    return EdgeDistribution.from_weights(len(w), i, j, w[i] * w[j])


def distribution_of(spec: GeneratorSpec, rng: np.random.Generator | None = None) -> EdgeDistribution:
    """Edge distribution of a model spec. rng is only used by power-law specs."""
    if isinstance(spec, PowerLawSpec):
        if rng is None:
            raise InvalidSpecError(f"{spec.label}: power-law weights need a random generator")
        return chung_lu_distribution(spec.draw_weights(rng))
    i, j = np.triu_indices(spec.n_nodes, k=1)
    w = spec.block_probs[spec.block_of[i], spec.block_of[j]]
    if not np.any(w > 0):
        raise InvalidSpecError(f"{spec.label}: every pair has zero weight")
    return EdgeDistribution.from_weights(spec.n_nodes, i, j, w)


def sample_snapshot(d: EdgeDistribution, m: int, rng: np.random.Generator, t: int = 0) -> Snapshot:
    """Place exactly m edges by m independent draws from d (cumulative-weight inversion)."""
    if m < 1:
        raise ConfigError(f"edge count must be positive, got {m}")
    cdf = np.cumsum(d.probs)
    picks = np.searchsorted(cdf, rng.random(m) * cdf[-1], side="right")
    picks = np.minimum(picks, d.n_pairs - 1)
    counts = np.bincount(picks, minlength=d.n_pairs)
    hit = counts > 0
    return Snapshot(t, d.n_nodes, d.rows[hit], d.cols[hit], counts[hit])


def sample_stream(
    d: EdgeDistribution, edge_range: EdgeCountRange, n_steps: int, rng: np.random.Generator
) -> DynamicNetwork:
    """Null stream: n_steps snapshots from one fixed d, |E_t| uniform on edge_range."""
    if n_steps < 1:
        raise ConfigError(f"n_steps must be positive, got {n_steps}")
    snapshots = [sample_snapshot(d, edge_range.draw(rng), rng, t) for t in range(n_steps)]
    return DynamicNetwork(tuple(snapshots), d.n_nodes)


# --- designed families ------------------------------------------------------


def two_block_spec(n_nodes: int, within: float, cross: float, label: str = "sbm") -> BlockModelSpec:
    """Two equal communities (first half / second half of the nodes)."""
    block_of = (np.arange(n_nodes) >= n_nodes // 2).astype(np.int64)
    return BlockModelSpec(n_nodes, block_of, [[within, cross], [cross, within]], label)


def skewed_spec(n_nodes: int, shift: float, within: float = 2.0, cross: float = 1.0) -> BlockModelSpec:
    """
    Two-community SBM with `shift` of the total mass moved from the pairs
    inside block 0 to the pairs inside block 1.
    """
    base = two_block_spec(n_nodes, within, cross)
    sizes = np.bincount(base.block_of, minlength=2)
    within_pairs = sizes * (sizes - 1) / 2
    mass = base.block_probs.diagonal() * within_pairs
    share = mass / (mass.sum() + cross * sizes[0] * sizes[1])
    if shift < 0 or shift >= share[0]:
        raise InvalidSpecError(
            f"skew {shift} must lie in [0, {share[0]:.3f}) for {n_nodes} nodes"
        )
    b00 = within * (1.0 - shift / share[0])
    b11 = within * (1.0 + shift / share[1])
    return BlockModelSpec(
        n_nodes, base.block_of, [[b00, cross], [cross, b11]], f"skew-{shift:g}"
    )


def skew_family(n_nodes: int = SKEW_NODES, levels: Sequence[float] = SKEW_LEVELS):
    """Skewed block models, one per mass shift level."""
    return [skewed_spec(n_nodes, level) for level in levels]


def transitivity_family(n_nodes: int = TRANSITIVITY_NODES, ratios: Sequence[float] = TRANSITIVITY_RATIOS):
    return [two_block_spec(n_nodes, r, 1.0, f"ratio-{r:g}") for r in ratios]


def degree_family(n_nodes: int = DEGREE_NODES, exponents: Sequence[float] = POWERLAW_EXPONENTS):
    """Chung-Lu power-law models, one per exponent."""
    # cap keeps a single hub from taking most of the mass at small exponents
    return [
        PowerLawSpec(n_nodes, g, 1.0, float(n_nodes), label=f"gamma-{g:g}") for g in exponents
    ]
