"""Graph sampling and isolated-node counting.

Three random graph families live on n nodes with i.i.d. uniform positions
X_1..X_n on [0,1]:

  * the geometric graph: edge iff d(X_i, X_j) <= r, where d is either the
    plain interval distance |x-y| or the circular arc distance
    min(|x-y|, 1-|x-y|);
  * the Bernoulli (Erdos-Renyi) graph: edge iff an independent coin
    B_ij ~ Bernoulli(p) comes up 1;
  * their intersection: edge iff both conditions hold.

A node is isolated when it has no incident edge; ``count_isolated`` and its
ER/geometric-only variants report that count for one realization.

Randomness discipline: every sample is drawn from a PCG64 generator seeded
through ``SeedSequence((seed & MASK64, *key))``.  Passing a distinct key per
trial gives independent, reproducible streams that are safe to consume from
worker threads.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF


def trial_stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for (seed, *key); identical arguments replay it."""
    entropy = (int(seed) & MASK64,) + tuple(int(k) & MASK64 for k in key)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


class Metric(enum.Enum):
    """Which 1D geometry is in force for distances on [0,1]."""

    INTERVAL = "interval"
    CIRCLE = "circle"


@dataclass(frozen=True)
class ModelParams:
    """The pair (r, p): transmission range and link-activation probability."""

    r: float
    p: float

    def __post_init__(self) -> None:
        if not (self.r >= 0.0):
            raise ValueError(f"transmission range must be >= 0, got {self.r}")
        if not (0.0 <= self.p <= 1.0):
            raise ValueError(f"link probability must lie in [0, 1], got {self.p}")


def pair_index(n: int, i: int, j: int) -> int:
    """Flat index of the unordered pair {i, j} in the row-major upper triangle."""
    if i == j:
        raise ValueError("no self-pair")
    if not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"node index out of range for n={n}: ({i}, {j})")
    a, b = (i, j) if i < j else (j, i)
    return a * (2 * n - a - 1) // 2 + (b - a - 1)


@dataclass(frozen=True)
class GraphSample:
    """One realization: n positions plus the n(n-1)/2 upper-triangular bits.

    ``bits[pair_index(n, i, j)]`` is the Bernoulli coin for the unordered
    pair {i, j}; storage is canonicalized to i < j.  When sampled with
    ``keep_uniforms=True`` the underlying uniforms U_ij are retained so that
    coupled p-sweeps (bits = U < p for varying p) stay on one realization.
    """

    n: int
    positions: np.ndarray
    bits: np.ndarray
    uniforms: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("need at least one node")
        m = self.n * (self.n - 1) // 2
        if self.positions.shape != (self.n,):
            raise ValueError(f"positions must have shape ({self.n},)")
        if self.positions.size and (self.positions.min() < 0.0 or self.positions.max() > 1.0):
            raise ValueError("positions must lie in [0, 1]")
        if self.bits.shape != (m,) or self.bits.dtype != np.bool_:
            raise ValueError(f"bits must be a boolean array of shape ({m},)")
        if self.uniforms is not None and self.uniforms.shape != (m,):
            raise ValueError(f"uniforms must have shape ({m},)")
        for arr in (self.positions, self.bits, self.uniforms):
            if arr is not None:
                arr.setflags(write=False)


@dataclass(frozen=True)
class IsolationCount:
    """Number of isolated nodes in one realization."""

    count: int
    n: int

    def __post_init__(self) -> None:
        if not (0 <= self.count <= self.n):
            raise ValueError(f"count {self.count} outside [0, {self.n}]")

    @property
    def has_no_isolated(self) -> bool:
        return self.count == 0


def draw_positions_uniforms(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Canonical draw order: n positions first, then n(n-1)/2 pair uniforms."""
    positions = rng.random(n)
    uniforms = rng.random(n * (n - 1) // 2)
    return positions, uniforms


def sample(n: int, p: float, seed: int, key: tuple[int, ...] = (),
           keep_uniforms: bool = False) -> GraphSample:
    """Draw positions i.i.d. uniform on [0,1] and bits i.i.d. Bernoulli(p).

    Deterministic given (seed, key); bits are realized as U_ij < p so a
    retained-uniform sample is monotone-coupled across p.
    """
    if n < 1:
        raise ValueError("need at least one node")
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"link probability must lie in [0, 1], got {p}")
    rng = trial_stream(seed, *key)
    positions, uniforms = draw_positions_uniforms(rng, n)
    bits = uniforms < p
    return GraphSample(n, positions, bits, uniforms if keep_uniforms else None)


def resample_bits(s: GraphSample, p: float) -> GraphSample:
    """Re-threshold the retained uniforms at a new p (coupled realization)."""
    if s.uniforms is None:
        raise ValueError("sample was drawn without keep_uniforms=True")
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"link probability must lie in [0, 1], got {p}")
    return GraphSample(s.n, s.positions, s.uniforms < p, s.uniforms)


def distance(metric: Metric, x, y):
    """d(x, y) on [0,1]: |x-y| on the interval, arc length on the circle."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0) or np.any(y < 0.0) or np.any(y > 1.0):
        raise ValueError("points must lie in [0, 1]")
    d = np.abs(x - y)
    if metric is Metric.CIRCLE:
        d = np.minimum(d, 1.0 - d)
    return float(d) if d.ndim == 0 else d


def adjacent(metric: Metric, s: GraphSample, params: ModelParams, i: int, j: int) -> bool:
    """Edge test in the intersection graph: within range and bit active.

    Boundary tie d = r counts as adjacent.  Symmetric in (i, j).
    """
    idx = pair_index(s.n, i, j)
    if not s.bits[idx]:
        return False
    return distance(metric, s.positions[i], s.positions[j]) <= params.r


def bit_matrix(s: GraphSample) -> np.ndarray:
    """Symmetric (n, n) boolean matrix of the pair bits, False diagonal."""
    n = s.n
    m = np.zeros((n, n), dtype=bool)
    iu, ju = np.triu_indices(n, 1)
    m[iu, ju] = s.bits
    return m | m.T


def _in_range_matrix(metric: Metric, s: GraphSample, r: float) -> np.ndarray:
    d = np.abs(s.positions[:, None] - s.positions[None, :])
    if metric is Metric.CIRCLE:
        d = np.minimum(d, 1.0 - d)
    m = d <= r
    np.fill_diagonal(m, False)
    return m


def _require_pair_query(n: int) -> None:
    if n < 2:
        raise ValueError("isolation queries need n >= 2")


def count_isolated(metric: Metric, s: GraphSample, params: ModelParams) -> IsolationCount:
    """Isolated-node count of the intersection graph on this realization."""
    _require_pair_query(s.n)
    adj = _in_range_matrix(metric, s, params.r) & bit_matrix(s)
    return IsolationCount(int(np.count_nonzero(~adj.any(axis=1))), s.n)


def count_isolated_er(s: GraphSample) -> IsolationCount:
    """Isolated-node count of the Bernoulli graph alone (positions ignored)."""
    _require_pair_query(s.n)
    return IsolationCount(int(np.count_nonzero(~bit_matrix(s).any(axis=1))), s.n)


def count_isolated_geo(metric: Metric, s: GraphSample, r: float) -> IsolationCount:
    """Isolated-node count of the geometric graph alone (bits ignored)."""
    _require_pair_query(s.n)
    if not (r >= 0.0):
        raise ValueError(f"transmission range must be >= 0, got {r}")
    adj = _in_range_matrix(metric, s, r)
    return IsolationCount(int(np.count_nonzero(~adj.any(axis=1))), s.n)


def intersect_two_er(a: GraphSample, b: GraphSample) -> GraphSample:
    """Conjunction of two bit arrays; the result is again a Bernoulli graph.

    Positions are taken from the first sample (ER queries never read them).
    """
    if a.n != b.n:
        raise ValueError(f"node counts differ: {a.n} != {b.n}")
    return GraphSample(a.n, a.positions.copy(), a.bits & b.bits)
