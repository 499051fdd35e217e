"""Trial-based estimation of isolation probabilities and moments.

``estimate`` runs independent realizations of the intersection graph and
aggregates the per-trial isolated-node counts into a SweepRow: the fraction
of trials with no isolated node, its binomial standard error, the empirical
first and second moments of the count, and the matching closed-form columns.

Sampling paths (all draw the exact model law, all deterministic per
(seed, row, trial)):

  * dense: materializes positions, pair uniforms and the full adjacency for
    a chunk of trials at once; supports shared-realization mode (both
    metrics plus ER-only and geometric-only counts on one realization) and
    coupled sweeps (bits realized as U < p from retained uniforms, so counts
    are pointwise monotone along a p- or r-grid);
  * sparse: for large n, sorts positions and only touches in-range pairs,
    each owned by exactly one endpoint.  Depending on the expected workload
    it either enumerates the active edge set directly (a Bernoulli(p)
    process over the owned-edge blocks, realized with geometric skips) or
    draws only per-block active counts and lets the rare candidate nodes
    query their possible partners edge by edge (sequential hypergeometric
    revelation).  Unrealized edges are marginalized out, so both variants
    sample the exact joint law of the isolated-node count.

Trials are distributed over worker threads by trial index (RIG_THREADS caps
the pool); every trial owns the private generator trial_stream(seed, row,
trial) and results land in a preallocated slot, so aggregation is
independent of scheduling.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import analytic
from .core import Metric, ModelParams, trial_stream

_DENSE_MAX_N = 256        # auto path switch for plain estimates
_MODE_MAX_N = 4096        # hard cap for shared-realization / coupled modes
_DENSE_CHUNK_ELEMS = 4_000_000
_SALT_ER_INTERSECT = 1_000_003
_SALT_ER_DIRECT = 1_000_004


class NoCrossingError(ValueError):
    """The sweep never crosses the requested level from below."""


@dataclass(frozen=True)
class TrialConfig:
    """One Monte Carlo estimation task."""

    metric: Metric
    n: int
    params: ModelParams
    trials: int
    seed: int

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"need n >= 2, got {self.n}")
        if self.trials < 1:
            raise ValueError(f"need trials >= 1, got {self.trials}")


@dataclass(frozen=True)
class SweepRow:
    """One estimate record; mirrors the CSV schema of the sweep command."""

    metric: Metric
    n: int
    r: float
    p: float
    trials: int
    seed: int
    p_hat_no_isolated: float
    stderr: float
    mean_isolated: float
    mean_isolated_sq: float
    analytic_expected_isolated: float | None
    prob_lower: float | None
    prob_upper: float | None


@dataclass(frozen=True)
class SharedCounts:
    """Per-trial isolated-node counts of all graphs on shared realizations."""

    interval: np.ndarray
    circle: np.ndarray
    er: np.ndarray
    geo_interval: np.ndarray
    geo_circle: np.ndarray


@dataclass(frozen=True)
class ErEquivalenceReport:
    """Two-sample z-test: intersection of two ER graphs vs the product graph."""

    n: int
    p: float
    p_prime: float
    trials: int
    seed: int
    p_hat_intersection: float
    p_hat_direct: float
    z: float
    passed: bool
    underpowered: bool


def _resolve_threads(threads: int | None) -> int:
    # default is sequential: trial kernels are small numpy calls, so extra
    # workers only pay off for large n; RIG_THREADS opts in
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("RIG_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return 1


def _blocks(total: int, size: int) -> list[tuple[int, int]]:
    size = max(1, size)
    return [(t0, min(t0 + size, total)) for t0 in range(0, total, size)]


def _run_blocks(fn, blocks, threads: int) -> None:
    if threads <= 1 or len(blocks) <= 1:
        for t0, t1 in blocks:
            fn(t0, t1)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, t0, t1) for t0, t1 in blocks]
        for fut in futures:
            fut.result()


def _dense_chunk(n: int, trials: int) -> int:
    return max(1, min(trials, _DENSE_CHUNK_ELEMS // (n * n)))


def _draw_chunk(n: int, seed: int, row: int, t0: int, t1: int):
    m = n * (n - 1) // 2
    pos = np.empty((t1 - t0, n))
    uni = np.empty((t1 - t0, m))
    for k in range(t1 - t0):
        g = trial_stream(seed, row, t0 + k)
        pos[k] = g.random(n)
        uni[k] = g.random(m)
    return pos, uni


def _bit_cube(n: int, bits: np.ndarray) -> np.ndarray:
    iu, ju = np.triu_indices(n, 1)
    cube = np.zeros((bits.shape[0], n, n), dtype=bool)
    cube[:, iu, ju] = bits
    cube |= cube.transpose(0, 2, 1)
    return cube


def _isolated_of(adj: np.ndarray) -> np.ndarray:
    return (~adj.any(axis=2)).sum(axis=1)


def _dense_counts(n: int, params: ModelParams, trials: int, seed: int, row: int,
                  want: frozenset[str], threads: int) -> dict[str, np.ndarray]:
    out = {key: np.zeros(trials, dtype=np.int64) for key in want}
    ar = np.arange(n)
    need_interval = bool(want & {"interval", "geo_interval"})
    need_circle = bool(want & {"circle", "geo_circle"})

    def block(t0: int, t1: int) -> None:
        pos, uni = _draw_chunk(n, seed, row, t0, t1)
        cube = _bit_cube(n, uni < params.p)
        if "er" in want:
            out["er"][t0:t1] = _isolated_of(cube)
        dist = np.abs(pos[:, :, None] - pos[:, None, :])
        if need_interval:
            in_range = dist <= params.r
            in_range[:, ar, ar] = False
            if "geo_interval" in want:
                out["geo_interval"][t0:t1] = _isolated_of(in_range)
            if "interval" in want:
                out["interval"][t0:t1] = _isolated_of(in_range & cube)
        if need_circle:
            in_range = np.minimum(dist, 1.0 - dist) <= params.r
            in_range[:, ar, ar] = False
            if "geo_circle" in want:
                out["geo_circle"][t0:t1] = _isolated_of(in_range)
            if "circle" in want:
                out["circle"][t0:t1] = _isolated_of(in_range & cube)

    _run_blocks(block, _blocks(trials, _dense_chunk(n, trials)), threads)
    return out


# --- sparse path -----------------------------------------------------------
#
# Every in-range pair is owned by exactly one node: node i owns the edges to
# the run of later (clockwise on the circle) nodes within range, so the
# owned-edge blocks partition the edge set.  When the geometry saturates
# (every pair in range) ownership switches to a balanced cyclic scheme where
# each node owns about half a lap; position logic is then irrelevant.

def _saturated(r: float, circle: bool) -> bool:
    return r >= 0.5 if circle else r >= 1.0


def _owned_windows(x: np.ndarray, r: float, circle: bool):
    """Owned-block sizes w plus cyclic decode flag (partner = i+1+offset)."""
    n = x.size
    if _saturated(r, circle):
        half = n // 2
        w = np.full(n, half if n % 2 else half - 1, dtype=np.int64)
        if n % 2 == 0:
            w[:half] = half
        return w, True
    shifted = x + r
    if not circle:
        j_hi = np.searchsorted(x, shifted, side="right")
        return j_hi - np.arange(n) - 1, False
    wrap = shifted >= 1.0
    j_hi = np.empty(n, dtype=np.int64)
    j_hi[~wrap] = np.searchsorted(x, shifted[~wrap], side="right")
    j_hi[wrap] = n + np.searchsorted(x, shifted[wrap] - 1.0, side="right")
    return j_hi - np.arange(n) - 1, True


def _owner_bounds(x: np.ndarray, r: float, circle: bool):
    """Owners whose block may contain an edge into j.

    Returns (lo, hi): the main owner run is [lo_j, j-1]; on a cyclic scheme
    the additional wrapped run is [hi_j, n-1].  Bounds use the same
    comparisons as _owned_windows, so the two views agree edge for edge.
    """
    n = x.size
    idx = np.arange(n)
    if _saturated(r, circle):
        half = n // 2
        if n % 2:
            v = np.full(n, half, dtype=np.int64)
        else:
            v = np.full(n, half - 1, dtype=np.int64)
            v[half:] = half
        raw = idx - v
        lo = np.maximum(raw, 0)
        hi = np.where(raw < 0, raw + n, n)
        return lo, hi
    lo = np.searchsorted(x + r, x, side="left")
    if not circle:
        return lo, np.full(n, n, dtype=np.int64)
    hi = np.searchsorted(x + (r - 1.0), x, side="left")
    return lo, hi


def _bernoulli_indices(rng: np.random.Generator, total: int, p: float) -> np.ndarray:
    """Indices of an i.i.d. Bernoulli(p) subset of range(total), via skips."""
    parts = []
    pos = -1
    want = int(p * total + 6.0 * math.sqrt(p * total + 1.0)) + 16
    while pos < total:
        gaps = rng.geometric(p, size=want)
        steps = np.cumsum(gaps) + pos
        pos = int(steps[-1])
        parts.append(steps[steps < total] if pos >= total else steps)
        want = max(16, int((total - pos) * p * 1.2) + 16)
    return parts[0] if len(parts) == 1 else np.concatenate(parts)


def _enumerate_trial(rng: np.random.Generator, n: int, w: np.ndarray,
                     cyclic: bool, p: float) -> int:
    """Realize every active in-range edge; a node is isolated iff untouched."""
    starts = np.concatenate(([0], np.cumsum(w)))
    total = int(starts[-1])
    if total == 0:
        return n
    idx = _bernoulli_indices(rng, total, p)
    if idx.size == 0:
        return n
    owner = np.searchsorted(starts, idx, side="right") - 1
    partner = owner + 1 + (idx - starts[owner])
    if cyclic:
        partner = np.where(partner >= n, partner - n, partner)
    covered = np.zeros(n, dtype=bool)
    covered[owner] = True
    covered[partner] = True
    return n - int(np.count_nonzero(covered))


def _probe_trial(rng: np.random.Generator, n: int, w: np.ndarray,
                 lo: np.ndarray, hi: np.ndarray, p: float) -> int:
    """Count isolated nodes revealing as few edges as possible.

    Per owner block the active count is Binomial; a node with an active
    owned edge is covered outright.  The remaining candidates query their
    possible owners edge by edge: given the block's active count and the
    already revealed slots, an unrevealed slot is active with probability
    (remaining active)/(remaining slots) - sequential hypergeometric
    revelation, exact because slots within a block are exchangeable and
    each (owner, partner) pair is queried at most once.
    """
    c = rng.binomial(w, p)
    cand = np.flatnonzero(c == 0)
    if cand.size == 0:
        return 0
    revealed = np.zeros(n, dtype=np.int64)
    revealed_active = np.zeros(n, dtype=np.int64)
    isolated = 0
    for j_raw in cand:
        j = int(j_raw)
        covered = False
        main = range(j - 1, int(lo[j]) - 1, -1)
        wrapped = range(n - 1, int(hi[j]) - 1, -1)
        for i in (*main, *wrapped):
            remaining_active = int(c[i]) - int(revealed_active[i])
            if remaining_active == 0:
                continue
            remaining_slots = int(w[i]) - int(revealed[i])
            revealed[i] += 1
            if rng.random() * remaining_slots < remaining_active:
                revealed_active[i] += 1
                covered = True
                break
        if not covered:
            isolated += 1
    return isolated


def _sparse_plan(metric: Metric, n: int, r: float, p: float) -> str:
    """Pick 'probe' or 'enumerate' from expected workloads (config-pure)."""
    circle = metric is Metric.CIRCLE
    length = min(1.0, 2.0 * r)
    half = 0.5 * length
    # P{no active owned edge} is (1 - p*half)^(n-1) on the circle; the
    # interval adds a border strip of about 1/p right-edge nodes
    est_cand = n * math.exp((n - 1) * math.log1p(-p * half)) if p * half < 1 else 0.0
    if not circle and not _saturated(r, circle):
        est_cand = est_cand * max(0.0, 1.0 - r) + 1.0 / p
    est_iso = n * math.exp((n - 1) * math.log1p(-p * length)) if p * length < 1 else 0.0
    probe_cost = 40.0 * (est_cand * min(2.0 / p, half * n + 2.0)
                         + est_iso * (length * n + 2.0)) + 4.0 * n
    enum_cost = p * half * n * n + 6.0 * n
    return "probe" if probe_cost < enum_cost else "enumerate"


def _sparse_counts(metric: Metric, n: int, params: ModelParams, trials: int,
                   seed: int, row: int, threads: int) -> np.ndarray:
    out = np.zeros(trials, dtype=np.int64)
    circle = metric is Metric.CIRCLE
    r, p = params.r, params.p
    plan = _sparse_plan(metric, n, r, p) if 0.0 < p < 1.0 else "special"

    def block(t0: int, t1: int) -> None:
        for t in range(t0, t1):
            g = trial_stream(seed, row, t)
            x = np.sort(g.random(n))
            if p == 0.0:
                out[t] = n
                continue
            w, cyclic = _owned_windows(x, r, circle)
            if p == 1.0:
                lo, hi = _owner_bounds(x, r, circle)
                degree = w + (np.arange(n) - lo) + (n - hi)
                out[t] = int(np.count_nonzero(degree == 0))
            elif plan == "probe":
                lo, hi = _owner_bounds(x, r, circle)
                out[t] = _probe_trial(g, n, w, lo, hi, p)
            else:
                out[t] = _enumerate_trial(g, n, w, cyclic, p)

    size = max(64, -(-trials // (threads * 4)))
    _run_blocks(block, _blocks(trials, size), threads)
    return out


def isolated_counts(config: TrialConfig, *, row: int = 0, threads: int | None = None,
                    path: str = "auto") -> np.ndarray:
    """Per-trial isolated-node counts of the intersection graph.

    path "auto" uses the dense sampler up to n=256 and the sparse sampler
    beyond; "dense"/"sparse" force one (dense is capped at n=4096).
    """
    threads = _resolve_threads(threads)
    if path == "auto":
        path = "dense" if config.n <= _DENSE_MAX_N else "sparse"
    if path == "dense":
        if config.n > _MODE_MAX_N:
            raise ValueError(f"dense path capped at n={_MODE_MAX_N}")
        key = config.metric.value
        return _dense_counts(config.n, config.params, config.trials, config.seed,
                             row, frozenset({key}), threads)[key]
    if path == "sparse":
        return _sparse_counts(config.metric, config.n, config.params,
                              config.trials, config.seed, row, threads)
    raise ValueError(f"unknown path {path!r}")


def _row_from_counts(config: TrialConfig, counts: np.ndarray,
                     analytic_columns: bool) -> SweepRow:
    trials = counts.size
    p_hat = float(np.count_nonzero(counts == 0)) / trials
    stderr = math.sqrt(p_hat * (1.0 - p_hat) / trials)
    mean = float(counts.mean())
    mean_sq = float(np.square(counts.astype(float)).mean())
    expected = lower = upper = None
    if analytic_columns:
        if config.metric is Metric.CIRCLE:
            e1 = analytic.first_moment_circle(config.n, config.params)
        else:
            e1 = analytic.first_moment_interval(config.n, config.params)
        expected = config.n * e1
        lower, upper = analytic.probability_bounds(config.n, config.params,
                                                   config.metric)
    return SweepRow(config.metric, config.n, config.params.r, config.params.p,
                    trials, config.seed, p_hat, stderr, mean, mean_sq,
                    expected, lower, upper)


def estimate(config: TrialConfig, *, row: int = 0, threads: int | None = None,
             analytic_columns: bool = True, path: str = "auto") -> SweepRow:
    """Estimate P{no isolated nodes} and the count moments for one config."""
    counts = isolated_counts(config, row=row, threads=threads, path=path)
    return _row_from_counts(config, counts, analytic_columns)


def shared_counts(n: int, params: ModelParams, trials: int, seed: int, *,
                  row: int = 0, threads: int | None = None) -> SharedCounts:
    """Counts of all five graphs evaluated on shared realizations.

    The circle stream equals the plain dense estimate's stream, so pathwise
    comparisons (interval >= circle, intersection >= each component) hold
    realization by realization.
    """
    if n > _MODE_MAX_N:
        raise ValueError(f"shared-realization mode capped at n={_MODE_MAX_N}")
    threads = _resolve_threads(threads)
    want = frozenset({"interval", "circle", "er", "geo_interval", "geo_circle"})
    got = _dense_counts(n, params, trials, seed, row, want, threads)
    return SharedCounts(got["interval"], got["circle"], got["er"],
                        got["geo_interval"], got["geo_circle"])


def _grid_params(base: ModelParams, vary: str, value: float) -> ModelParams:
    if vary == "r":
        return ModelParams(value, base.p)
    if vary == "p":
        return ModelParams(base.r, value)
    raise ValueError(f"vary must be 'r' or 'p', got {vary!r}")


def _coupled_counts(metrics: tuple[Metric, ...], n: int, params: ModelParams,
                    vary: str, grid: list[float], trials: int, seed: int,
                    threads: int) -> dict[Metric, np.ndarray]:
    """(grid, trials) count arrays from one retained realization per trial."""
    if n > _MODE_MAX_N:
        raise ValueError(f"coupled mode capped at n={_MODE_MAX_N}")
    out = {metric: np.zeros((len(grid), trials), dtype=np.int64)
           for metric in metrics}
    ar = np.arange(n)

    def block(t0: int, t1: int) -> None:
        pos, uni = _draw_chunk(n, seed, 0, t0, t1)
        dist = np.abs(pos[:, :, None] - pos[:, None, :])
        dists = {}
        for metric in metrics:
            d = dist if metric is Metric.INTERVAL else np.minimum(dist, 1.0 - dist)
            dists[metric] = d
        if vary == "p":
            in_range = {}
            for metric in metrics:
                m = dists[metric] <= params.r
                m[:, ar, ar] = False
                in_range[metric] = m
            for gi, p in enumerate(grid):
                cube = _bit_cube(n, uni < p)
                for metric in metrics:
                    out[metric][gi, t0:t1] = _isolated_of(in_range[metric] & cube)
        else:
            cube = _bit_cube(n, uni < params.p)
            for gi, r in enumerate(grid):
                for metric in metrics:
                    m = dists[metric] <= r
                    m[:, ar, ar] = False
                    out[metric][gi, t0:t1] = _isolated_of(m & cube)

    _run_blocks(block, _blocks(trials, _dense_chunk(n, trials)), threads)
    return out


def sweep(config: TrialConfig, vary: str, grid: list[float], *,
          coupled: bool = False, threads: int | None = None,
          analytic_columns: bool = True) -> list[SweepRow]:
    """One SweepRow per grid point for a single metric.

    Plain mode gives every grid point an independent trial stream (row salt =
    grid index; a single-point grid therefore reproduces estimate()).
    Coupled mode evaluates every grid point on one retained realization per
    trial, so p_hat is exactly non-decreasing along an increasing grid.
    """
    if not grid:
        raise ValueError("grid must be nonempty")
    point_params = [_grid_params(config.params, vary, g) for g in grid]
    if not coupled:
        rows = []
        for gi, params in enumerate(point_params):
            cfg = TrialConfig(config.metric, config.n, params, config.trials,
                              config.seed)
            rows.append(estimate(cfg, row=gi, threads=threads,
                                 analytic_columns=analytic_columns))
        return rows
    counts = _coupled_counts((config.metric,), config.n, config.params, vary,
                             list(grid), config.trials, config.seed,
                             _resolve_threads(threads))[config.metric]
    rows = []
    for gi, params in enumerate(point_params):
        cfg = TrialConfig(config.metric, config.n, params, config.trials,
                          config.seed)
        rows.append(_row_from_counts(cfg, counts[gi], analytic_columns))
    return rows


def sweep_shared(n: int, params: ModelParams, trials: int, seed: int,
                 vary: str, grid: list[float], *, coupled: bool = False,
                 threads: int | None = None,
                 analytic_columns: bool = True) -> list[SweepRow]:
    """Both-metric sweep on shared realizations.

    Returns two rows per grid point (circle first, then interval), each pair
    evaluated on the same positions and bits.
    """
    if not grid:
        raise ValueError("grid must be nonempty")
    threads_n = _resolve_threads(threads)
    metrics = (Metric.CIRCLE, Metric.INTERVAL)
    rows: list[SweepRow] = []
    if coupled:
        counts = _coupled_counts(metrics, n, params, vary, list(grid), trials,
                                 seed, threads_n)
        for gi, g in enumerate(grid):
            point = _grid_params(params, vary, g)
            for metric in metrics:
                cfg = TrialConfig(metric, n, point, trials, seed)
                rows.append(_row_from_counts(cfg, counts[metric][gi],
                                             analytic_columns))
        return rows
    for gi, g in enumerate(grid):
        point = _grid_params(params, vary, g)
        got = _dense_counts(n, point, trials, seed, gi,
                            frozenset({"circle", "interval"}), threads_n)
        for metric in metrics:
            cfg = TrialConfig(metric, n, point, trials, seed)
            rows.append(_row_from_counts(cfg, got[metric.value], analytic_columns))
    return rows


def crossing_point(rows: list[SweepRow], level: float, vary: str) -> float:
    """Linear interpolation of the first upward crossing of `level`.

    Rows must be sorted by the varied parameter with strictly increasing
    values; raises NoCrossingError when p_hat never moves from below the
    level to at-or-above it.
    """
    if not (0.0 < level < 1.0):
        raise ValueError(f"level must lie in (0, 1), got {level}")
    if len(rows) < 2:
        raise NoCrossingError("need at least two rows")
    xs = [getattr(row, vary) for row in rows]
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValueError("rows must be sorted by the varied parameter")
    ys = [row.p_hat_no_isolated for row in rows]
    for i in range(1, len(rows)):
        if ys[i - 1] < level <= ys[i]:
            frac = (level - ys[i - 1]) / (ys[i] - ys[i - 1])
            return xs[i - 1] + frac * (xs[i] - xs[i - 1])
    raise NoCrossingError(f"p_hat never crosses {level} upward")


def _er_isolated(n: int, bit_rows: np.ndarray) -> np.ndarray:
    return _isolated_of(_bit_cube(n, bit_rows))


def er_equivalence_test(n: int, p: float, p_prime: float, trials: int,
                        seed: int, *, threads: int | None = None
                        ) -> ErEquivalenceReport:
    """Compare intersect(ER(p), ER(p')) with ER(p*p') on P{no isolated}.

    Two-sample proportion z-test; passes at |z| < 4.  Flagged underpowered
    when the normal approximation is shaky (tiny trial count or fewer than
    five successes/failures in an arm).
    """
    if n < 2 or trials < 1:
        raise ValueError("need n >= 2 and trials >= 1")
    for q in (p, p_prime):
        if not (0.0 <= q <= 1.0):
            raise ValueError(f"probability outside [0, 1]: {q}")
    threads_n = _resolve_threads(threads)
    m = n * (n - 1) // 2
    inter = np.zeros(trials, dtype=np.int64)
    direct = np.zeros(trials, dtype=np.int64)

    def block(t0: int, t1: int) -> None:
        rows = t1 - t0
        a = np.empty((rows, m), dtype=bool)
        b = np.empty((rows, m), dtype=bool)
        for k in range(rows):
            g = trial_stream(seed, _SALT_ER_INTERSECT, t0 + k)
            a[k] = g.random(m) < p
            a[k] &= g.random(m) < p_prime
            g = trial_stream(seed, _SALT_ER_DIRECT, t0 + k)
            b[k] = g.random(m) < p * p_prime
        inter[t0:t1] = _er_isolated(n, a)
        direct[t0:t1] = _er_isolated(n, b)

    _run_blocks(block, _blocks(trials, _dense_chunk(n, trials)), threads_n)
    succ_a = int(np.count_nonzero(inter == 0))
    succ_b = int(np.count_nonzero(direct == 0))
    p_a = succ_a / trials
    p_b = succ_b / trials
    pooled = 0.5 * (p_a + p_b)
    se = math.sqrt(max(pooled * (1.0 - pooled) * 2.0 / trials, 0.0))
    z = 0.0 if se == 0.0 else (p_a - p_b) / se
    underpowered = trials < 30 or min(succ_a, trials - succ_a,
                                      succ_b, trials - succ_b) < 5
    return ErEquivalenceReport(n, p, p_prime, trials, seed, p_a, p_b, z,
                               abs(z) < 4.0, underpowered)
