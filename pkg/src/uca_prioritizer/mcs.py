"""Monte Carlo rank-sensitivity simulation over expert scores.

Each iteration multiplies every raw score by ``1 + u`` with ``u`` drawn
uniformly from ``[-variation_range, +variation_range]``, then re-runs
normalization, SAW and competition ranking on the perturbed cohort. The rank
samples are summarized into mean rank, population standard deviation, the
EJ-Score (mean + sd) and the upper bound of the 95% normal CI of the mean.

Randomness: iteration ``i`` draws from its own PCG64 stream seeded with
``SeedSequence(seed, spawn_key=(i,))``. Draws within an iteration are taken in
row-major (UCA, criterion) order. Results therefore do not depend on how
iterations are split across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, NamedTuple, Sequence

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .ej import _competition, _normalize, initial_ranking
from .errors import ConfigError
from .model import MonteCarloStats, Stability, ci_upper_bound
from .validation import check_ids, check_score_matrix

Sampler = Callable[[np.random.Generator, tuple, float], np.ndarray]

_U64_MAX = 2**64 - 1


@dataclass(frozen=True)
class SimulationConfig:
    num_simulations: int = 1000
    variation_range: float = 0.10
    seed: int = 0
    max_mean_shift: float = 1.0
    max_std: float = 0.5

    def __post_init__(self):
        n = self.num_simulations
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
            raise ConfigError(f"num_simulations must be an integer >= 1, got {n!r}")
        v = self.variation_range
        if not (isinstance(v, (int, float)) and 0 < v <= 1):
            raise ConfigError(f"variation_range must be in (0, 1], got {v!r}")
        s = self.seed
        if isinstance(s, bool) or not isinstance(s, (int, np.integer)) or not 0 <= s <= _U64_MAX:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {s!r}")
        if not self.max_mean_shift > 0:
            raise ConfigError("max_mean_shift must be > 0")
        if not self.max_std >= 0:
            raise ConfigError("max_std must be >= 0")


@dataclass(frozen=True)
class RankDistribution:
    uca_id: str
    ranks: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        if not self.ranks:
            raise ValueError(f"{self.uca_id}: empty rank distribution")
        if min(self.ranks) < 1:
            raise ValueError(f"{self.uca_id}: ranks must be >= 1")


class RankedUca(NamedTuple):
    final_rank: int
    stats: MonteCarloStats


def perturb(f, u):
    """Scaled score ``f * (1 + u)``; works elementwise on arrays."""
    return f * (1 + u)


def uniform_sampler(rng: np.random.Generator, shape: tuple, variation_range: float) -> np.ndarray:
    return rng.uniform(-variation_range, variation_range, size=shape)


def iteration_rng(seed: int, iteration: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(iteration,))))


def _simulate_block(raw, start, stop, config, sampler) -> np.ndarray:
    out = np.empty((raw.shape[0], stop - start), dtype=np.int64)
    for col, i in enumerate(range(start, stop)):
        u = sampler(iteration_rng(config.seed, i), raw.shape, config.variation_range)
        scores = _normalize(perturb(raw, u)).sum(axis=1)
        out[:, col] = _competition(scores)
    return out


def simulate_ranks(raw, config: SimulationConfig, *, sampler: Sampler | None = None,
                   n_jobs: int | None = 1) -> np.ndarray:
    """Rank samples as an ``(n_ucas, num_simulations)`` integer array."""
    raw = check_score_matrix(raw)
    sampler = sampler or uniform_sampler
    n = config.num_simulations
    if n_jobs in (None, 1) or n < 2:
        return _simulate_block(raw, 0, n, config, sampler)
    bounds = np.linspace(0, n, min(n, 32) + 1).astype(int)
    jobs = (delayed(_simulate_block)(raw, int(a), int(b), config, sampler)
            for a, b in zip(bounds[:-1], bounds[1:]) if b > a)
    blocks = Parallel(n_jobs=n_jobs)(jobs)
    return np.concatenate(blocks, axis=1)


def run_mcs(raw, config: SimulationConfig, *, ids: Sequence[str] | None = None,
            sampler: Sampler | None = None, n_jobs: int | None = 1) -> dict[str, RankDistribution]:
    raw = check_score_matrix(raw)
    ids = check_ids(ids, raw.shape[0])
    ranks = simulate_ranks(raw, config, sampler=sampler, n_jobs=n_jobs)
    return {uid: RankDistribution(uid, row) for uid, row in zip(ids, ranks)}


def _stability(mean, std, initial_rank, max_mean_shift, max_std) -> Stability:
    if abs(mean - initial_rank) < max_mean_shift and std <= max_std:
        return Stability.STABLE
    return Stability.SENSITIVE


def classify_stability(stats: MonteCarloStats, max_mean_shift: float = 1.0,
                       max_std: float = 0.5) -> Stability:
    """Stable when the mean rank stays within ``max_mean_shift`` of the initial rank
    and the rank spread is at most ``max_std``."""
    return _stability(stats.mean_rank, stats.rank_std, stats.initial_rank, max_mean_shift, max_std)


def summarize(dist: RankDistribution | Sequence[int], initial_rank: int,
              config: SimulationConfig | None = None, *, uca_id: str | None = None) -> MonteCarloStats:
    """Mean rank, population sd, EJ-Score, CI upper bound and stability of one rank sample."""
    config = config or SimulationConfig()
    if isinstance(dist, RankDistribution):
        uca_id = dist.uca_id if uca_id is None else uca_id
        ranks = dist.ranks
    else:
        ranks = dist
    r = np.asarray(ranks, dtype=np.float64)
    if r.size == 0:
        raise ValueError("empty rank distribution")
    n = r.size
    mean = float(r.mean())
    std = float(np.sqrt(np.mean((r - mean) ** 2)))
    return MonteCarloStats(
        uca_id=uca_id if uca_id is not None else "",
        initial_rank=int(initial_rank),
        mean_rank=mean,
        rank_std=std,
        ej_score=mean + std,
        ci_upper=ci_upper_bound(mean, std, n),
        stability=_stability(mean, std, initial_rank, config.max_mean_shift, config.max_std),
        num_simulations=n,
    )


def final_ej_ordering(stats: Sequence[MonteCarloStats]) -> list[RankedUca]:
    """Order by CI upper bound, then EJ-Score, then id; competition ranks on (CI, EJ)."""
    ordered = sorted(stats, key=lambda s: (s.ci_upper, s.ej_score, s.uca_id))
    out: list[RankedUca] = []
    prev_key = None
    rank = 0
    for pos, s in enumerate(ordered, start=1):
        key = (s.ci_upper, s.ej_score)
        if key != prev_key:
            rank = pos
            prev_key = key
        out.append(RankedUca(rank, s))
    return out


class MonteCarloRanker(BaseEstimator):
    """Monte Carlo rank sensitivity of a raw expert score matrix.

    Parameters
    ----------
    num_simulations : int, default=1000
    variation_range : float, default=0.10
        Half-width of the uniform multiplicative perturbation.
    seed : int, default=0
    max_mean_shift, max_std : float
        Stability thresholds (see :func:`classify_stability`).
    n_jobs : int, default=1
        Workers for the simulation loop; results are identical for any value.

    Attributes
    ----------
    ids_ : list of str
    initial_scores_, initial_ranks_ : ndarray of shape (n_ucas,)
    rank_samples_ : ndarray of shape (n_ucas, num_simulations)
    stats_ : list of MonteCarloStats, in input row order
    ej_scores_, ci_upper_ : ndarray of shape (n_ucas,)
    final_ranks_ : ndarray of shape (n_ucas,)
    """

    def __init__(self, num_simulations=1000, variation_range=0.10, seed=0,
                 max_mean_shift=1.0, max_std=0.5, n_jobs=1):
        self.num_simulations = num_simulations
        self.variation_range = variation_range
        self.seed = seed
        self.max_mean_shift = max_mean_shift
        self.max_std = max_std
        self.n_jobs = n_jobs

    def _config(self) -> SimulationConfig:
        return SimulationConfig(self.num_simulations, self.variation_range, self.seed,
                                self.max_mean_shift, self.max_std)

    def fit(self, X, y=None, *, ids=None, sampler: Sampler | None = None):
        config = self._config()
        X = check_score_matrix(X, estimator=self)
        self.n_features_in_ = X.shape[1]
        self.ids_ = check_ids(ids, X.shape[0])
        self.initial_scores_, self.initial_ranks_ = initial_ranking(X)
        self.rank_samples_ = simulate_ranks(X, config, sampler=sampler, n_jobs=self.n_jobs)
        self.stats_ = [summarize(row, init, config, uca_id=uid)
                       for uid, row, init in zip(self.ids_, self.rank_samples_, self.initial_ranks_)]
        self.ej_scores_ = np.array([s.ej_score for s in self.stats_])
        self.ci_upper_ = np.array([s.ci_upper for s in self.stats_])
        final = {r.stats.uca_id: r.final_rank for r in final_ej_ordering(self.stats_)}
        self.final_ranks_ = np.array([final[uid] for uid in self.ids_], dtype=np.int64)
        return self

    def fit_predict(self, X, y=None, **fit_params):
        """Fit and return the EJ-Score of every row (lower = higher priority)."""
        return self.fit(X, **fit_params).ej_scores_

    @property
    def stats_by_id_(self) -> Mapping[str, MonteCarloStats]:
        check_is_fitted(self, "stats_")
        return {s.uca_id: s for s in self.stats_}

