"""Bi-dimensional Markov chain for the number of cluster heads per round
under distributed, dynamic, randomized (DDR) clustering.

A cycle starts in state ``(0, N)``: stage 0, all N nodes still candidates.
Each election stage turns every remaining candidate into a cluster head
with probability ``p``, so from ``(s, i)`` the chain moves to
``(s + 1, i - k)`` with binomial probability ``C(i, k) p^k (1-p)^(i-k)``.
Stage ``m - 1`` closes the cycle and returns to ``(0, N)``.

State ``(s, i)`` always means *i candidates remaining after s stages*.
Stationary masses factor as ``pi(s, i) = pi(0, N) * f[s, i]`` where row s
of the factor matrix ``f`` is the distribution of remaining candidates
after s stages; every row sums to one, hence ``pi(0, N) = 1/m``.

Two accountings of the cycle-closing stage are offered by
:func:`ch_count_pmf`:

* default: stage ``m - 1`` is the reset point only, and the pmf is over the
  ``m - 1`` election rounds of a cycle.  A two-stage chain is then a single
  binomial election.
* ``forced_final_stage=True``: stage ``m - 1`` is itself a round in which
  every leftover candidate is forced to become a head (the ``pi(m-1, k)``
  term, the LEACH "threshold reaches 1" round).  Every node is then head
  exactly once per cycle and the mean is exactly ``N / m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .protocols import deec_weighted_probability

# switch from exact integer coefficients to log-gamma above this size
_LOG_BINOM_THRESHOLD = 50


class ConsistencyError(ArithmeticError):
    """A constructed distribution failed its own normalization check."""


def transition_pmf(n_remaining: int, p: float) -> np.ndarray:
    """Binomial pmf of the number of new heads among ``n_remaining`` candidates."""
    if n_remaining < 0:
        raise ValueError(f"n_remaining must be >= 0, got {n_remaining!r}")
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    n = int(n_remaining)
    k = np.arange(n + 1)
    if p == 0 or p == 1:
        out = np.zeros(n + 1)
        out[0 if p == 0 else n] = 1.0
        return out
    if n <= _LOG_BINOM_THRESHOLD:
        coeff = np.array([math.comb(n, j) for j in range(n + 1)], dtype=float)
        return coeff * p**k * (1.0 - p) ** (n - k)
    log_coeff = np.array([math.lgamma(n + 1) - math.lgamma(j + 1) - math.lgamma(n - j + 1) for j in range(n + 1)])
    return np.exp(log_coeff + k * math.log(p) + (n - k) * math.log1p(-p))


def _stage_kernel(n: int, p: float) -> np.ndarray:
    """``K[i, j]`` = P(j candidates remain | i remained), for i, j in [0, n]."""
    kernel = np.zeros((n + 1, n + 1))
    for i in range(n + 1):
        # k new heads leave i - k candidates
        kernel[i, : i + 1] = transition_pmf(i, p)[::-1]
    return kernel


def build_factor_matrix(n: int, m_stages: int, p: float) -> np.ndarray:
    """Factor matrix of shape ``(m_stages - 1, n + 1)``.

    Row ``s - 1`` holds ``f[s, i]`` for stage ``s`` in ``[1, m - 1]`` and
    ``i`` remaining candidates in ``[0, n]``.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    if m_stages < 2:
        raise ValueError(f"m_stages must be >= 2, got {m_stages!r}")
    kernel = _stage_kernel(n, p)
    rows = np.empty((m_stages - 1, n + 1))
    rows[0] = kernel[n]
    for s in range(1, m_stages - 1):
        rows[s] = rows[s - 1] @ kernel
    return rows


def pi0_from_factors(factor_matrix: np.ndarray) -> float:
    """Stationary mass of ``(0, N)`` from the normalization condition."""
    return 1.0 / (1.0 + float(np.sum(factor_matrix)))


def stationary_pi0(m_stages: int, factor_matrix: Optional[np.ndarray] = None, tol: float = 1e-12) -> float:
    """``1/m``; when a factor matrix is supplied it is cross-checked against it."""
    if m_stages < 1:
        raise ValueError(f"m_stages must be >= 1, got {m_stages!r}")
    pi0 = 1.0 / m_stages
    if factor_matrix is not None:
        via_norm = pi0_from_factors(factor_matrix)
        if abs(via_norm - pi0) > tol:
            raise ConsistencyError(f"normalization gives pi0={via_norm!r}, closed form {pi0!r}")
    return pi0


@dataclass(frozen=True)
class MarkovModel:
    n: int
    m_stages: int
    p_stage: float
    factor_matrix: np.ndarray = field(repr=False)
    pi0: float

    @classmethod
    def build(cls, n: int, m_stages: int, p: float) -> "MarkovModel":
        fm = build_factor_matrix(n, m_stages, p)
        return cls(n=n, m_stages=m_stages, p_stage=p, factor_matrix=fm, pi0=stationary_pi0(m_stages, fm))

    def stationary(self) -> np.ndarray:
        """Stationary masses ``pi(s, i)`` for stages 1..m-1 (same shape as F)."""
        return self.pi0 * self.factor_matrix


@dataclass(frozen=True)
class ChCountDistribution:
    pmf: np.ndarray
    mean: float = field(default=None)

    def __post_init__(self):
        pmf = np.asarray(self.pmf, dtype=float)
        object.__setattr__(self, "pmf", pmf)
        if self.mean is None:
            object.__setattr__(self, "mean", ch_count_mean(self))

    @property
    def n(self) -> int:
        return len(self.pmf) - 1

    @property
    def std(self) -> float:
        k = np.arange(len(self.pmf))
        return float(np.sqrt(np.sum((k - self.mean) ** 2 * self.pmf)))


def ch_count_mean(dist: ChCountDistribution) -> float:
    return float(np.dot(np.arange(len(dist.pmf)), dist.pmf))


def ch_count_pmf(model: MarkovModel, forced_final_stage: bool = False, tol: float = 1e-9) -> ChCountDistribution:
    """Distribution of the number of heads elected in a round at stationarity."""
    n, m, p = model.n, model.m_stages, model.p_stage
    kernel_rows = [transition_pmf(i, p) for i in range(n + 1)]
    pi = model.stationary()

    def heads_from(mass_by_remaining: np.ndarray) -> np.ndarray:
        # sum_i mass(i) * P(k of i candidates elected), k in [0, n]
        out = np.zeros(n + 1)
        for i, w in enumerate(mass_by_remaining):
            if w:
                out[: i + 1] += w * kernel_rows[i]
        return out

    # stage 0 -> 1 from (0, N), then stages 1..m-2
    pmf = model.pi0 * kernel_rows[n]
    for s in range(1, m - 1):
        pmf = pmf + heads_from(pi[s - 1])

    if forced_final_stage:
        # cycle-closing round: the k leftover candidates are all elected
        pmf = pmf + pi[m - 2]
    else:
        pmf = pmf / (1.0 - model.pi0)

    total = pmf.sum()
    if abs(total - 1.0) > tol or np.any(pmf < -tol):
        raise ConsistencyError(f"head-count pmf is not normalized (sum={total!r})")
    return ChCountDistribution(np.clip(pmf, 0.0, None))


def stage_probability(p_opt: float, n: int, a, e, e_bar: float) -> np.ndarray:
    """Per-node stage probabilities from heterogeneity factors and residual energies."""
    a = np.asarray(a, dtype=float)
    return np.atleast_1d(deec_weighted_probability(p_opt, a, float(a.sum()), n, e, e_bar))


_MC_CHUNK = 10_000


def _simulate_chunk(rng: np.random.Generator, trials: int, n: int, m_stages: int,
                    p: np.ndarray, forced_final_stage: bool) -> np.ndarray:
    """Per-round head counts for ``trials`` independent rounds.

    Each trial picks a uniformly random round position in the cycle, plays
    the node-level coin flips of every earlier stage from a fresh cycle,
    then counts the heads of that round.
    """
    rounds_per_cycle = m_stages if forced_final_stage else m_stages - 1
    stage = rng.integers(0, rounds_per_cycle, size=trials)
    candidate = np.ones((trials, n), dtype=bool)
    counts = np.zeros(trials, dtype=np.int64)
    for s in range(rounds_per_cycle):
        active = stage >= s
        if not active.any():
            break
        if forced_final_stage and s == m_stages - 1:
            elected = candidate
        else:
            elected = candidate & (rng.random((trials, n)) < p)
        now = stage == s
        counts[now] = elected[now].sum(axis=1)
        candidate = candidate & ~elected
    return counts


def monte_carlo_ch_distribution(n: int, m_stages: int, p: Union[float, np.ndarray], trials: int, seed: int,
                                forced_final_stage: bool = False) -> ChCountDistribution:
    """Empirical head-count pmf from direct simulation of the staged election.

    ``p`` may be a scalar or a per-node vector.  Trials are split into fixed
    chunks with their own seed-derived streams, so the result does not
    depend on how chunks are scheduled.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials!r}")
    if m_stages < (1 if forced_final_stage else 2):
        raise ValueError(f"m_stages too small: {m_stages!r}")
    probs = np.broadcast_to(np.asarray(p, dtype=float), (n,))
    n_chunks = -(-trials // _MC_CHUNK)
    streams = np.random.SeedSequence(seed).spawn(n_chunks)
    hist = np.zeros(n + 1, dtype=np.int64)
    remaining = trials
    for child in streams:
        size = min(_MC_CHUNK, remaining)
        remaining -= size
        counts = _simulate_chunk(np.random.default_rng(child), size, n, m_stages, probs, forced_final_stage)
        hist += np.bincount(counts, minlength=n + 1)
    return ChCountDistribution(hist / trials)
