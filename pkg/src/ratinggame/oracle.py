"""Exact distribution over rating states by dynamic programming.

The state after each consumer is the integer pair (visits, likes), so the
distribution after ``n`` consumers lives on a triangle of O(n**2) cells and
every rating is recomputed from integers.  Nothing is sampled and nothing is
pruned.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, Optional

import numba as nb
import numpy as np

from .errors import EmptyConditionError, ResourceError
from .model import GameParams, exceeds, is_dead, rating

__all__ = [
    "DEFAULT_DP_CAP",
    "StateDistribution",
    "dp_cap",
    "initial_distribution",
    "step_distribution",
    "evolve",
    "evolve_checkpoints",
    "exact_death_probability",
    "exact_expected_rating",
    "exact_bias",
    "limit_rating",
    "rating_bias",
]

DEFAULT_DP_CAP = 2000


def dp_cap() -> int:
    """Largest horizon the oracle accepts; ``RATING_DP_CAP`` overrides."""
    raw = os.environ.get("RATING_DP_CAP")
    return int(raw) if raw else DEFAULT_DP_CAP


@dataclass(frozen=True)
class StateDistribution:
    """Probability mass over (visits, likes) after ``horizon`` consumers.

    ``mass[visits, likes]`` is the probability of that state; the array is
    square with side ``horizon + 1`` and zero above the diagonal.
    """

    horizon: int
    mass: np.ndarray
    params: GameParams

    def total(self) -> float:
        return math.fsum(self.mass.ravel())

    def checksum(self) -> float:
        """``|sum(mass) - 1|`` computed with exact summation."""
        return abs(self.total() - 1.0)

    def as_dict(self) -> dict:
        v, k = np.nonzero(self.mass)
        return {(int(a), int(b)): float(self.mass[a, b]) for a, b in zip(v, k)}

    def ratings(self) -> np.ndarray:
        n = self.mass.shape[0]
        return _rating_table(n, self.params)

    def dead_mask(self) -> np.ndarray:
        return is_dead(self.ratings(), self.params.rho)

    def death_probability(self) -> float:
        return math.fsum(self.mass[self.dead_mask()])

    def expected_rating(self, conditional_on_survival: bool = False) -> float:
        r = self.ratings()
        if not conditional_on_survival:
            return math.fsum((self.mass * r).ravel())
        alive = ~self.dead_mask()
        survival = math.fsum(self.mass[alive])
        if survival <= 0.0:
            raise EmptyConditionError("no surviving mass at this horizon", survivors=0)
        return math.fsum((self.mass * r)[alive]) / survival


def _rating_table(n: int, params: GameParams) -> np.ndarray:
    """Rating of every (visits, likes) cell; cells with likes > visits hold 0."""
    visits, likes = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return np.where(likes <= visits, rating(visits, likes, params), 0.0)


def initial_distribution(params: GameParams) -> StateDistribution:
    return StateDistribution(0, np.ones((1, 1)), params)


def _branch_probabilities(r: np.ndarray, params: GameParams):
    """P(attend and like), P(attend and dislike) for each state's rating."""
    a, rho, f = params.alpha, params.rho, params.reader_fraction
    pos_like, pos_dislike = a * rho, (1.0 - a) * (1.0 - rho)
    selective = exceeds(r, 1.0 - rho)
    everyone = exceeds(r, rho)
    reader_like = np.where(everyone, a, np.where(selective, pos_like, 0.0))
    reader_dislike = np.where(everyone, 1.0 - a, np.where(selective, pos_dislike, 0.0))
    like = f * reader_like + (1.0 - f) * pos_like
    dislike = f * reader_dislike + (1.0 - f) * pos_dislike
    return like, dislike


def step_distribution(dist: StateDistribution) -> StateDistribution:
    """Advance the distribution by one consumer."""
    params = dist.params
    n = dist.horizon + 1
    like, dislike = _branch_probabilities(dist.ratings(), params)
    to_like = dist.mass * like
    to_dislike = dist.mass * dislike
    new = np.zeros((n + 1, n + 1))
    new[:n, :n] = dist.mass - to_like - to_dislike
    new[1:, 1:] += to_like
    new[1:, :n] += to_dislike
    return StateDistribution(dist.horizon + 1, new, params)


def _check_cap(horizon: int) -> None:
    cap = dp_cap()
    if horizon > cap:
        raise ResourceError(f"horizon {horizon} exceeds the DP cap of {cap} (set RATING_DP_CAP to raise it)")


@nb.njit(cache=True)
def _advance(mass, like, dislike, t):  # pragma: no cover
    # Rows are walked top-down so row v+1 is settled before row v feeds it.
    for v in range(t, -1, -1):
        for k in range(v + 1):
            m = mass[v, k]
            if m == 0.0:
                continue
            a = m * like[v, k]
            b = m * dislike[v, k]
            if a == 0.0 and b == 0.0:
                continue
            mass[v, k] = m - a - b
            mass[v + 1, k + 1] += a
            mass[v + 1, k] += b


def _run(params: GameParams, wanted):
    # Same transition as step_distribution, with branch tables built once for
    # the largest horizon.
    last = wanted[-1]
    n = last + 1
    like, dislike = _branch_probabilities(_rating_table(n, params), params)
    mass = np.zeros((n, n))
    mass[0, 0] = 1.0
    targets = set(wanted)
    if 0 in targets:
        yield 0, StateDistribution(0, mass[:1, :1].copy(), params)
    for t in range(last):
        _advance(mass, like, dislike, t)
        if t + 1 in targets:
            yield t + 1, StateDistribution(t + 1, mass[: t + 2, : t + 2].copy(), params)


def evolve(params: GameParams, horizon: Optional[int] = None) -> StateDistribution:
    """Distribution after ``horizon`` consumers (default ``params.horizon``)."""
    horizon = params.horizon if horizon is None else int(horizon)
    _check_cap(horizon)
    for _, dist in _run(params, [horizon]):
        return dist


def evolve_checkpoints(params: GameParams, checkpoints: Iterable[int]):
    """Yield ``(h, distribution)`` for each checkpoint in increasing order."""
    wanted = sorted(set(int(c) for c in checkpoints))
    if not wanted:
        return iter(())
    _check_cap(wanted[-1])
    return _run(params, wanted)


def exact_death_probability(params: GameParams, horizon: Optional[int] = None) -> float:
    return evolve(params, horizon).death_probability()


def exact_expected_rating(params: GameParams, horizon: Optional[int] = None, conditional_on_survival: bool = False) -> float:
    return evolve(params, horizon).expected_rating(conditional_on_survival)


def rating_bias(final_rating: float, alpha: float) -> float:
    return final_rating - alpha


def exact_bias(params: GameParams, horizon: Optional[int] = None, conditional_on_survival: bool = False) -> float:
    return rating_bias(exact_expected_rating(params, horizon, conditional_on_survival), params.alpha)


def limit_rating(alpha: float, rho: float) -> Optional[float]:
    """Long-run rating of a surviving business, or None where none survives.

    Above ``rho`` everyone attends and the rating tracks alpha.  Between
    ``1 - rho`` and ``rho`` only positive-signal consumers attend, so the
    rating settles at the attendees' like rate, capped at ``rho``.
    """
    if not 0.5 < rho <= 1.0:
        raise ValueError(f"rho must lie in (0.5, 1], got {rho}")
    if alpha > rho:
        return alpha
    if alpha < 1.0 - rho:
        return None
    selected = alpha * rho / (alpha * rho + (1.0 - alpha) * (1.0 - rho))
    return min(selected, rho)
