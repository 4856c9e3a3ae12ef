"""The sequential rating game for a single business.

Consumers arrive in order.  Each one has a type ``v`` (likes the business or
not, Bernoulli(alpha)) and a private signal ``x`` that matches the type with
probability ``rho``.  Readers see the current average rating and act on it as
an estimate of alpha; non-readers follow their signal.  Attendees reveal ``v``
and it is folded into the rating.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import ParameterError
from .rng import Stream, StreamBatch, bernoulli

__all__ = [
    "TIE_EPS",
    "GameParams",
    "ConsumerDraw",
    "RatingState",
    "ConsumerRecord",
    "SimSummary",
    "BatchResult",
    "exceeds",
    "sample_consumer",
    "decide_reader",
    "decide_nonreader",
    "expected_utility",
    "optimal_action_bayes",
    "update_rating",
    "rating",
    "is_dead",
    "run_game",
    "run_batch",
]

# Ratings and thresholds closer than this are treated as equal.  Ratings are
# ratios of small integers, so a genuine gap is many orders larger; the slack
# only absorbs decimal-to-binary error (1 - 0.8 == 0.19999999999999996).
TIE_EPS = 1e-12


def exceeds(value, threshold):
    """Strict ``value > threshold`` with ties inside :data:`TIE_EPS` counted as equal.

    Works elementwise on numpy arrays.
    """
    return (value - threshold) > TIE_EPS


@dataclass(frozen=True)
class GameParams:
    alpha: float
    rho: float
    horizon: int = 1000
    reader_fraction: float = 1.0
    init_rating: float = 0.5
    init_weight: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ParameterError(f"alpha must lie in [0, 1], got {self.alpha}", "alpha")
        if not 0.5 < self.rho <= 1.0:
            raise ParameterError(f"rho must lie in (0.5, 1], got {self.rho}", "rho")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ParameterError(f"horizon must be a positive integer, got {self.horizon}", "horizon")
        if not 0.0 <= self.reader_fraction <= 1.0:
            raise ParameterError(f"reader_fraction must lie in [0, 1], got {self.reader_fraction}", "reader_fraction")
        if not 0.0 <= self.init_rating <= 1.0:
            raise ParameterError(f"init_rating must lie in [0, 1], got {self.init_rating}", "init_rating")
        if not self.init_weight >= 0.0:
            raise ParameterError(f"init_weight must be nonnegative, got {self.init_weight}", "init_weight")

    @property
    def all_readers(self) -> bool:
        return self.reader_fraction >= 1.0

    @property
    def draws_per_consumer(self) -> int:
        return 2 if self.all_readers else 3


@dataclass(frozen=True)
class ConsumerDraw:
    is_reader: int
    v: int
    x: int


@dataclass(frozen=True)
class RatingState:
    visits: int = 0
    likes: int = 0

    def rating(self, params: GameParams) -> float:
        return rating(self.visits, self.likes, params)


@dataclass(frozen=True)
class ConsumerRecord:
    index: int
    is_reader: int
    x: int
    attended: int
    v: Optional[int]
    visits: int
    likes: int
    rating_after: float


@dataclass
class SimSummary:
    final_rating: float
    dead: int
    death_index: Optional[int]
    attendance: int
    trace: Optional[List[ConsumerRecord]] = field(default=None, repr=False)


def rating(visits, likes, params: GameParams):
    """Pseudo-count average ``(w * r0 + likes) / (w + visits)``.

    With no weight and no visits the placeholder ``init_rating`` is returned.
    Accepts scalars or numpy arrays.
    """
    w = params.init_weight
    if isinstance(visits, np.ndarray):
        denom = w + visits
        safe = np.where(denom > 0, denom, 1.0)
        # Unreachable cells (likes > visits) in DP tables may overflow for tiny w.
        with np.errstate(over="ignore", invalid="ignore"):
            value = (w * params.init_rating + likes) / safe
        return np.where(denom > 0, value, params.init_rating)
    if w == 0 and visits == 0:
        return params.init_rating
    return (w * params.init_rating + likes) / (w + visits)


def sample_consumer(params: GameParams, stream: Stream) -> ConsumerDraw:
    """Draw (is_reader, v, x) in that fixed order.

    is_reader is only drawn when some consumers do not read, so a consumer
    costs exactly 2 draws when ``reader_fraction == 1`` and 3 otherwise.
    """
    is_reader = 1 if params.all_readers else bernoulli(stream, params.reader_fraction)
    v = bernoulli(stream, params.alpha)
    rho = params.rho
    x = bernoulli(stream, rho * v + (1.0 - rho) * (1 - v))
    return ConsumerDraw(is_reader, v, x)


def decide_reader(x: int, rating_value: float, rho: float) -> int:
    """Attend iff (x=1 and rating > 1-rho) or (x=0 and rating > rho)."""
    if x:
        return int(exceeds(rating_value, 1.0 - rho))
    return int(exceeds(rating_value, rho))


def decide_nonreader(x: int) -> int:
    return int(x)


def expected_utility(a: int, x: int, alpha_est: float, rho: float) -> float:
    """Unnormalized posterior expected payoff of action ``a`` given signal ``x``.

    Sums ``u(a, q) * P(v=q) * P(x | v=q)`` over types q, with payoff +1 for
    attending and liking, -1 for attending and disliking, 0 for staying home.
    """
    total = 0.0
    for q in (0, 1):
        u = (1.0 if q else -1.0) if a else 0.0
        prior = alpha_est if q else 1.0 - alpha_est
        match = rho if x == q else 1.0 - rho
        total += u * prior * match
    return total


def optimal_action_bayes(x: int, alpha_est: float, rho: float) -> int:
    """Argmax of :func:`expected_utility` over actions, ties to staying home."""
    gain = expected_utility(1, x, alpha_est, rho) - expected_utility(0, x, alpha_est, rho)
    return int(gain > TIE_EPS)


def update_rating(state: RatingState, v: int) -> RatingState:
    return RatingState(state.visits + 1, state.likes + int(v))


def is_dead(rating_value, rho: float):
    """Dead iff the rating is at or below ``1 - rho``; vectorizes over arrays."""
    alive = exceeds(rating_value, 1.0 - rho)
    if isinstance(alive, np.ndarray):
        return ~alive
    return int(not alive)


def run_game(params: GameParams, stream: Stream, keep_trace: bool = False) -> SimSummary:
    """Simulate consumers ``1..horizon`` for one business.

    ``death_index`` is the first consumer after whose move the business is
    dead, or 0 if it is dead before anyone arrives.  ``dead`` reports the
    state at the horizon; with non-readers a business can recover.
    """
    state = RatingState()
    current = state.rating(params)
    death_index = 0 if is_dead(current, params.rho) else None
    attendance = 0
    trace = [] if keep_trace else None
    for i in range(1, params.horizon + 1):
        draw = sample_consumer(params, stream)
        if draw.is_reader:
            attended = decide_reader(draw.x, current, params.rho)
        else:
            attended = decide_nonreader(draw.x)
        if attended:
            state = update_rating(state, draw.v)
            current = state.rating(params)
            attendance += 1
        if death_index is None and is_dead(current, params.rho):
            death_index = i
        if keep_trace:
            trace.append(
                ConsumerRecord(
                    index=i,
                    is_reader=draw.is_reader,
                    x=draw.x,
                    attended=attended,
                    v=draw.v if attended else None,
                    visits=state.visits,
                    likes=state.likes,
                    rating_after=current,
                )
            )
    return SimSummary(
        final_rating=current,
        dead=is_dead(current, params.rho),
        death_index=death_index,
        attendance=attendance,
        trace=trace,
    )


@dataclass
class BatchResult:
    """Per-trial outcomes of :func:`run_batch`.

    ``death_index`` is -1 where the business never died.  ``checkpoint_ratings``
    has shape (trials, len(checkpoints)) when checkpoints were requested.
    """

    visits: np.ndarray
    likes: np.ndarray
    final_rating: np.ndarray
    dead: np.ndarray
    death_index: np.ndarray
    attendance: np.ndarray
    checkpoints: tuple = ()
    checkpoint_ratings: Optional[np.ndarray] = None


def run_batch(params: GameParams, streams: StreamBatch, checkpoints=()) -> BatchResult:
    """Run one game per stream in lockstep; element k matches :func:`run_game`."""
    n = len(streams)
    rho = params.rho
    visits = np.zeros(n, dtype=np.int64)
    likes = np.zeros(n, dtype=np.int64)
    current = np.full(n, float(rating(0, 0, params)))
    death_index = np.where(is_dead(current, rho), 0, -1).astype(np.int64)
    checkpoints = tuple(int(c) for c in checkpoints)
    cp_lookup = {c: k for k, c in enumerate(checkpoints)}
    cp_ratings = np.empty((n, len(checkpoints))) if checkpoints else None
    if 0 in cp_lookup:
        cp_ratings[:, cp_lookup[0]] = current

    for i in range(1, params.horizon + 1):
        if params.all_readers:
            is_reader = None
        else:
            is_reader = streams.bernoulli(params.reader_fraction)
        v = streams.bernoulli(params.alpha)
        x = streams.bernoulli(np.where(v, rho, 1.0 - rho))
        reader_go = np.where(x, exceeds(current, 1.0 - rho), exceeds(current, rho))
        attended = reader_go if is_reader is None else np.where(is_reader, reader_go, x)
        if attended.any():
            visits += attended
            likes += attended & v
            current = np.where(attended, rating(visits, likes, params), current)
        newly_dead = (death_index < 0) & is_dead(current, rho)
        death_index[newly_dead] = i
        if i in cp_lookup:
            cp_ratings[:, cp_lookup[i]] = current

    return BatchResult(
        visits=visits,
        likes=likes,
        final_rating=current,
        dead=is_dead(current, rho),
        death_index=death_index,
        attendance=visits.copy(),
        checkpoints=checkpoints,
        checkpoint_ratings=cp_ratings,
    )
