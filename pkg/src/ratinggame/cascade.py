"""Information-cascade benchmark with a common value and observed actions.

Everyone shares one value ``v_true``; consumer ``i`` sees the attend/avoid
choices of all predecessors plus a private signal that matches ``v_true`` with
probability ``rho``.  Each consumer acts on the exact posterior, and an
indifferent consumer follows their own signal.

Indifference is detected exactly rather than up to rounding.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

from .errors import ParameterError
from .rng import SeedSpec, Stream, bernoulli, derive_stream

__all__ = [
    "CascadeKind",
    "CascadeParams",
    "CascadeSummary",
    "bayes_action",
    "draw_signals",
    "replay_cascade",
    "run_cascade",
    "cascade_onset_probabilities",
    "onset_frequencies",
]


class CascadeKind(str, Enum):
    CORRECT = "correct"
    INCORRECT = "incorrect"
    NONE = "none"


@dataclass(frozen=True)
class CascadeParams:
    rho: float
    v_true: int = 1
    horizon: int = 20

    def __post_init__(self):
        if not 0.5 < self.rho <= 1.0:
            raise ParameterError(f"rho must lie in (0.5, 1], got {self.rho}", "rho")
        if self.v_true not in (0, 1):
            raise ParameterError(f"v_true must be 0 or 1, got {self.v_true}", "v_true")
        if self.horizon < 1:
            raise ParameterError(f"horizon must be at least 1, got {self.horizon}", "horizon")


@dataclass
class CascadeSummary:
    onset_index: Optional[int]
    kind: CascadeKind
    actions: List[int]
    signals: List[int]
    signal_independent: List[bool]


# Every history likelihood here is a monomial rho**m * (1 - rho)**n: an action
# either reveals the signal (one factor) or not (factor rho + (1 - rho) = 1).
# Likelihoods are carried as exponent pairs and compared exactly.


@lru_cache(maxsize=65536)
def _compare(rho: float, m1: int, n1: int, m0: int, n0: int) -> int:
    """Sign of ``rho**m1 (1-rho)**n1 - rho**m0 (1-rho)**n0``, exactly."""
    r = Fraction(rho)
    lhs = r**m1 * (1 - r) ** n1
    rhs = r**m0 * (1 - r) ** n0
    return (lhs > rhs) - (lhs < rhs)


def _with_signal(lik: Tuple[int, int], x: int, v: int) -> Tuple[int, int]:
    m, n = lik
    return (m + 1, n) if x == v else (m, n + 1)


def bayes_action(x: int, lik1: Tuple[int, int], lik0: Tuple[int, int], rho: float) -> int:
    """Attend iff the posterior favours ``v = 1``; follow ``x`` when indifferent.

    ``lik1`` and ``lik0`` are exponent pairs ``(m, n)`` of the history
    likelihood ``rho**m * (1 - rho)**n`` under ``v = 1`` and ``v = 0``.  The
    prior is one half and attending pays +1 or -1, so the action only depends
    on which joint likelihood is larger.
    """
    sign = _compare(rho, *_with_signal(lik1, x, 1), *_with_signal(lik0, x, 0))
    if sign == 0:
        return x
    return int(sign > 0)


def _observe(lik: Tuple[int, int], v: int, choice: dict, a: int) -> Tuple[int, int]:
    # P(a | v, history) sums P(x | v) over the signals that lead to a.
    revealing = [s for s in (0, 1) if choice[s] == a]
    if len(revealing) == 2:
        return lik
    return _with_signal(lik, revealing[0], v)


def replay_cascade(params: CascadeParams, signals: Sequence[int]) -> CascadeSummary:
    """Deterministic play given the full signal sequence.

    A consumer is signal-independent when both signal values lead to the same
    action.  The onset is the first consumer from which every later consumer
    is signal-independent.
    """
    rho = params.rho
    lik1, lik0 = (0, 0), (0, 0)
    actions, independent = [], []
    for x in signals:
        choice = {s: bayes_action(s, lik1, lik0, rho) for s in (0, 1)}
        a = choice[x]
        actions.append(a)
        independent.append(choice[0] == choice[1])
        lik1 = _observe(lik1, 1, choice, a)
        lik0 = _observe(lik0, 0, choice, a)

    onset = None
    for i in range(len(signals), 0, -1):
        if not independent[i - 1]:
            break
        onset = i
    if onset is None:
        kind = CascadeKind.NONE
    elif actions[onset - 1] == params.v_true:
        kind = CascadeKind.CORRECT
    else:
        kind = CascadeKind.INCORRECT
    return CascadeSummary(onset, kind, actions, list(signals), independent)


def draw_signals(params: CascadeParams, stream: Stream) -> List[int]:
    p = params.rho if params.v_true else 1.0 - params.rho
    return [bernoulli(stream, p) for _ in range(params.horizon)]


def run_cascade(params: CascadeParams, stream: Stream, verify: bool = True) -> CascadeSummary:
    """Draw one signal per consumer from ``stream`` and play the cascade.

    With ``verify``, every post-onset signal is flipped in turn and the replay
    must reproduce the same actions.
    """
    summary = replay_cascade(params, draw_signals(params, stream))
    if verify and summary.onset_index is not None:
        check_post_onset_flips(params, summary)
    return summary


def check_post_onset_flips(params: CascadeParams, summary: CascadeSummary) -> None:
    """Raise AssertionError if flipping any post-onset signal changes an action."""
    for j in range(summary.onset_index - 1, len(summary.signals)):
        flipped = list(summary.signals)
        flipped[j] ^= 1
        if replay_cascade(params, flipped).actions != summary.actions:
            raise AssertionError(f"action changed after flipping signal {j + 1} past onset {summary.onset_index}")


def cascade_onset_probabilities(rho: float) -> Tuple[float, float]:
    """Probabilities of a correct and an incorrect cascade starting at consumer 3.

    Assumes ``v_true = 1``: two agreeing signals start a cascade, correct with
    probability ``rho**2`` and incorrect with ``(1 - rho)**2``.
    """
    if not 0.5 < rho <= 1.0:
        raise ParameterError(f"rho must lie in (0.5, 1], got {rho}", "rho")
    return rho * rho, (1.0 - rho) ** 2


def onset_frequencies(
    params: CascadeParams, runs: int, seed: SeedSpec | int = 1, by: int = 3, verify: bool = False
) -> dict:
    """Empirical frequency of a correct / incorrect / no cascade starting by consumer ``by``."""
    counts = {kind: 0 for kind in CascadeKind}
    for t in range(runs):
        summary = run_cascade(params, derive_stream(seed, (t,)), verify)
        if summary.onset_index is not None and summary.onset_index <= by:
            counts[summary.kind] += 1
        else:
            counts[CascadeKind.NONE] += 1
    return {kind.value: count / runs for kind, count in counts.items()}
