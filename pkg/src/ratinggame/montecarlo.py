"""Trial-averaged estimates and (alpha, rho) grid sweeps.

Trial ``t`` of grid cell ``(i, j)`` always draws from the stream labelled
``[i, j, t]``, so a sweep gives the same matrix whatever the worker count or
cell order.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import EmptyConditionError, ParameterError
from .model import GameParams, is_dead, run_batch
from .rng import SeedSpec, derive_batch

__all__ = [
    "Metric",
    "GridSpec",
    "GridResult",
    "CellError",
    "Trajectory",
    "colon_range",
    "estimate_metric",
    "sweep",
    "trajectory",
    "monotonicity_violations",
]


class Metric(str, Enum):
    DEATH_PROBABILITY = "death_probability"
    MEAN_FINAL_RATING = "mean_final_rating"
    MEAN_BIAS = "mean_bias"
    SURVIVAL_CONDITIONAL_RATING = "survival_conditional_rating"


def colon_range(start: float, stop: float, step: float) -> np.ndarray:
    """Values ``start, start + step, ...`` not exceeding ``stop``.

    Endpoints are rounded to 12 decimals so that 0.07 prints as 0.07 rather
    than 0.07000000000000001.
    """
    if step <= 0:
        if start == stop:
            return np.array([float(start)])
        raise ParameterError(f"step must be positive, got {step}", "step")
    if stop < start:
        raise ParameterError(f"stop {stop} is below start {start}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(count), 12)


@dataclass(frozen=True)
class GridSpec:
    alpha_start: float = 0.0
    alpha_stop: float = 1.0
    alpha_step: float = 0.01
    rho_start: float = 0.500001
    rho_stop: float = 1.0
    rho_step: float = 0.01
    trials: int = 1000
    horizon: int = 1000
    reader_fraction: float = 1.0
    metric: Metric = Metric.DEATH_PROBABILITY
    init_rating: float = 0.5
    init_weight: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "metric", Metric(self.metric))
        if self.trials < 1:
            raise ParameterError(f"trials must be at least 1, got {self.trials}", "trials")
        if self.horizon < 1:
            raise ParameterError(f"horizon must be at least 1, got {self.horizon}", "horizon")

    @property
    def alphas(self) -> np.ndarray:
        return colon_range(self.alpha_start, self.alpha_stop, self.alpha_step)

    @property
    def rhos(self) -> np.ndarray:
        return colon_range(self.rho_start, self.rho_stop, self.rho_step)

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.alphas), len(self.rhos)

    def params(self, alpha: float, rho: float) -> GameParams:
        return GameParams(
            alpha=float(alpha),
            rho=float(rho),
            horizon=self.horizon,
            reader_fraction=self.reader_fraction,
            init_rating=self.init_rating,
            init_weight=self.init_weight,
        )

    def to_dict(self) -> dict:
        out = asdict(self)
        out["metric"] = self.metric.value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "GridSpec":
        return cls(**data)


@dataclass(frozen=True)
class CellError:
    alpha_index: int
    rho_index: int
    message: str


@dataclass
class GridResult:
    spec: GridSpec
    matrix: np.ndarray
    stderr: np.ndarray
    master_seed: int
    errors: List[CellError] = field(default_factory=list)

    def __eq__(self, other):
        if not isinstance(other, GridResult):
            return NotImplemented
        return (
            self.spec == other.spec
            and self.master_seed == other.master_seed
            and self.errors == other.errors
            and np.array_equal(self.matrix, other.matrix, equal_nan=True)
            and np.array_equal(self.stderr, other.stderr, equal_nan=True)
        )


def _summarize(values: np.ndarray) -> Tuple[float, float]:
    n = len(values)
    mean = float(np.mean(values))
    return mean, float(np.std(values) / math.sqrt(n))


def estimate_metric(
    params: GameParams,
    trials: int,
    metric: Metric | str,
    seed: SeedSpec | int = 1,
    labels: Sequence[int] = (),
) -> Tuple[float, float]:
    """Sample mean and standard error of ``metric`` over ``trials`` games.

    Trial ``t`` uses the stream ``labels + [t]``.  The standard error uses the
    population standard deviation, so Bernoulli metrics stay within
    ``0.5 / sqrt(trials)``.
    """
    metric = Metric(metric)
    if trials < 1:
        raise ParameterError(f"trials must be at least 1, got {trials}", "trials")
    batch = run_batch(params, derive_batch(seed, labels, trials))
    if metric is Metric.DEATH_PROBABILITY:
        return _summarize(batch.dead.astype(np.float64))
    if metric is Metric.MEAN_FINAL_RATING:
        return _summarize(batch.final_rating)
    if metric is Metric.MEAN_BIAS:
        return _summarize(batch.final_rating - params.alpha)
    survivors = batch.final_rating[~batch.dead]
    if len(survivors) == 0:
        raise EmptyConditionError(
            f"no surviving trials out of {trials} at alpha={params.alpha}, rho={params.rho}",
            survivors=0,
        )
    return _summarize(survivors)


def _cell(args):
    spec, seed, i, j, alpha, rho = args
    try:
        est, se = estimate_metric(spec.params(alpha, rho), spec.trials, spec.metric, seed, (i, j))
        return i, j, est, se, None
    except (EmptyConditionError, ParameterError) as exc:
        return i, j, math.nan, math.nan, str(exc)


def sweep(spec: GridSpec, seed: SeedSpec | int = 1, workers: int = 1) -> GridResult:
    """Evaluate ``spec.metric`` on every (alpha, rho) cell.

    A cell that cannot be evaluated (e.g. no survivors for the conditional
    metric) is left as NaN and listed in ``errors``; the rest of the grid is
    still filled.
    """
    master = seed.master_seed if isinstance(seed, SeedSpec) else SeedSpec(seed).master_seed
    alphas, rhos = spec.alphas, spec.rhos
    matrix = np.full((len(alphas), len(rhos)), np.nan)
    stderr = np.full_like(matrix, np.nan)
    jobs = [(spec, master, i, j, a, r) for i, a in enumerate(alphas) for j, r in enumerate(rhos)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_cell(job) for job in jobs]
    errors = []
    for i, j, est, se, err in results:
        matrix[i, j] = est
        stderr[i, j] = se
        if err is not None:
            errors.append(CellError(i, j, err))
    return GridResult(spec=spec, matrix=matrix, stderr=stderr, master_seed=master, errors=errors)


def monotonicity_violations(result: GridResult, k: float = 3.0) -> List[Tuple[int, int]]:
    """Adjacent alpha pairs where death probability rises by more than ``k`` combined stderr.

    Returns ``(alpha_index, rho_index)`` of the lower cell of each offending pair.
    """
    m, s = result.matrix, result.stderr
    bad = []
    for j in range(m.shape[1]):
        for i in range(m.shape[0] - 1):
            rise = m[i + 1, j] - m[i, j]
            if rise > k * math.hypot(s[i, j], s[i + 1, j]):
                bad.append((i, j))
    return bad


@dataclass
class Trajectory:
    """Ratings at checkpoints: per-trial matrix plus cross-trial summaries.

    ``survivor_mean`` is NaN at checkpoints where every trial is dead.
    """

    params: GameParams
    checkpoints: Tuple[int, ...]
    ratings: np.ndarray
    dead: np.ndarray
    mean: np.ndarray
    survivor_mean: np.ndarray
    survivors: np.ndarray


def trajectory(
    params: GameParams,
    trials: int,
    checkpoints: Sequence[int],
    seed: SeedSpec | int = 1,
    labels: Sequence[int] = (),
) -> Trajectory:
    checkpoints = tuple(int(c) for c in checkpoints)
    if list(checkpoints) != sorted(checkpoints):
        raise ParameterError("checkpoints must be sorted")
    if checkpoints and (checkpoints[0] < 0 or checkpoints[-1] > params.horizon):
        raise ParameterError(f"checkpoints must lie in [0, {params.horizon}]", "checkpoints")
    batch = run_batch(params, derive_batch(seed, labels, trials), checkpoints)
    ratings = batch.checkpoint_ratings
    dead = is_dead(ratings, params.rho)
    alive_counts = (~dead).sum(axis=0)
    with np.errstate(invalid="ignore"):
        survivor_mean = np.where(~dead, ratings, 0.0).sum(axis=0) / alive_counts
    return Trajectory(
        params=params,
        checkpoints=checkpoints,
        ratings=ratings,
        dead=dead,
        mean=ratings.mean(axis=0),
        survivor_mean=np.where(alive_counts > 0, survivor_mean, np.nan),
        survivors=alive_counts,
    )
