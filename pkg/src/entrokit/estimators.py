"""
Kernel-type estimators of differential entropy.

plug-in integral
    -int_{A_n} f_hat log f_hat over the level set A_n = {f_hat >= gamma_n},
    computed as a Riemann sum over grid cells (a cell belongs to A_n when
    its node value reaches the threshold).
resubstitution
    -(1/n) sum_i 1{f_hat(X_i) >= gamma_n} log f_hat(X_i).
leave-one-out
    -(1/n) sum_i log f_hat_{-i}(X_i), without a threshold.

Terms excluded by the threshold contribute exactly zero (0 log 0 = 0).  All
sums use ``math.fsum`` so results do not depend on summation order.

The centering factors recompute the same functionals with the smoothed
density E f_hat = K_h * f of a known model in place of f_hat; deviations from
them are what the uniform-in-bandwidth bounds control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .density import (
    DensityEstimate,
    EvaluationGrid,
    kde_eval_grid,
    smoothed_density,
)
from .errors import DomainError, IsolatedPointsError, NumericalError
from .kernels import KernelSpec

__all__ = [
    "EntropyEstimate",
    "EstimatorKind",
    "ThresholdSchedule",
    "centering_plugin",
    "centering_resub",
    "entropy_leave_one_out",
    "entropy_plugin",
    "entropy_resubstitution",
    "gamma_at",
    "level_set_mask",
    "plugin_from_values",
    "resubstitution_from_values",
]

EMPTY_LEVEL_SET = "empty_level_set"
COARSE_GRID = "coarse_grid"


class EstimatorKind(str, Enum):
    PLUGIN = "plugin_integral"
    RESUBSTITUTION = "resubstitution"
    LEAVE_ONE_OUT = "leave_one_out"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ThresholdSchedule:
    """gamma_n = beta (log n)^(-alpha)."""

    beta: float = 0.25
    alpha: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        if not self.alpha >= 0:
            raise DomainError(f"alpha must be nonnegative, got {self.alpha}")

    def __call__(self, n: int) -> float:
        return gamma_at(self, n)

    @classmethod
    def for_model(cls, model, beta: float = 0.25) -> "ThresholdSchedule":
        """Constant threshold for densities bounded away from zero, 1/log n decay otherwise."""
        return cls(beta, 0.0 if model.bounded_away_from_zero else 1.0)


def gamma_at(schedule: ThresholdSchedule, n: int) -> float:
    if n < 3:
        raise DomainError(f"threshold schedule needs n >= 3, got {n}")
    return schedule.beta * math.log(n) ** (-schedule.alpha)


@dataclass(frozen=True)
class EntropyEstimate:
    """An entropy estimate in nats.

    ``excluded_fraction`` is the mass (plug-in) or share of observations
    (resubstitution) below the threshold.  ``gamma`` is 0 for the
    leave-one-out estimator, which uses no threshold.
    """

    value: float
    kind: EstimatorKind
    n: int
    bandwidth: float
    gamma: float
    excluded_fraction: float
    flags: tuple[str, ...] = ()

    @property
    def bits(self) -> float:
        return self.value / math.log(2.0)


def level_set_mask(values, gamma: float) -> np.ndarray:
    return np.asarray(values) >= gamma


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not gamma > 0 or not math.isfinite(gamma):
        raise DomainError(f"threshold gamma must be positive and finite, got {gamma}")
    return gamma


def plugin_from_values(values, cell_volume: float, gamma: float) -> tuple[float, float, np.ndarray]:
    """(value, excluded mass, A_n mask) from density values on grid nodes."""
    values = np.asarray(values, dtype=float)
    mask = level_set_mask(values, gamma)
    kept = values[mask]
    value = -math.fsum(kept * np.log(kept) * cell_volume) if kept.size else 0.0
    excluded = math.fsum(values[~mask] * cell_volume)
    return value, min(max(excluded, 0.0), 1.0), mask


def entropy_plugin(
    est: DensityEstimate, gamma: float, grid: EvaluationGrid | None = None
) -> EntropyEstimate:
    """Thresholded plug-in integral estimate.

    Without a ``grid`` the data range padded by the kernel reach is used at
    the default resolution.  Flags ``coarse_grid`` when the cell diameter
    exceeds h/2 and ``empty_level_set`` when no node reaches ``gamma``.
    """
    gamma = _check_gamma(gamma)
    if grid is None:
        grid = EvaluationGrid.covering(est.data, est.kernel, est.bandwidth)
    values = kde_eval_grid(est, grid)
    value, excluded, mask = plugin_from_values(values, grid.cell_volume, gamma)
    flags = []
    if grid.cell_diameter > est.bandwidth / 2:
        flags.append(COARSE_GRID)
    if not mask.any():
        flags.append(EMPTY_LEVEL_SET)
        value, excluded = 0.0, 1.0
    return EntropyEstimate(value, EstimatorKind.PLUGIN, est.n, est.bandwidth, gamma, excluded, tuple(flags))


def resubstitution_from_values(values, gamma: float) -> tuple[float, float, np.ndarray]:
    values = np.asarray(values, dtype=float)
    mask = level_set_mask(values, gamma)
    n = values.size
    value = -math.fsum(np.log(values[mask])) / n if mask.any() else 0.0
    return value, float(n - int(mask.sum())) / n, mask


def entropy_resubstitution(est: DensityEstimate, gamma: float) -> EntropyEstimate:
    """Thresholded resubstitution estimate; flags ``empty_level_set`` if every point is cut."""
    gamma = _check_gamma(gamma)
    value, excluded, mask = resubstitution_from_values(est.at_observations(), gamma)
    flags = () if mask.any() else (EMPTY_LEVEL_SET,)
    return EntropyEstimate(
        value, EstimatorKind.RESUBSTITUTION, est.n, est.bandwidth, gamma, excluded, flags
    )


def entropy_leave_one_out(data, kernel: KernelSpec, h: float) -> EntropyEstimate:
    """Leave-one-out resubstitution estimate.

    Raises :class:`IsolatedPointsError` naming the rows whose leave-one-out
    density is not positive (for instance an observation with no neighbour
    inside a compact kernel window).
    """
    est = DensityEstimate(data, kernel, h)
    if est.n < 2:
        raise DomainError("leave-one-out needs at least two observations")
    values = est.at_observations(leave_one_out=True)
    bad = values <= 0
    if bad.any():
        raise IsolatedPointsError(np.sort(est.sort_order[bad]))
    value = -math.fsum(np.log(values)) / est.n
    return EntropyEstimate(value, EstimatorKind.LEAVE_ONE_OUT, est.n, est.bandwidth, 0.0, 0.0)


def centering_plugin(
    model,
    kernel: KernelSpec,
    h: float,
    gamma: float,
    An_mask,
    grid: EvaluationGrid,
) -> float:
    """-sum over cells in ``An_mask`` of Ef log Ef times the cell volume.

    ``An_mask`` is the level set realised by an estimate on the same grid.
    Cells where the smoothed density is not positive contribute zero.
    """
    _check_gamma(gamma)
    mask = np.asarray(An_mask, dtype=bool).ravel()
    if mask.size != grid.size:
        raise DomainError(f"mask has {mask.size} cells but the grid has {grid.size}")
    if not mask.any():
        return 0.0
    ef = smoothed_density(model, kernel, h, grid.points()[mask])
    ef = ef[ef > 0]
    return -math.fsum(ef * np.log(ef) * grid.cell_volume)


def centering_resub(
    model,
    kernel: KernelSpec,
    h: float,
    est: DensityEstimate,
    gamma: float,
    conditional: bool = False,
    fhat=None,
) -> float:
    """(1/n) sum_i 1{f_hat(X_i) >= gamma} log E f_hat(X_i).

    The value is minus an entropy (no leading minus sign), so the
    resubstitution deviation is ``H2 + centering_resub``.
    ``conditional`` adds the self term, giving E(f_hat(x) | X_i = x).
    ``fhat`` may pass ``est.at_observations()`` when already computed.
    """
    gamma = _check_gamma(gamma)
    if fhat is None:
        fhat = est.at_observations()
    mask = level_set_mask(fhat, gamma)
    if not mask.any():
        return 0.0
    ef = smoothed_density(model, kernel, h, est.sorted_observations[mask])
    if conditional:
        ef = kernel.value_at_zero / est.norm + (est.n - 1) / est.n * ef
    if np.any(ef <= 0):
        raise NumericalError("smoothed density is not positive at an observation in the level set")
    return math.fsum(np.log(ef)) / est.n
