"""
Simulation harness for uniform-in-bandwidth behaviour.

A sweep draws one sample per ``(n, seed)``, evaluates the requested
estimators at every bandwidth of a geometric grid and records, per row, the
estimate, its centering, the raw and normalised deviations, the error against
the true entropy and (for the plug-in estimator) the certainty interval.

Almost-sure ``limsup`` statements cannot be checked at finite n.  The
harness reduces them to medians over seeds of per-replicate suprema over the
bandwidth grid, compared along a ladder of sample sizes.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .density import (
    DensityEstimate,
    EvaluationGrid,
    default_points_per_axis,
    kde_eval_grid,
    smoothed_density,
)
from .errors import DomainError, EntrokitError
from .estimators import (
    EstimatorKind,
    ThresholdSchedule,
    centering_plugin,
    centering_resub,
    entropy_leave_one_out,
    plugin_from_values,
    resubstitution_from_values,
)
from .kernels import KernelSpec
from .models import DistributionModel, sample

__all__ = [
    "BandwidthGrid",
    "BandwidthRule",
    "BiasProbe",
    "CertaintyInterval",
    "CoverageResult",
    "SweepReport",
    "SweepRow",
    "bandwidth_grid",
    "bias_probe",
    "certainty_interval",
    "coverage_experiment",
    "deviation_statistic",
    "limit_constants",
    "support_estimate",
    "sweep",
    "worker_count",
]

log = logging.getLogger(__name__)

_EXPONENT = {
    EstimatorKind.PLUGIN: 4,
    EstimatorKind.RESUBSTITUTION: 2,
    EstimatorKind.LEAVE_ONE_OUT: 2,
}


def worker_count() -> int:
    """Worker cap from ``ENTROKIT_THREADS`` (default 1)."""
    raw = os.environ.get("ENTROKIT_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# bandwidth grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BandwidthGrid:
    h_lower: float
    h_upper: float
    count: int
    spacing: str = "geometric"

    def __post_init__(self):
        if not 0 < self.h_lower < self.h_upper <= 1:
            raise DomainError(
                f"bandwidth grid needs 0 < h_lower < h_upper <= 1, got {self.h_lower}, {self.h_upper}"
            )
        if self.count < 2:
            raise DomainError(f"bandwidth grid needs count >= 2, got {self.count}")
        if self.spacing != "geometric":
            raise DomainError(f"unsupported spacing {self.spacing!r}")

    @property
    def values(self) -> np.ndarray:
        return np.geomspace(self.h_lower, self.h_upper, self.count)


def bandwidth_grid(n: int, A: float, B: float, delta: float, count: int, d: int = 1) -> BandwidthGrid:
    """Geometric grid on [A n^-delta, B n^-delta], clipped to (0, 1]."""
    if not 0 < A < B:
        raise DomainError(f"need 0 < A < B, got A={A}, B={B}")
    if not (1.0 / (d + 4) - 1e-12 <= delta < 1):
        raise DomainError(f"delta must lie in [1/(d+4), 1) = [{1 / (d + 4):.4g}, 1), got {delta}")
    if count < 2:
        raise DomainError(f"count must be >= 2, got {count}")
    lo = A * n ** (-delta)
    hi = min(B * n ** (-delta), 1.0)
    if lo >= hi:
        raise DomainError(f"bandwidth range [{lo:.4g}, {B * n ** (-delta):.4g}] is empty after clipping to (0, 1]")
    if n > math.e and abs(math.log(hi)) < math.log(math.log(n)):
        log.warning(
            "upper bandwidth %.4g is large relative to log log n (|log h''| / log log n = %.3g); "
            "the consistency condition is asymptotic and not met at this n",
            hi,
            abs(math.log(hi)) / math.log(math.log(n)),
        )
    return BandwidthGrid(lo, hi, int(count))


@dataclass(frozen=True)
class BandwidthRule:
    """Per-n bandwidth grids ``bandwidth_grid(n, A, B, delta, count, d)``."""

    A: float = 0.5
    B: float = 2.0
    delta: float = 0.2
    count: int = 16
    d: int = 1

    def __call__(self, n: int) -> BandwidthGrid:
        return bandwidth_grid(n, self.A, self.B, self.delta, self.count, self.d)


# ---------------------------------------------------------------------------
# normalised deviations and certainty intervals
# ---------------------------------------------------------------------------


def _rate_log(n: int, h: float, denominator: str) -> float:
    if n <= math.e**math.e:
        raise DomainError(f"normalisation needs n > e^e (about 15.2), got n={n}")
    if denominator == "max_loglog":
        return max(math.log(1.0 / h), math.log(math.log(n)))
    if denominator == "two_log":
        if h >= 1:
            raise DomainError("the 2 log(1/h) denominator needs h < 1")
        return 2.0 * math.log(1.0 / h)
    raise DomainError(f"unknown denominator {denominator!r}")


def deviation_statistic(
    kind,
    n: int,
    h: float,
    gamma: float,
    estimate: float,
    centering: float,
    denominator: str = "max_loglog",
) -> float:
    """sqrt(n h gamma^p) |estimate - centering| / sqrt(L).

    p = 4 for the plug-in estimator and 2 for resubstitution.  ``L`` is
    ``log(1/h) v log log n`` by default or ``2 log(1/h)`` with
    ``denominator="two_log"``.
    """
    kind = EstimatorKind(kind)
    if not (h > 0 and gamma > 0):
        raise DomainError("h and gamma must be positive")
    scale = math.sqrt(n * h * gamma ** _EXPONENT[kind])
    return scale * abs(estimate - centering) / math.sqrt(_rate_log(n, h, denominator))


@dataclass(frozen=True)
class CertaintyInterval:
    center: float
    half_width: float
    zeta_hat: float
    h: float
    n: int
    gamma: float

    @property
    def lower(self) -> float:
        return self.center - self.half_width

    @property
    def upper(self) -> float:
        return self.center + self.half_width

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def support_estimate(data, model: DistributionModel | None = None):
    """Data range shrunk by 1/log n per side (at most a quarter of the range),
    intersected with the model support."""
    obs = np.asarray(getattr(data, "observations", data), dtype=float)
    if obs.ndim == 1:
        obs = obs[:, None]
    n = obs.shape[0]
    lo, hi = obs.min(axis=0), obs.max(axis=0)
    # capped so that small samples keep a nonempty box
    shrink = np.minimum(1.0 / math.log(n) if n > 1 else 0.0, 0.25 * (hi - lo))
    lo, hi = lo + shrink, hi - shrink
    if model is not None and model.support is not None:
        lo = np.maximum(lo, model.support[0])
        hi = np.minimum(hi, model.support[1])
    return tuple(float(v) for v in lo), tuple(float(v) for v in hi)


def _half_width(zeta: float, gamma: float, n: int, h: float, form: str) -> float:
    rate = _rate_log(n, h, "max_loglog")
    if form == "inverse_gamma4":
        return math.sqrt(rate / (n * h * gamma**4)) * zeta
    if form == "gamma4":
        return math.sqrt(gamma**4 * rate / (n * h)) * zeta
    raise DomainError(f"unknown interval form {form!r}")


def certainty_interval(
    est: DensityEstimate,
    gamma: float,
    grid: EvaluationGrid,
    support_est,
    *,
    values=None,
    center: float | None = None,
    form: str = "inverse_gamma4",
) -> CertaintyInterval:
    """Interval H1 +/- L_n around the plug-in estimate.

    zeta_hat is the max over grid nodes inside ``support_est`` of
    sqrt(f_hat(x) int K^2).  With ``form="inverse_gamma4"`` the half width is
    sqrt((log(1/h) v log log n) / (n h gamma^4)) * zeta_hat, the scale at
    which the normalised plug-in error is bounded; ``form="gamma4"`` puts
    gamma^4 in the numerator instead, giving a far narrower interval.
    """
    if values is None:
        values = kde_eval_grid(est, grid)
    values = np.asarray(values, dtype=float)
    lo = np.asarray(support_est[0], dtype=float)
    hi = np.asarray(support_est[1], dtype=float)
    pts = grid.points()
    inside = np.all((pts >= lo) & (pts <= hi), axis=1)
    if not inside.any():
        raise DomainError("no grid node lies inside the estimated support")
    zeta = math.sqrt(max(float(np.max(values[inside])), 0.0) * est.kernel.sq_integral)
    if center is None:
        center = plugin_from_values(values, grid.cell_volume, gamma)[0]
    return CertaintyInterval(
        center=float(center),
        half_width=_half_width(zeta, gamma, est.n, est.bandwidth, form),
        zeta_hat=zeta,
        h=est.bandwidth,
        n=est.n,
        gamma=float(gamma),
    )


def limit_constants(model: DistributionModel, kernel: KernelSpec, gamma_const: float = 1.0) -> dict:
    """zeta(I) = sqrt(sup f int K^2) and sigma_I = zeta / gamma_const."""
    zeta = math.sqrt(model.sup_density * kernel.sq_integral)
    return {"zeta": zeta, "sigma": zeta / gamma_const, "gamma_const": gamma_const}


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

COLUMNS = (
    "n",
    "seed",
    "h",
    "estimator",
    "gamma",
    "estimate",
    "centering",
    "deviation",
    "normalized_deviation",
    "true_entropy",
    "abs_error",
    "excluded_fraction",
    "interval_lower",
    "interval_upper",
    "status",
)


@dataclass(frozen=True)
class SweepRow:
    n: int
    seed: int
    h: float
    estimator: str
    gamma: float
    estimate: float | None = None
    centering: float | None = None
    deviation: float | None = None
    normalized_deviation: float | None = None
    true_entropy: float | None = None
    abs_error: float | None = None
    excluded_fraction: float | None = None
    interval_lower: float | None = None
    interval_upper: float | None = None
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def sort_key(self):
        return (self.n, self.seed, _KIND_ORDER[self.estimator], self.h)


_KIND_ORDER = {k.value: i for i, k in enumerate(EstimatorKind)}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class SweepReport:
    """Rows of a sweep plus per-replicate suprema over the bandwidth grid."""

    rows: list[SweepRow]
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = sorted(self.rows, key=SweepRow.sort_key)

    def sups(self) -> list[dict]:
        """Per (n, seed, estimator): suprema over h of the deviation columns."""
        groups: dict[tuple, list[SweepRow]] = {}
        for row in self.rows:
            groups.setdefault((row.n, row.seed, row.estimator), []).append(row)
        out = []
        for (n, seed, kind), rows in groups.items():
            good = [r for r in rows if r.ok]
            entry = {"n": n, "seed": seed, "estimator": kind, "ok_rows": len(good), "rows": len(rows)}
            for col in ("normalized_deviation", "deviation", "abs_error"):
                vals = [getattr(r, col) for r in good if getattr(r, col) is not None]
                entry[f"sup_{col}"] = max(vals) if vals else None
            out.append(entry)
        return out

    def medians(self) -> list[dict]:
        """Per (n, estimator): medians over seeds of the per-replicate suprema."""
        groups: dict[tuple, list[dict]] = {}
        for entry in self.sups():
            groups.setdefault((entry["n"], entry["estimator"]), []).append(entry)
        out = []
        for (n, kind), entries in sorted(groups.items(), key=lambda kv: (kv[0][0], _KIND_ORDER[kv[0][1]])):
            item = {"n": n, "estimator": kind, "replicates": len(entries)}
            for col in ("sup_normalized_deviation", "sup_deviation", "sup_abs_error"):
                vals = [e[col] for e in entries if e[col] is not None]
                item[f"median_{col}"] = statistics.median(vals) if vals else None
            out.append(item)
        return out

    def median(self, estimator, column: str = "sup_normalized_deviation") -> dict[int, float]:
        """{n: median over seeds} for one estimator and one sup column."""
        kind = EstimatorKind(estimator).value
        return {m["n"]: m[f"median_{column}"] for m in self.medians() if m["estimator"] == kind}

    def interval_coverage(self) -> dict[int, float]:
        """Per n: share of plug-in rows whose interval holds the true entropy."""
        hits: dict[int, list[bool]] = {}
        for r in self.rows:
            if r.estimator == EstimatorKind.PLUGIN.value and r.ok and r.interval_lower is not None:
                if r.true_entropy is not None:
                    hits.setdefault(r.n, []).append(r.interval_lower <= r.true_entropy <= r.interval_upper)
        return {n: sum(v) / len(v) for n, v in sorted(hits.items())}

    def to_csv(self, fh=None) -> str:
        """Write the rows (config echoed in leading ``#`` lines); returns the text."""
        buf = io.StringIO()
        buf.write("# config: " + json.dumps(self.config, sort_keys=True) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in self.rows:
            d = asdict(row)
            writer.writerow([_fmt(d[c]) for c in COLUMNS])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    def summary(self) -> dict:
        return {
            "config": self.config,
            "medians": self.medians(),
            "sups": self.sups(),
            "interval_coverage": {str(k): v for k, v in self.interval_coverage().items()},
        }

    def to_json(self, fh=None) -> str:
        text = json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"
        if fh is not None:
            fh.write(text)
        return text


def replicate_seed(seed: int, n: int) -> int:
    """Seed for the sample of size ``n`` in replicate ``seed``."""
    return int(np.random.SeedSequence([int(seed), int(n)]).generate_state(1, np.uint64)[0])


def _grid_for(data, kernel: KernelSpec, h_max: float, points_per_axis) -> EvaluationGrid:
    return EvaluationGrid.covering(data, kernel, h_max, points_per_axis)


def _error_row(base: dict, exc: Exception) -> SweepRow:
    kind = getattr(exc, "kind", type(exc).__name__)
    log.debug("sweep row %s failed: %s", base, exc)
    return SweepRow(**base, status=f"error:{kind}")


def _replicate(
    model: DistributionModel | None,
    data,
    kernel: KernelSpec,
    hs: Sequence[float],
    gamma: float,
    n: int,
    seed: int,
    kinds: Sequence[EstimatorKind],
    points_per_axis,
    interval_form: str,
    centering: bool,
) -> list[SweepRow]:
    rows: list[SweepRow] = []
    true_h = None if model is None else model.entropy_closed_form
    grid = _grid_for(data, kernel, max(hs), points_per_axis)
    support_est = support_estimate(data, model)
    for h in hs:
        h = float(h)
        est = DensityEstimate(data, kernel, h)
        fhat_obs = None
        for kind in kinds:
            base = {"n": n, "seed": seed, "h": h, "estimator": kind.value, "gamma": gamma}
            try:
                cols: dict = {}
                if kind is EstimatorKind.PLUGIN:
                    values = kde_eval_grid(est, grid)
                    value, excluded, mask = plugin_from_values(values, grid.cell_volume, gamma)
                    if centering:
                        cols["centering"] = centering_plugin(model, kernel, h, gamma, mask, grid)
                    ci = certainty_interval(
                        est, gamma, grid, support_est, values=values, center=value, form=interval_form
                    )
                    cols["interval_lower"] = ci.lower
                    cols["interval_upper"] = ci.upper
                elif kind is EstimatorKind.RESUBSTITUTION:
                    if fhat_obs is None:
                        fhat_obs = est.at_observations()
                    value, excluded, _ = resubstitution_from_values(fhat_obs, gamma)
                    if centering:
                        cols["centering"] = -centering_resub(model, kernel, h, est, gamma, fhat=fhat_obs)
                else:
                    value = entropy_leave_one_out(data, kernel, h).value
                    excluded = 0.0
                    if centering:
                        ef = smoothed_density(model, kernel, h, est.sorted_observations)
                        ef = ef[ef > 0]
                        cols["centering"] = -math.fsum(np.log(ef)) / n
                cols["estimate"] = value
                cols["excluded_fraction"] = excluded
                if "centering" in cols:
                    cols["deviation"] = abs(value - cols["centering"])
                    cols["normalized_deviation"] = deviation_statistic(
                        kind, n, h, gamma, value, cols["centering"]
                    )
                if true_h is not None:
                    cols["true_entropy"] = true_h
                    cols["abs_error"] = abs(value - true_h)
                bad = [k for k, v in cols.items() if isinstance(v, float) and not math.isfinite(v)]
                if bad:
                    rows.append(SweepRow(**base, status="error:non_finite"))
                    continue
                rows.append(SweepRow(**base, **cols))
            except EntrokitError as exc:
                rows.append(_error_row(base, exc))
    return rows


def sweep(
    model: DistributionModel,
    kernel: KernelSpec,
    bandwidths,
    schedule: ThresholdSchedule,
    n_list: Iterable[int],
    seeds: Iterable[int],
    estimators: Iterable = (EstimatorKind.PLUGIN, EstimatorKind.RESUBSTITUTION),
    *,
    points_per_axis=None,
    interval_form: str = "inverse_gamma4",
    workers: int | None = None,
) -> SweepReport:
    """Run every estimator at every bandwidth for every (n, seed).

    ``bandwidths`` is a :class:`BandwidthGrid`, a callable ``n -> BandwidthGrid``
    (such as :class:`BandwidthRule`) or a plain sequence of bandwidths.  The
    sample for ``(n, seed)`` is drawn once with :func:`replicate_seed`.
    Failing rows are kept with an ``error:<kind>`` status.
    """
    n_list = [int(n) for n in n_list]
    seeds = [int(s) for s in seeds]
    kinds = [EstimatorKind(k) for k in estimators]
    if not n_list or not seeds or not kinds:
        raise DomainError("sweep needs nonempty n_list, seeds and estimators")

    def hs_for(n):
        if isinstance(bandwidths, BandwidthGrid):
            return bandwidths.values
        if callable(bandwidths):
            return bandwidths(n).values
        return np.asarray(bandwidths, dtype=float)

    # resolve every grid up front so that range warnings appear once per n
    grids = {n: hs_for(n) for n in n_list}

    if points_per_axis is None:
        points_per_axis = default_points_per_axis(kernel.dimension)

    def task(pair):
        n, seed = pair
        data = sample(model, n, replicate_seed(seed, n))
        return _replicate(
            model, data, kernel, grids[n], schedule(n), n, seed, kinds,
            points_per_axis, interval_form, centering=True,
        )

    pairs = [(n, s) for n in n_list for s in seeds]
    workers = workers or worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(task, pairs))
    else:
        chunks = [task(p) for p in pairs]
    config = {
        "model": model.name,
        "kernel": kernel.name,
        "bandwidths": _describe_bandwidths(bandwidths),
        "beta": schedule.beta,
        "alpha": schedule.alpha,
        "n_list": n_list,
        "seeds": seeds,
        "estimators": [k.value for k in kinds],
        "points_per_axis": points_per_axis,
        "interval_form": interval_form,
    }
    return SweepReport([row for chunk in chunks for row in chunk], config)


def _describe_bandwidths(bandwidths):
    if isinstance(bandwidths, (BandwidthGrid, BandwidthRule)):
        return asdict(bandwidths)
    if callable(bandwidths):
        return repr(bandwidths)
    return [float(h) for h in bandwidths]


# ---------------------------------------------------------------------------
# coverage and bias
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoverageResult:
    n: int
    h: float
    replicates: int
    covered: int
    median_half_width: float

    @property
    def coverage(self) -> float:
        return self.covered / self.replicates


def coverage_experiment(
    model: DistributionModel,
    kernel: KernelSpec,
    h: float,
    n: int,
    replicates: int,
    schedule: ThresholdSchedule | None = None,
    seed: int = 0,
    form: str = "inverse_gamma4",
    points_per_axis=None,
) -> CoverageResult:
    """Share of replicates whose certainty interval contains the true entropy."""
    schedule = schedule or ThresholdSchedule()
    gamma = schedule(n)
    truth = model.entropy_closed_form
    covered = 0
    widths = []
    for r in range(replicates):
        data = sample(model, n, replicate_seed(seed + r, n))
        est = DensityEstimate(data, kernel, h)
        grid = EvaluationGrid.covering(data, kernel, h, points_per_axis)
        ci = certainty_interval(est, gamma, grid, support_estimate(data, model), form=form)
        covered += ci.contains(truth)
        widths.append(ci.half_width)
    return CoverageResult(n, float(h), replicates, covered, float(np.median(widths)))


@dataclass(frozen=True)
class BiasProbe:
    h: tuple[float, ...]
    sup_bias: tuple[float, ...]
    slope: float | None


def interior_grid(model: DistributionModel, margin: float, points_per_axis: int = 201) -> EvaluationGrid:
    """Grid over the model support shrunk by ``margin`` on every side."""
    if not model.is_compact:
        raise DomainError("interior grids need a compactly supported model")
    lo = np.asarray(model.support[0]) + margin
    hi = np.asarray(model.support[1]) - margin
    if np.any(lo >= hi):
        raise DomainError(f"margin {margin} leaves no interior in {model.support_text}")
    return EvaluationGrid(tuple(lo), tuple(hi), points_per_axis)


def bias_probe(
    model: DistributionModel,
    kernel: KernelSpec,
    h_list: Sequence[float],
    grid: EvaluationGrid | None = None,
) -> BiasProbe:
    """sup over the grid of |K_h * f - f| for each h, plus the log-log slope.

    The default grid keeps every kernel window inside the support so that
    the boundary of the support does not enter the bias.
    """
    if kernel.order > model.smoothness_order:
        raise DomainError(
            f"kernel order {kernel.order} exceeds model smoothness {model.smoothness_order}"
        )
    if not model.is_compact:
        raise DomainError("bias probe needs a compactly supported model")
    hs = [float(h) for h in h_list]
    if grid is None:
        grid = interior_grid(model, max(hs) * kernel.eval_radius)
    pts = grid.points()
    truth = model.pdf(pts)
    sups = [float(np.max(np.abs(smoothed_density(model, kernel, h, pts) - truth))) for h in hs]
    slope = None
    if len(hs) >= 3 and all(s > 0 for s in sups):
        slope = float(np.polyfit(np.log(hs), np.log(sups), 1)[0])
    return BiasProbe(tuple(hs), tuple(sups), slope)
