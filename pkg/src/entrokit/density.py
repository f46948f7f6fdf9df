"""
Kernel density estimates, evaluation grids and kernel-smoothed densities.

The estimator is the Akaike-Parzen-Rosenblatt sum

    f_{n,h}(x) = (n h^d)^{-1} sum_i K((x - X_i) / h)

evaluated by direct summation.  Observations are kept sorted along the first
axis so that, for every block of evaluation points, only the observations
inside the kernel window are visited.  Nothing is binned or approximated.

``smoothed_density`` computes E f_{n,h}(x) = (K_h * f)(x) for a known density
with a vectorised composite Gauss-Legendre rule whose panel count doubles
until successive estimates agree to ``tol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, GridSizeError, QuadratureError
from .kernels import KernelSpec, make_kernel

__all__ = [
    "DEFAULT_GRID_CAP",
    "DataSet",
    "DensityEstimate",
    "EvaluationGrid",
    "as_dataset",
    "kde_eval",
    "kde_eval_grid",
    "kde_eval_points",
    "smoothed_density",
    "smoothed_density_eval",
    "sup_deviation",
]

DEFAULT_GRID_CAP = 4_000_000
_CHUNK = 128
_QUAD_BUDGET = 2_000_000
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_GAUSS_R2 = make_kernel("gaussian").eval_radius ** 2


@dataclass(frozen=True, eq=False)
class DataSet:
    """An ``n x d`` array of finite observations (stored read-only)."""

    observations: np.ndarray

    def __post_init__(self):
        obs = np.array(self.observations, dtype=float, copy=True)
        if obs.ndim == 1:
            obs = obs.reshape(-1, 1)
        if obs.ndim != 2:
            raise DomainError(f"observations must be an n x d array, got shape {obs.shape}")
        if obs.shape[0] < 1:
            raise DomainError("a dataset needs at least one observation")
        if obs.shape[1] < 1:
            raise DomainError("observations must have at least one coordinate")
        if not np.all(np.isfinite(obs)):
            raise DomainError("observations must all be finite")
        obs.setflags(write=False)
        object.__setattr__(self, "observations", obs)

    @property
    def n(self) -> int:
        return self.observations.shape[0]

    @property
    def d(self) -> int:
        return self.observations.shape[1]

    def __len__(self) -> int:
        return self.n


def as_dataset(data) -> DataSet:
    return data if isinstance(data, DataSet) else DataSet(data)


def _as_points(x, d: int) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts.reshape(-1, 1) if d == 1 else pts.reshape(1, -1)
    if pts.ndim != 2 or pts.shape[1] != d:
        raise DomainError(f"points must have {d} coordinates, got shape {np.shape(x)}")
    if not np.all(np.isfinite(pts)):
        raise DomainError("evaluation points must be finite")
    return pts


def _kernel_sums(data, points, kernel: KernelSpec, h: float, self_rows=None) -> np.ndarray:
    """sum_j K((p - X_j)/h) for each row p of ``points``.

    ``data`` must be sorted on its first column.  ``self_rows[k]`` names the
    data row equal to ``points[k]``; that term is dropped (leave-one-out).
    """
    m = points.shape[0]
    key = data[:, 0]
    reach = kernel.eval_radius * h * (1.0 + 1e-12)
    order = np.argsort(points[:, 0], kind="stable")
    pts = points[order]
    rows = None if self_rows is None else np.asarray(self_rows)[order]
    one_d = data.shape[1] == 1
    fast = _FAST_BLOCKS.get(kernel.family) if one_d else None
    out = np.zeros(m)
    for s in range(0, m, _CHUNK):
        p = pts[s : s + _CHUNK]
        j0 = int(np.searchsorted(key, p[0, 0] - reach, side="left"))
        j1 = int(np.searchsorted(key, p[-1, 0] + reach, side="right"))
        if j1 <= j0:
            continue
        if fast is not None:
            k = fast[0](p[:, 0] / h, data[j0:j1, 0] / h)
        elif one_d:
            k = kernel.profile((p[:, 0:1] - data[None, j0:j1, 0]) / h)
        else:
            k = kernel.evaluate((p[:, None, :] - data[None, j0:j1, :]) / h)
        if rows is not None:
            r = rows[s : s + _CHUNK] - j0
            hit = (r >= 0) & (r < j1 - j0)
            k[np.nonzero(hit)[0], r[hit]] = 0.0
        out[s : s + _CHUNK] = k.sum(axis=1)
    if fast is not None:
        out *= fast[1]
    result = np.empty(m)
    result[order] = out
    return result


def _gauss_block(p, x):
    """Unnormalised truncated Gaussian weights exp(-(p_i - x_j)^2 / 2), in place."""
    u = p[:, None] - x[None, :]
    np.square(u, out=u)
    outside = u > _GAUSS_R2
    u *= -0.5
    np.exp(u, out=u)
    u[outside] = 0.0
    return u


def _epanechnikov_block(p, x):
    """Unnormalised weights max(1 - (p_i - x_j)^2, 0), in place."""
    u = p[:, None] - x[None, :]
    np.square(u, out=u)
    np.subtract(1.0, u, out=u)
    np.maximum(u, 0.0, out=u)
    return u


# 1-d families with an in-place block routine and its normalising constant
_FAST_BLOCKS = {
    "gaussian": (_gauss_block, _INV_SQRT_2PI),
    "epanechnikov": (_epanechnikov_block, 0.75),
}


@dataclass(frozen=True, eq=False)
class DensityEstimate:
    """The kernel density estimate built from ``data``, ``kernel`` and ``bandwidth``."""

    data: DataSet
    kernel: KernelSpec
    bandwidth: float

    def __post_init__(self):
        data = as_dataset(self.data)
        object.__setattr__(self, "data", data)
        h = float(self.bandwidth)
        if not (0.0 < h <= 1.0):
            raise DomainError(f"bandwidth must lie in (0, 1], got {self.bandwidth!r}")
        object.__setattr__(self, "bandwidth", h)
        if self.kernel.dimension != data.d:
            raise DomainError(
                f"kernel dimension {self.kernel.dimension} does not match data dimension {data.d}"
            )
        # canonical row order makes every result invariant to row permutations
        order = np.lexsort(data.observations.T[::-1])
        srt = data.observations[order]
        srt.setflags(write=False)
        object.__setattr__(self, "_order", order)
        object.__setattr__(self, "_sorted", srt)

    @property
    def n(self) -> int:
        return self.data.n

    @property
    def d(self) -> int:
        return self.data.d

    @property
    def norm(self) -> float:
        """The normalising constant n h^d."""
        return self.n * self.bandwidth**self.d

    @property
    def sorted_observations(self) -> np.ndarray:
        return self._sorted

    @property
    def sort_order(self) -> np.ndarray:
        """Permutation taking supplied rows to the canonical sorted order."""
        return self._order

    def __call__(self, x) -> np.ndarray:
        return kde_eval_points(self, x)

    def at_observations(self, leave_one_out: bool = False) -> np.ndarray:
        """Density at each observation, in canonical (sorted) row order.

        With ``leave_one_out`` the self term is dropped and the normaliser
        becomes (n - 1) h^d.
        """
        srt = self._sorted
        if not leave_one_out:
            return _kernel_sums(srt, srt, self.kernel, self.bandwidth) / self.norm
        if self.n < 2:
            raise DomainError("leave-one-out needs at least two observations")
        sums = _kernel_sums(srt, srt, self.kernel, self.bandwidth, self_rows=np.arange(self.n))
        return sums / ((self.n - 1) * self.bandwidth**self.d)


def kde_eval_points(est: DensityEstimate, x) -> np.ndarray:
    """Vectorised estimate at an ``m x d`` array of points."""
    pts = _as_points(x, est.d)
    return _kernel_sums(est.sorted_observations, pts, est.kernel, est.bandwidth) / est.norm


def kde_eval(est: DensityEstimate, x) -> float:
    """The estimate at a single point.  Negative values of higher-order kernels are kept."""
    pts = _as_points(x, est.d)
    if pts.shape[0] != 1:
        raise DomainError("kde_eval takes a single point; use kde_eval_points for many")
    return float(kde_eval_points(est, pts)[0])


@dataclass(frozen=True)
class EvaluationGrid:
    """A regular lattice including both endpoints on every axis.

    Points are ordered row-major over axes (last axis fastest).  Each node
    stands for a cell of volume ``prod(spacing)``.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    points_per_axis: tuple[int, ...]
    cap: int = DEFAULT_GRID_CAP

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        ppa = np.atleast_1d(self.points_per_axis)
        if ppa.size == 1 and len(lo) > 1:
            ppa = np.repeat(ppa, len(lo))
        ppa = tuple(int(v) for v in ppa)
        if not (len(lo) == len(hi) == len(ppa)) or not lo:
            raise DomainError("lower, upper and points_per_axis must have one entry per axis")
        if not all(math.isfinite(a) and math.isfinite(b) and a < b for a, b in zip(lo, hi)):
            raise DomainError(f"grid needs finite lower < upper on every axis, got {lo}, {hi}")
        if any(p < 2 for p in ppa):
            raise DomainError("every axis needs at least two grid points")
        if math.prod(ppa) > self.cap:
            raise GridSizeError(f"grid of {math.prod(ppa)} points exceeds the cap of {self.cap}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "points_per_axis", ppa)

    @classmethod
    def covering(
        cls,
        data,
        kernel: KernelSpec,
        h: float,
        points_per_axis=None,
        cap: int = DEFAULT_GRID_CAP,
    ) -> "EvaluationGrid":
        """Grid over the data range padded by the kernel reach ``h * eval_radius``."""
        obs = as_dataset(data).observations
        pad = h * kernel.eval_radius
        if points_per_axis is None:
            points_per_axis = default_points_per_axis(obs.shape[1])
        return cls(
            tuple(obs.min(axis=0) - pad),
            tuple(obs.max(axis=0) + pad),
            points_per_axis,
            cap,
        )

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points_per_axis

    @property
    def size(self) -> int:
        return math.prod(self.points_per_axis)

    @property
    def spacing(self) -> np.ndarray:
        return (np.array(self.upper) - np.array(self.lower)) / (np.array(self.points_per_axis) - 1)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def cell_diameter(self) -> float:
        return float(np.linalg.norm(self.spacing))

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(a, b, p) for a, b, p in zip(self.lower, self.upper, self.points_per_axis)]

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=-1)


def default_points_per_axis(d: int) -> int:
    return {1: 401, 2: 101}.get(d, 41)


def kde_eval_grid(est: DensityEstimate, grid: EvaluationGrid) -> np.ndarray:
    """Estimate at every grid node, flattened in row-major order."""
    if grid.dimension != est.d:
        raise DomainError(f"grid dimension {grid.dimension} != estimate dimension {est.d}")
    if grid.size > grid.cap:
        raise GridSizeError(f"grid of {grid.size} points exceeds the cap of {grid.cap}")
    return kde_eval_points(est, grid.points())


def sup_deviation(est: DensityEstimate, reference, grid: EvaluationGrid) -> float:
    """max over the grid of |f_{n,h}(x) - reference(x)|.

    ``reference`` is either a callable on ``m x d`` points or an array of
    values already evaluated on ``grid``.
    """
    values = kde_eval_grid(est, grid)
    ref = reference(grid.points()) if callable(reference) else np.asarray(reference, dtype=float)
    ref = np.broadcast_to(np.ravel(ref), values.shape)
    return float(np.max(np.abs(values - ref)))


# ---------------------------------------------------------------------------
# kernel-smoothed density E f_{n,h} = K_h * f
# ---------------------------------------------------------------------------


def _unpack_density(density, support):
    """Return (pdf, support box or None, marginals or None)."""
    pdf = getattr(density, "pdf", density)
    if not callable(pdf):
        raise DomainError("density must be a callable or expose a .pdf callable")
    if support is None:
        support = getattr(density, "support", None)
    marginals = getattr(density, "marginals", None)
    return pdf, support, marginals


def _axis_rule(x_i, segments, lo_y, hi_y, h, panels):
    """Nodes and weights (each m x Q) in kernel coordinates for one axis."""
    # y = x - h u lies in [lo_y, hi_y]  <=>  u in [(x - hi_y)/h, (x - lo_y)/h]
    u_lo = (x_i - hi_y) / h
    u_hi = (x_i - lo_y) / h
    frac = (np.arange(panels)[:, None] + (_GL_NODES[None, :] + 1.0) / 2.0).ravel() / panels
    wq = np.tile(_GL_WEIGHTS, panels) / (2.0 * panels)
    nodes, weights = [], []
    for a, b in segments:
        s = np.maximum(a, u_lo)
        e = np.minimum(b, u_hi)
        width = np.clip(e - s, 0.0, None)
        nodes.append(s[:, None] + width[:, None] * frac[None, :])
        weights.append(width[:, None] * wq[None, :])
    return np.concatenate(nodes, axis=1), np.concatenate(weights, axis=1)


def _smooth_block(pdf, kernel: KernelSpec, h, pts, lo, hi, segments, panels):
    m, d = pts.shape
    rules = [_axis_rule(pts[:, i], segments, lo[i], hi[i], h, panels) for i in range(d)]
    # tensor product across axes
    u = rules[0][0][:, :, None]
    w = rules[0][1] * kernel.profile(rules[0][0])
    for nodes_i, weights_i in rules[1:]:
        q_prev = u.shape[1]
        q_i = nodes_i.shape[1]
        u = np.concatenate(
            [np.repeat(u, q_i, axis=1), np.tile(nodes_i, (1, q_prev))[:, :, None]],
            axis=2,
        )
        w = np.repeat(w, q_i, axis=1) * np.tile(weights_i * kernel.profile(nodes_i), (1, q_prev))
    y = pts[:, None, :] - h * u
    f = np.asarray(pdf(y.reshape(-1, d)), dtype=float).reshape(w.shape)
    return np.sum(w * f, axis=1)


def _smooth_fixed(pdf, kernel: KernelSpec, h, pts, support, panels):
    """Composite rule with ``panels`` panels per smooth piece, chunked over points."""
    m, d = pts.shape
    bp = kernel.breakpoints
    segments = list(zip(bp[:-1], bp[1:]))
    if support is None:
        lo = np.full(d, -np.inf)
        hi = np.full(d, np.inf)
    else:
        lo = np.broadcast_to(np.asarray(support[0], dtype=float), (d,))
        hi = np.broadcast_to(np.asarray(support[1], dtype=float), (d,))
    nodes = (len(segments) * panels * _GL_NODES.size) ** d
    step = max(1, _QUAD_BUDGET // nodes)
    out = np.empty(m)
    for s in range(0, m, step):
        out[s : s + step] = _smooth_block(pdf, kernel, h, pts[s : s + step], lo, hi, segments, panels)
    return out


def _smooth_adaptive(pdf, kernel, h, pts, support, tol, max_panels):
    out = np.empty(pts.shape[0])
    for s in range(0, pts.shape[0], 4096):
        p = pts[s : s + 4096]
        panels = 1
        prev = _smooth_fixed(pdf, kernel, h, p, support, panels)
        while True:
            panels *= 2
            cur = _smooth_fixed(pdf, kernel, h, p, support, panels)
            diff = float(np.max(np.abs(cur - prev)))
            if diff < tol:
                break
            if panels >= max_panels:
                raise QuadratureError("smoothed density quadrature hit its subdivision cap", diff)
            prev = cur
        out[s : s + 4096] = cur
    return out


def smoothed_density(
    density,
    kernel: KernelSpec,
    h: float,
    points,
    *,
    support=None,
    tol: float = 1e-8,
    max_panels: int = 256,
) -> np.ndarray:
    """(K_h * f)(x) = int K(u) f(x - h u) du at every row of ``points``.

    ``density`` is a :class:`~entrokit.models.DistributionModel` or a callable
    mapping an ``M x d`` array to ``M`` density values.  A box ``support``
    (pair of lower/upper arrays) is split out of the integration range so the
    integrand stays smooth; models supply theirs automatically.  Product
    models are integrated axis by axis.
    """
    if not h > 0:
        raise DomainError(f"bandwidth must be positive, got {h!r}")
    pdf, support, marginals = _unpack_density(density, support)
    pts = _as_points(points, kernel.dimension)
    if marginals is not None and kernel.dimension > 1:
        k1 = make_kernel(kernel.family, 1, kernel.order)
        out = np.ones(pts.shape[0])
        for i, marg in enumerate(marginals):
            out *= smoothed_density(marg, k1, h, pts[:, i : i + 1], tol=tol, max_panels=max_panels)
        return out
    return _smooth_adaptive(pdf, kernel, h, pts, support, tol, max_panels)


def smoothed_density_eval(density, kernel: KernelSpec, h: float, x, **kwargs) -> float:
    """E f_{n,h}(x) at a single point; see :func:`smoothed_density`."""
    pts = _as_points(x, kernel.dimension)
    if pts.shape[0] != 1:
        raise DomainError("smoothed_density_eval takes a single point")
    return float(smoothed_density(density, kernel, h, pts, **kwargs)[0])


DensityFunction = Callable[[np.ndarray], np.ndarray]
