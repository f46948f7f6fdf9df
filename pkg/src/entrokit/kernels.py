"""
Smoothing kernels and their analytic constants.

Every kernel is a product of identical one-dimensional profiles, so a
``KernelSpec`` of dimension ``d`` evaluates ``K(t) = prod_i K1(t_i)``.
Shipped profiles:

==================  ======================================  =====  ==========
family              K1(u)                                   order  support
==================  ======================================  =====  ==========
boxcar              1 on [-1/2, 1/2)                        2      1/2
epanechnikov        3/4 (1 - u^2) on [-1, 1]                2      1
gaussian            exp(-u^2 / 2) / sqrt(2 pi)              2      inf
double_exponential  exp(-|u|) / 2                           2      inf
polynomial_order_s  Legendre moment-matched poly on [-1,1)  s      1
==================  ======================================  =====  ==========

Half-open supports keep the compact kernels right-continuous.  Kernels with
unbounded support are evaluated on a truncated window (``eval_radius``):
radius 8 for the Gaussian and 36 for the double exponential, where the
neglected tail mass is below 1e-14.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre, polynomial
from scipy import integrate

from .errors import DomainError, ParseError, QuadratureError

__all__ = [
    "FAMILIES",
    "KernelCheck",
    "KernelSpec",
    "check_kernel",
    "kernel_eval",
    "kernel_moments",
    "make_kernel",
    "parse_kernel",
]

FAMILIES = (
    "boxcar",
    "epanechnikov",
    "gaussian",
    "double_exponential",
    "polynomial_order_s",
)

_GAUSS_TRUNCATION = 8.0
_DEXP_TRUNCATION = 36.0
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _legendre_coefficients(order: int) -> tuple[float, ...]:
    # Projection of the delta at 0 onto Legendre polynomials of degree < order:
    # K(t) = sum_k (2k+1)/2 P_k(0) P_k(t) reproduces all polynomials of
    # degree < order, hence moments 1..order-1 vanish.
    leg = np.zeros(order)
    for k in range(order):
        unit = np.zeros(k + 1)
        unit[k] = 1.0
        leg[k] = (2 * k + 1) / 2.0 * legendre.legval(0.0, unit)
    return tuple(float(c) for c in legendre.leg2poly(leg))


@dataclass(frozen=True)
class KernelSpec:
    """A product kernel with its sup-norm, order and square-integral constants.

    Instances are immutable; build them with :func:`make_kernel` or
    :func:`parse_kernel` rather than directly.
    """

    family: str
    dimension: int
    order: int
    support_radius: float
    sup_norm: float
    sq_integral: float
    coefficients: tuple[float, ...] = field(default=(), repr=False)

    @property
    def eval_radius(self) -> float:
        """Half-width outside which evaluation returns exactly zero."""
        if self.family == "gaussian":
            return _GAUSS_TRUNCATION
        if self.family == "double_exponential":
            return _DEXP_TRUNCATION
        return self.support_radius

    @property
    def is_compact(self) -> bool:
        return math.isfinite(self.support_radius)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Sorted 1-d points, including the window ends, where K1 is not smooth."""
        r = self.eval_radius
        if self.family == "double_exponential":
            return (-r, 0.0, r)
        return (-r, r)

    @property
    def name(self) -> str:
        if self.family == "polynomial_order_s":
            return f"poly:s={self.order}"
        return self.family

    def profile(self, u) -> np.ndarray:
        """Evaluate the one-dimensional profile K1 elementwise."""
        u = np.asarray(u, dtype=float)
        fam = self.family
        if fam == "boxcar":
            return ((u >= -0.5) & (u < 0.5)).astype(float)
        if fam == "epanechnikov":
            return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)
        if fam == "gaussian":
            inside = np.abs(u) <= _GAUSS_TRUNCATION
            return np.where(inside, _INV_SQRT_2PI * np.exp(-0.5 * u * u), 0.0)
        if fam == "double_exponential":
            a = np.abs(u)
            return np.where(a <= _DEXP_TRUNCATION, 0.5 * np.exp(-a), 0.0)
        inside = (u >= -1.0) & (u < 1.0)
        return np.where(inside, polynomial.polyval(u, self.coefficients), 0.0)

    def evaluate(self, t) -> np.ndarray:
        """Evaluate K on an array whose last axis has length ``dimension``."""
        t = np.asarray(t, dtype=float)
        if t.shape[-1] != self.dimension:
            raise DomainError(
                f"expected points with last axis {self.dimension}, got shape {t.shape}"
            )
        vals = self.profile(t[..., 0])
        for i in range(1, self.dimension):
            vals = vals * self.profile(t[..., i])
        return vals

    @property
    def value_at_zero(self) -> float:
        return float(self.profile(0.0)) ** self.dimension


def _profile_constants(family: str, order: int, coefficients) -> tuple[float, float, float]:
    """(support_radius, sup_norm, sq_integral) of the 1-d profile."""
    if family == "boxcar":
        return 0.5, 1.0, 1.0
    if family == "epanechnikov":
        return 1.0, 0.75, 0.6
    if family == "gaussian":
        return math.inf, _INV_SQRT_2PI, 1.0 / (2.0 * math.sqrt(math.pi))
    if family == "double_exponential":
        return math.inf, 0.5, 0.25
    coef = np.asarray(coefficients)
    crit = polynomial.polyroots(polynomial.polyder(coef)) if coef.size > 2 else np.array([])
    crit = crit[np.isreal(crit)].real
    cand = np.concatenate([[-1.0, 1.0], crit[(crit >= -1.0) & (crit <= 1.0)]])
    sup = float(np.max(np.abs(polynomial.polyval(cand, coef))))
    sq = polynomial.polyint(polynomial.polymul(coef, coef))
    sq_int = float(polynomial.polyval(1.0, sq) - polynomial.polyval(-1.0, sq))
    return 1.0, sup, sq_int


def make_kernel(family: str, dimension: int = 1, order: int | None = None) -> KernelSpec:
    """Build a kernel of the given family.

    ``order`` is only meaningful for ``polynomial_order_s`` where it must be an
    even integer >= 2; symmetric kernels have vanishing odd moments, so an odd
    order cannot have a nonzero moment of that degree.
    """
    if family not in FAMILIES:
        raise DomainError(f"unknown kernel family {family!r}; choose from {FAMILIES}")
    if int(dimension) != dimension or dimension < 1:
        raise DomainError(f"dimension must be a positive integer, got {dimension!r}")
    dimension = int(dimension)
    coefficients: tuple[float, ...] = ()
    if family == "polynomial_order_s":
        if order is None:
            raise DomainError("polynomial_order_s needs an explicit order")
        if int(order) != order or order < 2 or order % 2:
            raise DomainError(f"polynomial kernel order must be an even integer >= 2, got {order}")
        order = int(order)
        coefficients = _legendre_coefficients(order)
    else:
        if order not in (None, 2):
            raise DomainError(f"{family} kernel has order 2, got {order}")
        order = 2
    radius, sup1, sq1 = _profile_constants(family, order, coefficients)
    return KernelSpec(
        family=family,
        dimension=dimension,
        order=order,
        support_radius=radius,
        sup_norm=sup1**dimension,
        sq_integral=sq1**dimension,
        coefficients=coefficients,
    )


def parse_kernel(text: str, dimension: int = 1) -> KernelSpec:
    """Parse ``boxcar | epanechnikov | gaussian | double_exponential | poly:s=<int>``."""
    text = text.strip().lower()
    if text.startswith("poly"):
        _, _, params = text.partition(":")
        key, _, value = params.partition("=")
        if key.strip() != "s" or not value.strip():
            raise ParseError(f"polynomial kernel must be written poly:s=<int>, got {text!r}")
        try:
            order = int(value)
        except ValueError as exc:
            raise ParseError(f"bad kernel order in {text!r}") from exc
        return make_kernel("polynomial_order_s", dimension, order)
    if text not in FAMILIES:
        raise ParseError(f"unknown kernel {text!r}")
    return make_kernel(text, dimension)


def kernel_eval(spec: KernelSpec, t) -> float:
    """Return K(t) at a single point ``t`` of length ``spec.dimension``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if t.shape != (spec.dimension,):
        raise DomainError(f"point must have {spec.dimension} coordinates, got shape {t.shape}")
    if not np.all(np.isfinite(t)):
        raise DomainError(f"kernel evaluated at non-finite point {t.tolist()}")
    return float(spec.evaluate(t))


def _profile_integral(spec: KernelSpec, func, tol: float = 1e-11) -> float:
    """Integrate ``func(u) * K1(u)``-style integrands piecewise over the window."""
    total = 0.0
    err = 0.0
    bp = spec.breakpoints
    for a, b in zip(bp[:-1], bp[1:]):
        val, e = integrate.quad(func, a, b, epsabs=1e-13, epsrel=1e-13, limit=200)
        total += val
        err += e
    if err > tol:
        raise QuadratureError("kernel moment quadrature did not converge", err)
    return total


def _profile_moment(spec: KernelSpec, j: int) -> float:
    return _profile_integral(spec, lambda u: u**j * float(spec.profile(u)))


def kernel_moments(spec: KernelSpec, max_degree: int) -> list[tuple[tuple[int, ...], float]]:
    """Mixed moments of every multi-index with total degree 0..max_degree.

    Moments are computed by adaptive quadrature of the 1-d profile and
    multiplied across axes, which is exact for product kernels.
    """
    if max_degree < 0 or max_degree > spec.order:
        raise DomainError(f"max_degree must lie in [0, {spec.order}], got {max_degree}")
    one_d = [_profile_moment(spec, j) for j in range(max_degree + 1)]
    out = []
    for total in range(max_degree + 1):
        for idx in itertools.product(range(total + 1), repeat=spec.dimension):
            if sum(idx) != total:
                continue
            out.append((idx, math.prod(one_d[j] for j in idx)))
    return out


@dataclass(frozen=True)
class KernelCheck:
    """Outcome of the numerical normalisation, sup-norm, order and int K^2 checks."""

    integral: float
    sampled_sup: float
    sup_norm: float
    sq_integral: float
    declared_sq_integral: float
    low_moments_max: float
    order_moment: float
    tol: float

    @property
    def normalized(self) -> bool:
        return abs(self.integral - 1.0) <= self.tol

    @property
    def bounded(self) -> bool:
        return self.sampled_sup <= self.sup_norm * (1.0 + 1e-12)

    @property
    def has_order(self) -> bool:
        return self.low_moments_max <= self.tol and abs(self.order_moment) > self.tol

    @property
    def sq_integral_matches(self) -> bool:
        return abs(self.sq_integral - self.declared_sq_integral) <= self.tol

    @property
    def passed(self) -> bool:
        return self.normalized and self.bounded and self.has_order and self.sq_integral_matches


def check_kernel(spec: KernelSpec, tol: float = 1e-6, samples: int = 200_001) -> KernelCheck:
    """Numerically verify normalization, sup-norm, moment order and int K^2."""
    moments = dict(kernel_moments(spec, spec.order))
    low = [abs(v) for idx, v in moments.items() if 1 <= sum(idx) < spec.order]
    top = [v for idx, v in moments.items() if sum(idx) == spec.order]
    order_moment = max(top, key=abs)
    r = spec.eval_radius
    u = np.linspace(-r, r, samples)
    sampled_sup = float(np.max(np.abs(spec.profile(u)))) ** spec.dimension
    sq1 = _profile_integral(spec, lambda v: float(spec.profile(v)) ** 2)
    return KernelCheck(
        integral=moments[(0,) * spec.dimension],
        sampled_sup=sampled_sup,
        sup_norm=spec.sup_norm,
        sq_integral=sq1**spec.dimension,
        declared_sq_integral=spec.sq_integral,
        low_moments_max=max(low, default=0.0),
        order_moment=order_moment,
        tol=tol,
    )
