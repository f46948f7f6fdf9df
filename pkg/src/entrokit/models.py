"""
Ground-truth distributions with closed-form entropies.

Each :class:`DistributionModel` bundles a density, a seeded sampler, the
differential entropy in nats, a support box and the smoothness metadata the
bias and threshold arguments rely on.  Models are built from short spec
strings::

    uniform            uniform:d=2        uniform:a=-1,b=3
    normal:sigma=1     normal:sigma=2,d=2
    expo:lambda=2
    cosine             cosine:d=2
    gaussmix:w=0.5,mu=3

``cosine`` is the raised-cosine density 1 - cos(2 pi x) on [0, 1]: smooth on
its support and vanishing at both ends, with entropy log 2 - 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize, stats

from .density import DataSet
from .errors import DomainError, ParseError

__all__ = [
    "DistributionModel",
    "cosine",
    "exponential",
    "gaussian_mixture",
    "log_squared_moment",
    "normal",
    "parse_model",
    "sample",
    "true_entropy",
    "uniform",
]


def _rng(seed: int) -> np.random.Generator:
    # Philox is counter-based: distinct seeds give independent streams
    return np.random.Generator(np.random.Philox(int(seed) % 2**64))


@dataclass(frozen=True, eq=False)
class DistributionModel:
    """A known density on R^d.

    ``pdf`` maps an ``m x d`` array to ``m`` values.  ``support`` is a pair of
    lower/upper corner tuples (entries may be infinite) or ``None`` for all of
    R^d.  ``marginals`` lists the 1-d factors of product densities.
    """

    name: str
    dimension: int
    pdf: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    sampler: Callable[[np.random.Generator, int], np.ndarray] = field(repr=False)
    entropy_closed_form: float
    support: tuple[tuple[float, ...], tuple[float, ...]] | None
    sup_density: float
    bounded_away_from_zero: bool
    smoothness_order: float
    marginals: tuple["DistributionModel", ...] | None = field(default=None, repr=False)
    plot_range: tuple[tuple[float, ...], tuple[float, ...]] | None = field(default=None, repr=False)

    @property
    def is_compact(self) -> bool:
        if self.support is None:
            return False
        return all(math.isfinite(v) for v in (*self.support[0], *self.support[1]))

    @property
    def support_text(self) -> str:
        if self.support is None:
            return "unbounded"
        return f"{list(self.support[0])} x {list(self.support[1])}"

    def range_box(self):
        """Finite box holding essentially all the mass (support, or plot_range)."""
        if self.is_compact:
            return self.support
        return self.plot_range


def sample(model: DistributionModel, n: int, seed: int) -> DataSet:
    """Draw ``n`` i.i.d. observations; identical ``(seed, n)`` gives identical data."""
    if int(n) != n or n < 1:
        raise DomainError(f"sample size must be a positive integer, got {n!r}")
    x = np.asarray(model.sampler(_rng(seed), int(n)), dtype=float).reshape(int(n), model.dimension)
    return DataSet(x)


def true_entropy(model: DistributionModel) -> float:
    return model.entropy_closed_form


def _product(name: str, factor: DistributionModel, d: int) -> DistributionModel:
    if d == 1:
        return factor

    def pdf(y):
        y = np.asarray(y, dtype=float)
        out = np.ones(y.shape[0])
        for i in range(d):
            out *= factor.pdf(y[:, i : i + 1])
        return out

    def sampler(rng, n):
        return np.column_stack([factor.sampler(rng, n).reshape(n) for _ in range(d)])

    def box(b):
        return None if b is None else (b[0] * d, b[1] * d)

    return DistributionModel(
        name=name,
        dimension=d,
        pdf=pdf,
        sampler=sampler,
        entropy_closed_form=d * factor.entropy_closed_form,
        support=box(factor.support),
        sup_density=factor.sup_density**d,
        bounded_away_from_zero=factor.bounded_away_from_zero,
        smoothness_order=factor.smoothness_order,
        marginals=(factor,) * d,
        plot_range=box(factor.plot_range),
    )


def uniform(d: int = 1, a: float = 0.0, b: float = 1.0) -> DistributionModel:
    if not a < b:
        raise DomainError(f"uniform needs a < b, got a={a}, b={b}")
    width = b - a

    def pdf(y):
        y = np.asarray(y, dtype=float)[:, 0]
        return np.where((y >= a) & (y <= b), 1.0 / width, 0.0)

    factor = DistributionModel(
        name=f"uniform:a={a:g},b={b:g}",
        dimension=1,
        pdf=pdf,
        sampler=lambda rng, n: rng.uniform(a, b, size=n),
        entropy_closed_form=math.log(width),
        support=((a,), (b,)),
        sup_density=1.0 / width,
        bounded_away_from_zero=True,
        smoothness_order=math.inf,
    )
    return _product(f"uniform:d={d},a={a:g},b={b:g}", factor, d)


def normal(sigma: float = 1.0, d: int = 1) -> DistributionModel:
    if not sigma > 0:
        raise DomainError(f"normal needs sigma > 0, got {sigma}")
    factor = DistributionModel(
        name=f"normal:sigma={sigma:g}",
        dimension=1,
        pdf=lambda y: stats.norm.pdf(np.asarray(y, dtype=float)[:, 0], scale=sigma),
        sampler=lambda rng, n: sigma * rng.standard_normal(n),
        entropy_closed_form=0.5 * math.log(2.0 * math.pi * math.e * sigma**2),
        support=None,
        sup_density=1.0 / (sigma * math.sqrt(2.0 * math.pi)),
        bounded_away_from_zero=False,
        smoothness_order=math.inf,
        plot_range=((-8.0 * sigma,), (8.0 * sigma,)),
    )
    return _product(f"normal:sigma={sigma:g},d={d}", factor, d)


def exponential(lam: float = 1.0) -> DistributionModel:
    if not lam > 0:
        raise DomainError(f"expo needs lambda > 0, got {lam}")

    def pdf(y):
        y = np.asarray(y, dtype=float)[:, 0]
        return np.where(y >= 0.0, lam * np.exp(-lam * np.maximum(y, 0.0)), 0.0)

    return DistributionModel(
        name=f"expo:lambda={lam:g}",
        dimension=1,
        pdf=pdf,
        sampler=lambda rng, n: rng.exponential(1.0 / lam, size=n),
        entropy_closed_form=1.0 - math.log(lam),
        support=((0.0,), (math.inf,)),
        sup_density=lam,
        bounded_away_from_zero=False,
        smoothness_order=math.inf,
        plot_range=((0.0,), (40.0 / lam,)),
    )


def _cosine_factor() -> DistributionModel:
    def pdf(y):
        y = np.asarray(y, dtype=float)[:, 0]
        return np.where((y >= 0.0) & (y <= 1.0), 1.0 - np.cos(2.0 * np.pi * y), 0.0)

    def sampler(rng, n):
        # rejection from U[0,1] under the envelope 2; acceptance rate 1/2
        out = np.empty(0)
        while out.size < n:
            m = 2 * (n - out.size) + 16
            x = rng.uniform(0.0, 1.0, size=m)
            keep = rng.uniform(0.0, 2.0, size=m) < 1.0 - np.cos(2.0 * np.pi * x)
            out = np.concatenate([out, x[keep]])
        return out[:n]

    return DistributionModel(
        name="cosine",
        dimension=1,
        pdf=pdf,
        sampler=sampler,
        entropy_closed_form=math.log(2.0) - 1.0,
        support=((0.0,), (1.0,)),
        sup_density=2.0,
        bounded_away_from_zero=False,
        # every derivative is bounded on [0, 1]
        smoothness_order=math.inf,
    )


def cosine(d: int = 1) -> DistributionModel:
    return _product("cosine" if d == 1 else f"cosine:d={d}", _cosine_factor(), d)


def gaussian_mixture(w: float = 0.5, mu: float = 3.0) -> DistributionModel:
    """w N(0, 1) + (1 - w) N(mu, 1); entropy by adaptive quadrature."""
    if not 0.0 < w < 1.0:
        raise DomainError(f"gaussmix weight must lie in (0, 1), got {w}")

    def pdf1(x):
        return w * stats.norm.pdf(x) + (1.0 - w) * stats.norm.pdf(x, loc=mu)

    def sampler(rng, n):
        first = rng.uniform(size=n) < w
        return rng.standard_normal(n) + np.where(first, 0.0, mu)

    lo, hi = min(0.0, mu) - 12.0, max(0.0, mu) + 12.0
    # no closed form exists; quadrature to ~1e-12 stands in for one
    ent, _ = integrate.quad(
        lambda x: -pdf1(x) * math.log(pdf1(x)), lo, hi, points=sorted({0.0, mu}), epsabs=1e-13, limit=400
    )
    grid = np.linspace(lo, hi, 20001)
    i = int(np.argmax(pdf1(grid)))
    peak = optimize.minimize_scalar(
        lambda x: -pdf1(x), bounds=(grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]),
        method="bounded", options={"xatol": 1e-12},
    )
    return DistributionModel(
        name=f"gaussmix:w={w:g},mu={mu:g}",
        dimension=1,
        pdf=lambda y: pdf1(np.asarray(y, dtype=float)[:, 0]),
        sampler=sampler,
        entropy_closed_form=float(ent),
        support=None,
        sup_density=float(-peak.fun) * (1.0 + 1e-9),
        bounded_away_from_zero=False,
        smoothness_order=math.inf,
        plot_range=((lo + 4.0,), (hi - 4.0,)),
    )


def _parse_params(text: str) -> dict[str, str]:
    params = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        key, eq, value = part.partition("=")
        if not eq or not value:
            raise ParseError(f"bad model parameter {part!r}; expected key=value")
        params[key.strip()] = value.strip()
    return params


_BUILDERS = {
    "uniform": (uniform, {"d": int, "a": float, "b": float}),
    "normal": (normal, {"sigma": float, "d": int}),
    "expo": (exponential, {"lambda": float}),
    "cosine": (cosine, {"d": int}),
    "gaussmix": (gaussian_mixture, {"w": float, "mu": float}),
}


def parse_model(text: str) -> DistributionModel:
    """Build a model from a spec string such as ``normal:sigma=1``."""
    name, _, rest = text.strip().partition(":")
    name = name.lower()
    if name not in _BUILDERS:
        raise ParseError(f"unknown model {name!r}; choose from {sorted(_BUILDERS)}")
    builder, types = _BUILDERS[name]
    kwargs = {}
    for key, value in _parse_params(rest).items():
        if key not in types:
            raise ParseError(f"model {name!r} has no parameter {key!r}")
        try:
            kwargs["lam" if key == "lambda" else key] = types[key](value)
        except ValueError as exc:
            raise ParseError(f"bad value {value!r} for {name}:{key}") from exc
    return builder(**kwargs)


def log_squared_moment(model: DistributionModel, draws: int = 1_000_000, seed: int = 0) -> float:
    """Monte-Carlo E[log^2 f(X)], a finiteness proxy for the log-moment condition."""
    x = sample(model, draws, seed).observations
    with np.errstate(divide="ignore"):
        lf = np.log(model.pdf(x))
    return float(np.mean(lf**2))
