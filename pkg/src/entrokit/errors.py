"""Exception hierarchy shared by all entrokit modules."""

from __future__ import annotations


class EntrokitError(Exception):
    """Base class for every error raised by entrokit."""

    kind = "error"


class DomainError(EntrokitError, ValueError):
    """An argument lies outside the domain where an operation is defined."""

    kind = "domain"


class GridSizeError(DomainError):
    """An evaluation grid would exceed the configured point cap."""

    kind = "grid_size"


class NumericalError(EntrokitError, ArithmeticError):
    """A numerical procedure failed to produce a usable value."""

    kind = "numeric"


class QuadratureError(NumericalError):
    """Adaptive quadrature stopped before reaching its tolerance.

    ``achieved`` holds the last error estimate reached.
    """

    kind = "quadrature"

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved tolerance {achieved:.3g})")
        self.achieved = float(achieved)


class IsolatedPointsError(NumericalError):
    """Leave-one-out density vanished at some observations.

    ``indices`` are row indices into the dataset as supplied by the caller.
    """

    kind = "isolated_points"

    def __init__(self, indices):
        self.indices = tuple(int(i) for i in indices)
        shown = ", ".join(str(i) for i in self.indices[:10])
        more = "" if len(self.indices) <= 10 else ", ..."
        super().__init__(
            f"leave-one-out density is not positive at {len(self.indices)} "
            f"observation(s): [{shown}{more}]"
        )


class ParseError(EntrokitError, ValueError):
    """Malformed input file or specification string."""

    kind = "parse"
