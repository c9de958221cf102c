"""Exception types and the unbounded-result sentinels."""

from __future__ import annotations

import math


class TimedilError(Exception):
    """Base class for all errors raised by this package."""


class SingularityError(TimedilError, ValueError):
    """A potential or integral was requested at/over a point-mass location."""


class GeometryError(TimedilError, ValueError):
    """Geometric preconditions violated (e.g. radius >= L/2)."""


class NonConvergenceError(TimedilError, RuntimeError):
    """Quadrature or Monte Carlo could not reach the requested accuracy."""


class OverflowGuardError(TimedilError, ValueError):
    """Requested size exceeds the range in which results are kept exact."""


class RegimeError(TimedilError, ValueError):
    """A formula was applied outside its stated regime of validity."""


class ConfigError(TimedilError, ValueError):
    """Malformed experiment/mass configuration."""


class Unbounded:
    """Sentinel for a timescale that does not exist as a finite number.

    Instances order above every real number so ``min``/``sorted`` behave, and
    ``float(x)`` gives ``inf`` for plotting. They are never equal to a float.
    """

    __slots__ = ("label",)

    def __init__(self, label: str):
        self.label = label

    def __repr__(self):
        return self.label

    __str__ = __repr__

    def __float__(self):
        return math.inf

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash(self.label)

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self or isinstance(other, Unbounded)

    def __gt__(self, other):
        return not isinstance(other, Unbounded)

    def __ge__(self, other):
        return True


#: no dephasing: all branch potentials coincide
INFINITE = Unbounded("INFINITE")
#: light clock never shows appreciable deviation (zero delay spread)
NO_HORIZON = Unbounded("NO_HORIZON")
#: self-consistent equation has no root inside the supplied time window
NO_SOLUTION = Unbounded("NO_SOLUTION")


def is_unbounded(x) -> bool:
    return isinstance(x, Unbounded)
