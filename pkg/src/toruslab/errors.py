"""Exception hierarchy shared by every toruslab module."""


class ToruslabError(Exception):
    """Base class for all errors raised by toruslab."""


class NotSquare(ToruslabError, ValueError):
    pass


class NotUnimodular(ToruslabError, ValueError):
    """|det| != 1 where an automorphism (or an exact inverse) is required."""


class NotErgodic(ToruslabError, ValueError):
    pass


class PrecisionExhausted(ToruslabError, ArithmeticError):
    """Root isolation failed to separate eigenvalue moduli at the allowed precision."""


class ZeroRadius(ToruslabError, ValueError):
    pass


class NonSymmetricExplicitInput(ToruslabError, ValueError):
    """Explicit coefficients with c[-k] != conj(c[k])."""


class BadExponent(ToruslabError, ValueError):
    pass


class DegenerateGrid(ToruslabError, ValueError):
    pass


class DimensionMismatch(ToruslabError, ValueError):
    pass


class EscapeCapExceeded(ToruslabError, RuntimeError):
    """A support frequency was not certified to leave the support within the cap."""

    def __init__(self, frequency, cap):
        self.frequency = tuple(frequency)
        self.cap = cap
        super().__init__(
            f"frequency {self.frequency} not certified to escape the support "
            f"after {cap} iterations; raise the cap"
        )


class InsufficientSamples(ToruslabError, ValueError):
    pass


class DegenerateVariance(ToruslabError, ValueError):
    """sigma^2 = 0: the observable behaves like a coboundary g o T - g."""
