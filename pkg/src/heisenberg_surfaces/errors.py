"""Exception hierarchy shared by all modules."""


class HeisenbergError(Exception):
    """Base class for every error raised by the toolkit."""


class BasePointMismatch(HeisenbergError):
    """Two frame vectors living at different points were combined."""


class DegenerateChart(HeisenbergError):
    """The chart has linearly dependent partial derivatives."""


class SingularPoint(HeisenbergError):
    """|N_h| fell below the singular tolerance where a regular point is required."""

    def __init__(self, message, params=None):
        super().__init__(message)
        self.params = params


class DomainError(HeisenbergError):
    """A region, parameter or support escapes the chart domain."""


class SupportError(HeisenbergError):
    """A test function or vector field does not vanish near the region boundary."""


class EmptyCurve(HeisenbergError):
    """An integral curve could not take a single step inside the domain."""


class PoleAt(HeisenbergError):
    """A closed-form profile has a vanishing denominator."""

    def __init__(self, s):
        super().__init__(f"pole at s={s!r}")
        self.s = s


class NotQuadratic(HeisenbergError):
    """<V_eps, T> is not a quadratic polynomial in s."""


class NotACodazziProfile(HeisenbergError):
    """A sampled profile deviates from every closed-form Codazzi solution."""


class PolynomialRoot(HeisenbergError):
    """The vertical-component polynomial has a real root on the sampled range."""


class IdentityViolation(HeisenbergError):
    """A pointwise identity expected to hold failed beyond tolerance."""


class SpecError(HeisenbergError):
    """A surface specification or run configuration is malformed."""
