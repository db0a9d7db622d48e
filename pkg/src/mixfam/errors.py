"""Semantic exception hierarchy for the mixfam package.

Public functions raise these instead of bare ValueError so callers (and the
CLI exit-code contract) can tell configuration mistakes apart from numerical
failures.
"""


class MixfamError(Exception):
    """Base error for this package."""


class ConfigError(MixfamError, ValueError):
    """Invalid configuration, schema violation, or unknown name."""


class NumericalError(MixfamError, ArithmeticError):
    """A computation failed for numerical reasons."""


class SimplexViolation(ConfigError):
    """Weight / eta vector outside the open simplex domain."""


class BasisMismatch(ConfigError):
    """Operation across mixtures that do not share a component basis."""


class UnsupportedPair(ConfigError):
    """No closed form available for this pair of component kinds."""


class UnsupportedSupport(ConfigError):
    """Distribution lacks the CDF / support structure the operation needs."""


class UnknownGenerator(ConfigError):
    """Generator name not in the catalog."""


class NonDifferentiableAt1(ConfigError):
    """Generator has no derivative at u=1 (extension undefined)."""


class AlphaOutOfRange(ConfigError):
    """Skew / divergence parameter alpha outside its admissible range."""


class EmptyInput(ConfigError):
    """An aggregate of zero items was requested."""


class NotGaussianBasis(ConfigError):
    """Operation requires a basis of univariate Gaussian components."""


class TooManyComponents(ConfigError):
    """Exhaustive permutation search refused above the size cap."""


class ZeroDenominator(NumericalError):
    """Sampled ratios average to one; the shift construction is undefined."""


class DegenerateRatio(NumericalError):
    """Could not obtain positive-density draws from the sampling side."""


class AllZeroDensity(NumericalError):
    """A sample point has zero density under every basis component."""


class DivergentIntegralWarning(RuntimeWarning):
    """Sampled integrand terms blew up; the target integral may diverge."""
