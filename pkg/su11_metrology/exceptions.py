"""Exceptions raised by the bound pipeline and the Fock oracle."""

from typing import Optional


class Su11MetrologyError(Exception):
    """Base class for package errors."""


class DegenerateMoments(Su11MetrologyError, ValueError):
    """The loss quadratic form is singular, e.g. an arm carries no photons."""


class ZeroInformation(Su11MetrologyError, ValueError):
    """The state carries no phase information; the sensitivity bound is infinite."""


class NonPositivePhotonNumber(Su11MetrologyError, ValueError):
    """SQL and HL are undefined for a non-positive photon number."""


class BracketFailure(Su11MetrologyError, RuntimeError):
    """A threshold bracket could not be established or monotonicity broke."""


class TruncationOverflow(Su11MetrologyError, ValueError):
    """Probability leaked beyond the Fock cutoff."""

    def __init__(self, leakage: float, n_max: int, limit: Optional[float] = None):
        self.leakage = leakage
        self.n_max = n_max
        message = f"truncation leakage {leakage:.3e} at n_max={n_max}"
        if limit is not None:
            message += f" exceeds {limit:.1e}"
        super().__init__(message)


class IllConditioned(Su11MetrologyError, ValueError):
    """The density matrix lost too much trace to truncation."""

    def __init__(self, trace_deficit: float, limit: float):
        self.trace_deficit = trace_deficit
        super().__init__(
            f"trace deficit {trace_deficit:.3e} exceeds {limit:.1e}; raise n_max"
        )
