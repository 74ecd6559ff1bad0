"""Exception types raised across the laboratory."""

from __future__ import annotations


class BelabError(Exception):
    """Base class for every error the laboratory raises on purpose."""


class DomainError(BelabError, ValueError):
    """An argument lies outside the domain of a formula (e.g. rho past pi/sqrt(lambda))."""


class ConfigError(BelabError, ValueError):
    """A run configuration, manifold file or horizon file failed to parse or validate."""

    def __init__(self, message: str, key: str | None = None, source: str | None = None):
        self.key = key
        self.source = source
        self.message = message
        where = ""
        if source:
            where += f"{source}: "
        if key:
            where += f"[{key}] "
        super().__init__(f"{where}{message}")


class SingularMetricError(BelabError, ValueError):
    """The metric is not invertible (or not positive definite) at a point."""


class IntegrationError(BelabError, RuntimeError):
    """An ODE integration could not meet its tolerance."""


class ConvergenceError(BelabError, RuntimeError):
    """Shooting refinement failed; carries the best graph upper bound."""

    def __init__(self, message: str, upper_bound: float, residual: float):
        self.upper_bound = upper_bound
        self.residual = residual
        self.graph_only = True
        super().__init__(f"{message} (graph upper bound {upper_bound:.6g}, residual {residual:.3g})")


class SolverError(BelabError, RuntimeError):
    """A sparse linear solve did not reach its residual contract."""

    def __init__(self, message: str, residual: float, iterations: int | None = None):
        self.residual = residual
        self.iterations = iterations
        detail = f"residual {residual:.3g}"
        if iterations is not None:
            detail += f" after {iterations} iterations"
        super().__init__(f"{message} ({detail})")


class HypothesisViolation(BelabError):
    """A theorem hypothesis does not hold for the supplied data."""

    def __init__(self, hypothesis: str, value: float | None = None, detail: str = ""):
        self.hypothesis = hypothesis
        self.value = value
        msg = f"hypothesis '{hypothesis}' violated"
        if value is not None:
            msg += f" (measured {value:.6g})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class PreconditionError(HypothesisViolation):
    """A checker precondition failed; names the failed hypothesis."""


class MultiplicityError(BelabError, RuntimeError):
    """The discrete kernel of an operator is not one-dimensional."""


class LevelSetError(BelabError, RuntimeError):
    """No admissible nodes were found on a requested level set."""


class EnumerationOverflow(BelabError, RuntimeError):
    """Word enumeration exceeded its configured budget."""
