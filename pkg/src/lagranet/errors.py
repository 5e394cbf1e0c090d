"""Exception types shared across the package."""


class LagranetError(Exception):
    """Base class for every error raised by this package."""


class DisconnectedGraph(LagranetError):
    """The edge list does not connect all nodes."""


class NonPositiveWeight(LagranetError):
    """An edge weight is zero or negative."""


class SelfLoop(LagranetError):
    """An edge connects a node to itself."""


class IndexOutOfRange(LagranetError):
    """A node index falls outside 1..n."""


class DimensionMismatch(LagranetError):
    """A stacked vector has the wrong length for the network."""


class NonPositiveEta(LagranetError):
    """The proximal scalar eta must be strictly positive."""


class CustomSolverFailure(LagranetError):
    """A user-supplied local solver raised or returned garbage.

    Carries the index of the agent whose solver failed, when known.
    """

    def __init__(self, message, agent=None):
        super().__init__(message)
        self.agent = agent


class StepSizeViolation(LagranetError):
    """eta does not clear rho * lambda_max, so eta*I - rho*W is not PD."""

    def __init__(self, eta, bound):
        super().__init__(
            f"eta={eta!r} must exceed rho*lambda_max={bound!r} "
            "for the penalized prox matrix to be positive definite"
        )
        self.eta = eta
        self.bound = bound


class LambdaSumNonzero(LagranetError):
    """Initial multipliers must sum to the zero block across agents."""


class InfeasibleInitialPoint(LagranetError):
    """An initial local iterate violates its agent's constraint set."""


class UnboundedBelow(LagranetError):
    """The aggregated objective has no finite minimizer."""


class InfeasibleDemand(LagranetError):
    """Total demand falls outside the aggregate generation box."""


class UncertifiedParams(LagranetError):
    """Metric norms require parameters certified by validate_params."""


class MissingOracleField(LagranetError):
    """An envelope was requested that needs an oracle field not present."""


class MissingCoefficientFile(LagranetError):
    """The generator cost coefficient file could not be found."""


class ScenarioError(LagranetError):
    """A scenario file is malformed or internally inconsistent."""
