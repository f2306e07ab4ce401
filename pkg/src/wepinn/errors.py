"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A configuration object violates its own invariants."""


class ContractError(ValueError):
    """A caller violated a documented precondition."""


class AdmissibilityError(ValueError):
    """A state is outside the physically admissible set (rho<=0, p<=0, h<=0)."""


class NumericsError(RuntimeError):
    """An iterative solver failed to converge or hit an unsupported regime."""


class TrainingError(RuntimeError):
    """Training produced non-finite losses or gradients."""
