"""Exception hierarchy shared by every numerical module."""


class KinhomError(Exception):
    """Base class for all library errors."""


class DimensionError(KinhomError, ValueError):
    """Position or momentum dimension does not match the potential."""


class StepSizeError(KinhomError, ValueError):
    """Integrator step exceeds the linear stability bound of the potential."""


class CriticalEnergyError(KinhomError):
    """Energy lies inside the critical band around ``u_max``."""


class EnergyBelowCritical(KinhomError):
    """An operation defined on running shells was given a trapped energy."""


class NoRunningRegion(KinhomError):
    """A singular weight has no admissible sub-domain ``{u < E}``."""


class QuadratureError(KinhomError):
    """Quadrature failed to stabilise under refinement."""


class WellNotFound(KinhomError):
    """No potential well bracketing the anchor at the requested energy."""


class KinkError(KinhomError):
    """Derivative requested at the kink ``|p| = theta(0)`` of the effective Hamiltonian."""


class ProjectionUnavailable(KinhomError):
    """The projection of an observable is not available in closed or tabulated form."""


class ResonantState(KinhomError):
    """Per-axis periods are commensurate; the product formula does not apply."""
