"""Exception types shared across the package."""


class KdvLabError(Exception):
    """Base class for all kdvlab errors."""


class OddPointCount(KdvLabError):
    """Grid point count must be even (real FFT layout, single Nyquist mode)."""


class KappaTooSmall(KdvLabError):
    """kappa below 1, or below the admissibility threshold 1 + C*||u||^2."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class NearSingularOperator(KdvLabError):
    """Forward operator -u'' + u + kappa^2 is numerically singular."""


class SeriesNotContracting(KdvLabError):
    """Resolvent series precondition kappa^{-1/2}||u||_{H^-1_k} <= 1/2 fails."""


class NoConvergence(KdvLabError):
    """Iteration hit its cap before reaching the requested tolerance."""


class NegativeDensity(KdvLabError):
    """rho dropped below the -1e-9 floor; grid under-resolved or kappa too small."""


class DivisionByZeroNorm(KdvLabError):
    """A ratio against the norm of an identically-zero field was requested."""


class Diverged(KdvLabError):
    """Time integration produced non-finite values or max|u| > 1e6."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class UnresolvedKernel(KdvLabError):
    """kappa*dx > 0.5: the grid cannot resolve the e^{-kappa|x-y|} kernel."""


class BottomTooShallow(KdvLabError):
    """Bottom profile violates 1 - c >= margin somewhere."""


class NonUniformSaveInterval(KdvLabError):
    """Trajectory snapshots are not equispaced in time."""


class ConfigError(KdvLabError):
    """Run configuration failed validation; .errors lists (field, message)."""

    def __init__(self, errors):
        super().__init__("; ".join(f"{f}: {m}" for f, m in errors))
        self.errors = list(errors)


class AliasedTransform(UserWarning):
    """Interpolated field carries more than the allowed out-of-band energy."""
