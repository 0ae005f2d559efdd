"""Exception and warning types shared across the package."""


class PTwistError(Exception):
    """Base class for all package-specific errors."""


class NotSymplectic(PTwistError):
    """The candidate boundary matrix does not preserve the symplectic form."""


class NotFiniteOrder(PTwistError):
    """No power of the boundary matrix up to k_max equals the identity."""


class NotOrthogonalSymplectic(PTwistError):
    """Operation requires an orthogonal-symplectic boundary matrix.

    Any finite-order symplectic matrix is conjugate to an orthogonal one;
    the caller must supply the conjugated representative.
    """


class LogarithmBranchAmbiguous(PTwistError):
    """A boundary eigen-angle equals pi and no branch sign was supplied."""


class InsufficientModes(PTwistError):
    """The frequency range could not be expanded enough to fill the space."""


class EvenMRequired(PTwistError):
    """Truncation counts real dimensions and must keep complex modes whole."""


class DimensionMismatch(PTwistError):
    """Coefficient vector length does not match the space dimension."""


class IntegratorFailure(PTwistError):
    """The ODE integrator failed (step underflow or non-convergence)."""


class CrossingUnresolved(PTwistError):
    """An eigenvalue sits at zero without a resolvable sign bracket."""


class MissingContext(PTwistError):
    """A hypothesis check needs a field that was not supplied."""


class UnknownFamily(PTwistError):
    """Requested built-in Hamiltonian family does not exist."""


class NegativeAnnulusValue(UserWarning):
    """Sampled H < 0 on the truncation annulus; quartic cap floored at 0."""


class NoSaddleFound(PTwistError):
    """Every search start converged to the trivial point or diverged."""


class NonstationaryLimit(PTwistError):
    """Saddle iteration stalled with gradient norm above tolerance."""


class RefinementDiverged(PTwistError):
    """Final Newton refinement of an orbit failed to converge."""


class ConstantOrbit(PTwistError):
    """Period analysis requested for a constant trajectory."""


class ShiftTestFailed(PTwistError):
    """Coset arithmetic and the direct shift test disagree."""


class SigmaNonpositive(PTwistError):
    """Degenerate infimum estimate in the multiplier bound; increase m."""


class ConfigError(PTwistError):
    """Invalid scenario configuration; message carries the field path."""


class GapViolationWarning(UserWarning):
    """Some eigenvalue lies within [d/2, 2d]: d is not in a spectral gap."""


class GcdUnstableWarning(UserWarning):
    """Active-harmonic set is threshold-sensitive; both candidates reported."""
