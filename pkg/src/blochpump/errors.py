"""Exception types shared across the package.

Every error carries enough context (k, t, eps, norms) in its message to
locate the offending mesh node; callers are expected to let them propagate.
"""


class BlochPumpError(Exception):
    """Base class for all package errors."""


class SingularGenerators(BlochPumpError):
    """Lattice generator matrix is numerically singular."""


class CoefficientOutsideCutoff(UserWarning):
    """A potential coupling lies beyond the plane-wave cutoff and was dropped."""


class EigenFailure(BlochPumpError):
    """Dense Hermitian eigensolver did not converge."""


class GapClosed(BlochPumpError):
    """Fermi gap at or below the configured threshold."""


class ContinuityBreak(BlochPumpError):
    """Adjacent projectors differ by norm >= 1, mesh too coarse for a homotopy."""


class RankDrop(BlochPumpError):
    """Parallel transport proposal lost rank (projector step too large)."""


class NontrivialBundle(BlochPumpError):
    """Holonomy logarithm has no continuous branch; fixed-time bundle not trivial."""


class SingularOverlap(BlochPumpError):
    """Wilson-link overlap determinant too small to define a connection."""


class GaugeMismatch(BlochPumpError):
    """Endpoint frames were not produced by one continuous transport."""


class NonIntegral(BlochPumpError):
    """Plaquette curvature sum does not round to an integer within tolerance."""


class NonRealCurvature(BlochPumpError):
    """Curvature trace has an imaginary residue above tolerance."""


class SpectrumNotSplit(BlochPumpError):
    """Almost-projector spectrum not separated around {0, 1}."""


class SingularNormalizer(BlochPumpError):
    """Intertwiner normalizer has an eigenvalue below 1/2."""


class StencilOutOfRange(BlochPumpError):
    """A derivative stencil would leave the time mesh."""


class StepTooLarge(BlochPumpError):
    """Propagation step exceeds c*eps."""


class MeshMismatch(BlochPumpError):
    """Two fields were built on different meshes."""


class BandDegenerate(BlochPumpError):
    """Requested band is not isolated on the mesh."""


class GaugeDiscontinuity(BlochPumpError):
    """A frame field has a detectable jump between neighboring nodes."""


class AsymmetricMesh(BlochPumpError):
    """Symmetry check requires a k-mesh closed under k -> -k."""


class ParseError(BlochPumpError):
    """Config text could not be parsed."""


class ValidationError(BlochPumpError):
    """Config parsed but violates constraints; message lists all of them."""
