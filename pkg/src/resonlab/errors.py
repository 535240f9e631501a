"""Named error types raised by the computational modules.

Every error derives from :class:`ResonlabError` so the command line can map
computational failures to exit code 1 and everything else to exit code 2.
"""


class ResonlabError(Exception):
    """Base class for named computational failures."""


class SchemaError(ValueError):
    """A potential or run-configuration document violates the schema.

    ``field`` is a dotted path to the offending key.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class SpectralPointError(ResonlabError, ValueError):
    pass


class NearSingular(ResonlabError):
    """|det(I+K)| fell below the configured tolerance."""

    def __init__(self, lam, det_abs, tol):
        self.lam = lam
        self.det_abs = det_abs
        self.tol = tol
        super().__init__(f"|det(I+K)| = {det_abs:.3e} < {tol:.1e} at lambda = {lam}")


class ContourTooClose(ResonlabError):
    pass


class QuadratureUnresolved(ResonlabError):
    pass


class RegionInsufficient(ResonlabError):
    pass


class AliasRisk(ResonlabError):
    pass


class TruncationUnconverged(ResonlabError):
    pass


class UnwrapAmbiguous(ResonlabError):
    pass


class CFLViolation(ResonlabError):
    pass


class BoundaryContamination(ResonlabError):
    pass


class TruncationLeak(ResonlabError):
    pass


class PreconditionPoles(ResonlabError):
    pass


class TailUnconverged(ResonlabError):
    pass


class FloorReached(ResonlabError):
    pass
