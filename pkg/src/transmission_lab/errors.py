"""Exception hierarchy shared by all modules."""


class TransmissionLabError(Exception):
    """Base class for all package errors."""


# geometry
class NonSimpleCurve(TransmissionLabError):
    pass


class InnerNotContained(TransmissionLabError):
    pass


class SupportTouchesInterface(TransmissionLabError):
    pass


class NonPositiveSpeeds(TransmissionLabError):
    pass


class PointOutsideDomain(TransmissionLabError):
    pass


class DegenerateTangent(TransmissionLabError):
    pass


# kernel
class EmptyKernel(TransmissionLabError):
    pass


class NegativeAmplitude(TransmissionLabError):
    pass


class NonpositiveRelaxationTime(TransmissionLabError):
    pass


class NonuniformTimeGrid(TransmissionLabError):
    pass


class NotAContraction(TransmissionLabError):
    pass


# rays
class LeftDomain(TransmissionLabError):
    """Integrator escaped the domain without registering a boundary hit."""


class StiffnessFailure(TransmissionLabError):
    pass


class NonCharacteristicInput(TransmissionLabError):
    pass


class ZeroTau(TransmissionLabError):
    pass


# solver
class InterfaceMismatch(TransmissionLabError):
    pass


class CflViolation(TransmissionLabError):
    pass


class GridSpecError(TransmissionLabError):
    pass


class NanDetected(TransmissionLabError):
    pass


# observability
class NonpositiveEnergy(TransmissionLabError):
    pass


class EigensolverFailure(TransmissionLabError):
    pass


# cli
class ConfigParseError(TransmissionLabError):
    pass


class MissingArtifact(TransmissionLabError):
    pass
