"""Exception hierarchy shared by every module of the toolkit."""


class IsoprofileError(ValueError):
    """Base class for all domain errors raised by isoprofile."""


class DegenerateInput(IsoprofileError):
    """Point set is flat or the resulting body has (numerically) empty interior."""


class OriginNotInterior(IsoprofileError):
    pass


class MethodDimensionMismatch(IsoprofileError):
    pass


class DimensionMismatch(IsoprofileError):
    pass


class CenterOutsideBody(IsoprofileError):
    pass


class UnsupportedBody(IsoprofileError):
    """Operation is not defined for this kind of body (e.g. polar of an off-center ball)."""


class NoCommonCore(IsoprofileError):
    pass


class PointOutsideSource(IsoprofileError):
    pass


class InvalidRadii(IsoprofileError):
    pass


class InteriorPoint(IsoprofileError):
    pass


class NonpositiveAngle(IsoprofileError):
    pass


class NonpositiveVolume(IsoprofileError):
    pass


class VolumeOutOfRange(IsoprofileError):
    pass


class InvalidVolume(IsoprofileError):
    pass


class ResolutionTooCoarse(IsoprofileError):
    pass


class WitnessNotBall(IsoprofileError):
    pass
