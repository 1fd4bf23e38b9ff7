"""Exception types raised by the toolkit."""


class RieszDecayError(ValueError):
    """Base class for all toolkit errors."""


class AlphaOutOfRange(RieszDecayError):
    pass


class BetaOutOfRange(RieszDecayError):
    pass


class NonpositiveTime(RieszDecayError):
    pass


class ZeroFrequency(RieszDecayError):
    pass


class ZeroFrequencyInWindow(RieszDecayError):
    pass


class QuadratureNotConverged(RieszDecayError):
    pass


class EmptyProbeSet(RieszDecayError):
    pass


class EmptyField(RieszDecayError):
    pass


class QNotFinite(RieszDecayError):
    pass


class EtaPOutOfRange(RieszDecayError):
    pass


class DimensionMismatch(RieszDecayError):
    pass


class LevelTooDeep(RieszDecayError):
    pass


class UnsupportedShape(RieszDecayError):
    pass


class ProfileNotConverged(RieszDecayError):
    pass


class InadmissibleAlpha(RieszDecayError):
    pass


class ExponentNotSubcritical(RieszDecayError):
    pass
