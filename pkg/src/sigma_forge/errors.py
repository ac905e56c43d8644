"""Exception types raised by sigma_forge."""


class SigmaForgeError(Exception):
    """Base class for all library errors."""


class NonInvertibleMetric(SigmaForgeError):
    pass


class DegenerateVolume(SigmaForgeError):
    pass


class NotOriented(SigmaForgeError):
    pass


class DegenerateFrame(SigmaForgeError):
    pass


class SingularCoframe(SigmaForgeError):
    pass


class NotARotation(SigmaForgeError):
    pass


class GridTooSmall(SigmaForgeError):
    pass


class ChartViolation(SigmaForgeError):
    pass


class StepRejected(SigmaForgeError):
    pass


class FormatError(SigmaForgeError):
    """Malformed SGF1 file or unsupported payload."""


class NonPeriodicDomain(UserWarning):
    """Integration identities only hold up to boundary terms on this grid."""
