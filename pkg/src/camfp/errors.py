"""Error types shared across the toolkit."""


class CamfpError(Exception):
    """Base class for toolkit errors."""


class ShapeError(CamfpError, ValueError):
    """Array dimensions are inconsistent with the operation's contract."""


class DecodeError(CamfpError, ValueError):
    """A file or byte stream could not be decoded; message names the format."""


class CapacityError(CamfpError, ValueError):
    """A sampling request exceeds what the source image can supply."""


class DataError(CamfpError, ValueError):
    """Dataset contents violate a contract (bad label, missing file, ...)."""


class SplitError(CamfpError, ValueError):
    """A train/test split cannot be formed."""


class AuditError(CamfpError, RuntimeError):
    """A pipeline safety audit failed (PRNU still detectable, leakage, ...)."""
