"""Exception types shared across the package."""


class SensefeatError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SensefeatError):
    """Study configuration is missing, malformed, or inconsistent."""


class IngestError(SensefeatError):
    """A sensor file is structurally unreadable (missing file, wrong header)."""


class InsufficientData(SensefeatError):
    """An operation received fewer samples than its contract requires."""


class DegenerateClustering(SensefeatError):
    """Clustering was asked for more clusters than there are distinct points."""


class DegenerateFit(SensefeatError):
    """Regression input admits no unique least-squares solution."""
