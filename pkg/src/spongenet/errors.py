"""Exception types shared across the package."""


class SpongeNetError(Exception):
    """Base class for all spongenet errors."""


class ShapeError(SpongeNetError):
    """Layer shapes are incompatible with each other or with an input."""


class TraceMismatchError(ShapeError):
    """An activation trace does not match the network it is replayed against."""


class DivergenceError(SpongeNetError):
    """Training produced a non-finite loss or gradient."""


class ConfigError(SpongeNetError):
    """An experiment config file is malformed or contains unknown keys."""


class FormatError(SpongeNetError):
    """A binary artifact (dataset or checkpoint) is corrupt or has the wrong magic."""
