"""Exception types shared across the package.

The CLI maps these onto distinct exit codes (see cli.py), so keep the
hierarchy flat and stable.
"""


class GridArenaError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(GridArenaError):
    """Inconsistent run setup: player counts, groupings, manifests, paths."""


class GenerationError(GridArenaError):
    """A procedural generator exhausted its retry budget."""


class LevelParseError(GridArenaError):
    """A level file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
