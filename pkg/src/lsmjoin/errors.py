"""Exception types shared across the package."""


class LsmJoinError(Exception):
    """Base class for all package errors."""


class StorageError(LsmJoinError):
    """I/O failure in the state backend."""


class CorruptionError(StorageError):
    """A stored block failed its checksum; carries the offending file."""

    def __init__(self, path, detail=""):
        self.path = str(path)
        msg = f"corrupt block in {self.path}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class PlanError(LsmJoinError):
    """Invalid logical plan (parse or validation failure)."""


class SqlParseError(LsmJoinError):
    """Unsupported or malformed query text; carries the offending position."""

    def __init__(self, message, position):
        self.position = position
        super().__init__(f"{message} (at position {position})")


class InterpretError(LsmJoinError):
    """Batch plan interpretation failed (e.g. unknown column)."""


class ConfigError(LsmJoinError):
    """Invalid run configuration, rejected before any event is consumed."""


class OutOfMemory(LsmJoinError):
    """The capped in-memory state store exceeded its byte budget."""


class RejectedEvent(LsmJoinError):
    """An input event could not be processed (e.g. missing key field)."""


class IntegrityError(LsmJoinError):
    """Engine output diverged from the reference join result."""
