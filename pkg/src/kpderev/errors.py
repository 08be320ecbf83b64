"""Exception types shared across the toolkit."""


class DereverbError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(DereverbError):
    """Invalid configuration value. Message carries the offending field path."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class AudioFormatError(DereverbError):
    """Unsupported audio container or encoding."""


class NumericsError(DereverbError):
    """Non-finite value produced while filtering. Carries grid coordinates."""

    def __init__(self, frame: int, bin_index: int, detail: str = ""):
        self.frame = frame
        self.bin_index = bin_index
        msg = f"non-finite value at frame {frame}, bin {bin_index}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
