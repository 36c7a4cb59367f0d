"""Exception hierarchy shared across the package."""


class PromptSegError(Exception):
    """Base class for all promptseg errors."""


class InputFormatError(PromptSegError):
    """Undecodable image, malformed prompt, or out-of-bounds input."""


class DimensionMismatchError(PromptSegError):
    """Two rasters that must share a shape do not."""


class MalformedRleError(PromptSegError):
    """RLE counts do not cover exactly width*height pixels."""


class BackendConfigError(PromptSegError):
    """An inference or embedding backend cannot be constructed or run."""


class SceneCapacityError(BackendConfigError):
    """A synthetic scene holds more shapes than available prototype channels."""


class SchemaError(PromptSegError):
    """JSON document violates the expected schema; carries the JSON path."""

    def __init__(self, message: str, json_path: str = "$"):
        super().__init__(f"{json_path}: {message}")
        self.json_path = json_path
