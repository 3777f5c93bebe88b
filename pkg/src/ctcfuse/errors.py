"""Exception types shared across the toolkit.

Everything user-facing derives from ToolkitError so the CLI can map
data/format problems to a single exit code.
"""


class ToolkitError(Exception):
    """Base class for data and format errors raised by this package."""


class ManifestError(ToolkitError):
    """Malformed dataset manifest (bad JSON line, schema violation, duplicate id)."""


class EmissionFormatError(ToolkitError):
    """Emission binary file violates the EMIS format (magic, version, sizes)."""


class ArpaParseError(ToolkitError):
    """ARPA language-model text could not be parsed."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class VocabularyError(ToolkitError):
    """Invalid decoder vocabulary definition or sidecar file."""


class GridSearchError(ToolkitError):
    """A grid-search cell failed; the message names the offending point."""
