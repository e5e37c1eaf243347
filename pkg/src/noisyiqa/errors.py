"""Exception hierarchy.

The CLI maps each family onto an exit code: configuration problems exit 2,
malformed data files exit 3, missing or stale upstream artifacts exit 4.
"""


class BenchError(Exception):
    exit_code = 1


class ConfigError(BenchError, ValueError):
    exit_code = 2


class DataFormatError(BenchError, ValueError):
    exit_code = 3


class LengthError(DataFormatError):
    """Payload size disagrees with the header or record arithmetic."""


class UnsupportedModelError(DataFormatError):
    pass


class IncompleteInputsError(BenchError):
    exit_code = 4


class IncompleteGroupError(IncompleteInputsError):
    def __init__(self, label, missing):
        self.label = label
        self.missing = list(missing)
        shown = ", ".join(f"{img}:{cond}" for img, cond in self.missing[:10])
        more = "" if len(self.missing) <= 10 else f" (+{len(self.missing) - 10} more)"
        super().__init__(f"group {label!r} is missing scores for {shown}{more}")


class ProvenanceError(IncompleteInputsError):
    """A stage's recorded input hash no longer matches what is on disk."""
