"""Exception types shared across the package.

Each category maps to a distinct failure the CLI reports with its own exit
code: configuration problems, dataset problems, and numeric breakdown.
"""


class HdkgError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(HdkgError):
    """Bad configuration: unknown key, unparseable value, invalid combination."""


class DatasetFormatError(HdkgError):
    """Dataset directory or cache file is missing pieces or malformed."""


class TripleParseError(DatasetFormatError):
    """A triple line could not be parsed; carries file and line number."""

    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = str(path)
        self.lineno = lineno


class CheckpointFormatError(HdkgError):
    """Checkpoint file has a bad magic, version, or truncated payload."""


class StalenessError(HdkgError):
    """Derived tensors (hypervectors, memory) no longer match the embeddings."""


class UndefinedSimilarityError(HdkgError):
    """Similarity is undefined for the given inputs (e.g. cosine of a zero vector)."""


class NumericError(HdkgError):
    """Non-finite values showed up where the math requires finite ones."""


class ShapeError(ValueError, HdkgError):
    """Array arguments disagree on dimensions."""
