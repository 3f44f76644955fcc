"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: usage problems exit 1, any
IbdiarError or I/O failure exits 2, everything else exits 3.
"""


class IbdiarError(Exception):
    """Base class for all toolkit errors."""


class FormatError(IbdiarError):
    """An input file does not match its documented layout."""


class TruncatedFileError(FormatError):
    """A file header promises more payload than the file contains."""


class EmptyStreamError(IbdiarError):
    """Audio too short to produce a single feature frame."""


class DegenerateSegmentError(IbdiarError):
    """A segment holds too few frames to be modeled."""


class StoppingUnsatisfiableError(IbdiarError):
    """A cluster-count stopping rule asks for more clusters than exist."""


class TrainingImpossibleError(IbdiarError):
    """No usable classes remain after pruning short clusters."""


class DivergenceError(IbdiarError):
    """Network training produced a non-finite loss twice."""


class NumericError(IbdiarError):
    """A linear-algebra step failed despite regularization."""


class UndefinedScoreError(IbdiarError):
    """Scoring was requested against an empty reference."""
