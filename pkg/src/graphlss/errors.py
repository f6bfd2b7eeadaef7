"""Exception types shared across the pipeline.

The command line tool maps these onto exit codes: bad input data exits
with 2, numeric failures during training exit with 3. Anything else is
a plain bug and is allowed to surface as a traceback.
"""


class DataError(Exception):
    """Raised when input files are missing, malformed, or inconsistent."""


class GraphFormatError(DataError):
    """Raised when a serialized graph fails magic, version, or bounds checks."""


class NumericError(Exception):
    """Raised when training produces non-finite losses or parameters."""
