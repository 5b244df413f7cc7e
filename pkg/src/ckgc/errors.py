"""Exception hierarchy shared by all ckgc modules.

Each class carries the process exit code the CLI maps it to.
"""


class CkgcError(Exception):
    """Base class for all ckgc errors."""

    exit_code = 2


class UsageError(CkgcError):
    """Bad command line, unknown config key, missing required flag."""

    exit_code = 1


class DataError(CkgcError):
    """Malformed or inconsistent input data (parse errors, misaligned files)."""

    exit_code = 2


class ContractError(CkgcError):
    """An operation was called outside its contract (shape mismatch, bad ids)."""

    exit_code = 2


class NumericError(CkgcError):
    """Non-finite values produced during numeric computation."""

    exit_code = 3
