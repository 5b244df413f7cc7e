class ExtractorError(Exception):
    """Bad input data or an unresolvable model; maps to exit code 2."""
