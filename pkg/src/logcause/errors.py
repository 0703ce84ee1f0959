"""Exceptions shared across the pipeline, mapped to CLI exit codes."""


class ConfigError(Exception):
    """Bad run configuration or malformed config file (exit code 1)."""


class DataError(Exception):
    """Unusable input data: empty classes, unknown services, schema violations (exit code 2)."""


class TrainingDiverged(Exception):
    """Training produced a non-finite loss (exit code 3)."""
