"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, data problems with 3, anything else with 4.
"""


class ConfigError(Exception):
    """A configuration value is missing, malformed, or inconsistent."""


class DataError(Exception):
    """An input file cannot be parsed or violates the declared schema."""
