"""Error taxonomy shared by the library and the CLI exit codes."""


class ConfigError(ValueError):
    """Invalid run configuration or CLI arguments (exit code 2)."""


class DataError(ValueError):
    """Unreadable or structurally invalid input data (exit code 3)."""


class NumericalError(RuntimeError):
    """A numeric routine produced non-finite or degenerate output (exit code 4)."""
