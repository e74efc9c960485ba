"""Exception hierarchy shared by every relgate package."""


class RelGateError(Exception):
    """Base class; the CLI turns these into exit code 1."""


class DimensionError(RelGateError, ValueError):
    """Tensor shapes violate an operation's contract."""


class ContractError(RelGateError):
    """A pre-condition of an operation does not hold."""


class ConfigError(RelGateError):
    """Invalid run configuration, or artifacts that do not fit together."""


class DataFormatError(RelGateError):
    """Input files are malformed or inconsistent with the label map."""
