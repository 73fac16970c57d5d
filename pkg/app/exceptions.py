"""
Exception hierarchy shared by the simulator, the data layer and the CLI
File: EquivariantQCNN/app/exceptions.py
"""


class EQCNNError(Exception):
    """Base class for every error raised by the package"""


class DomainError(EQCNNError, ValueError):
    """Input outside the domain of an operation"""


class UnsupportedError(EQCNNError, NotImplementedError):
    """Valid request that this implementation does not handle"""


class NotReducibleError(DomainError):
    """A kept qubit set is not closed under a representation"""


class ParseError(DomainError):
    """Malformed binary input; ``offset`` is the byte position of the problem"""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class ConfigError(EQCNNError):
    """Invalid configuration file or value"""

    def __init__(self, message, line=None, column=None, key=None):
        self.line = line
        self.column = column
        self.key = key
        details = []
        if key is not None:
            details.append(f"key '{key}'")
        if line is not None:
            details.append(f"line {line}")
        if column is not None:
            details.append(f"column {column}")
        if details:
            message = f"{message} ({', '.join(details)})"
        super().__init__(message)
