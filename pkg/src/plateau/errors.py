class ModelError(Exception):
    """Base class for problems with a model or its data."""


class ParseError(ModelError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message


class ValidationError(ModelError):
    pass


class DataError(ModelError):
    pass
