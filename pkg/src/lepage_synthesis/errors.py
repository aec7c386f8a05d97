class LepageError(Exception):
    pass


class ParseError(LepageError, ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class PreconditionError(LepageError, ValueError):
    pass


class OrderCapError(PreconditionError):
    pass


class IndexRangeError(PreconditionError):
    pass


class OpaqueDerivativeError(LepageError, ValueError):
    pass


class SingularExpressionError(LepageError, ValueError):
    pass
