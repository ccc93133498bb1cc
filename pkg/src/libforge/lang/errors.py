class LangError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col

    def __str__(self):
        if self.line:
            return f"line {self.line}, column {self.col}: {self.message}"
        return self.message


class ParseError(LangError):
    pass


class ExecError(LangError):
    """Runtime failure inside a program (unbound name, type error, ...)."""


class BudgetExceeded(LangError):
    pass
