"""Exception hierarchy shared by the workbench modules."""


class WorkbenchError(Exception):
    pass


class StructureError(WorkbenchError):
    """A structure violates a representation invariant."""


class StructureParseError(StructureError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class SignatureMismatch(WorkbenchError):
    pass


class PreconditionError(WorkbenchError):
    """An operation was called on inputs outside its contract."""

    def __init__(self, message: str, witness=None):
        super().__init__(message if witness is None else f"{message}: {witness}")
        self.witness = witness


class BudgetExceeded(WorkbenchError):
    pass
