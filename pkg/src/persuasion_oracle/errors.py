"""Exception hierarchy.

Every error raised by the library derives from ``PersuasionError``.  The three
intermediate bases decide the CLI exit status: input problems exit with 2,
numerical trouble with 3 and exceeded size caps with 4.
"""


class PersuasionError(Exception):
    exit_code = 1


class InputError(PersuasionError, ValueError):
    exit_code = 2


class NumericalFailure(PersuasionError, ArithmeticError):
    exit_code = 3


class CapError(PersuasionError):
    exit_code = 4


class InvalidInstance(InputError):
    pass


class ZeroProbabilityMessage(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class NotBinary(InputError):
    pass


class NotInterval(InputError):
    pass


class DegenerateQuery(InputError):
    pass


class MalformedPlan(InputError):
    pass


class ParameterViolation(InputError):
    pass


class NotBIC(InputError):
    def __init__(self, type_index, detail=""):
        self.type_index = type_index
        msg = f"policy for type {type_index} is not incentive compatible"
        super().__init__(msg + (f": {detail}" if detail else ""))


class ParseError(InputError):
    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + reason)


class ValidationError(InputError):
    def __init__(self, invariant, where=None):
        self.invariant = invariant
        self.where = where
        super().__init__(invariant if where is None else f"{invariant} ({where})")


class SizeCapExceeded(CapError):
    pass


class CapExceeded(CapError):
    pass


class ExplosionGuard(CapError):
    pass
