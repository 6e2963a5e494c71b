"""Exception hierarchy.

Two families: ``ValidationError`` for inputs that violate a documented
precondition (CLI exit code 2) and ``NumericalError`` for solver or
quadrature failures on valid input (CLI exit code 3).
"""


class RobSemiError(Exception):
    exit_code = 1


class ValidationError(RobSemiError, ValueError):
    exit_code = 2


class NumericalError(RobSemiError, ArithmeticError):
    exit_code = 3


# model
class NonCentered(ValidationError):
    pass


class BadProbabilities(ValidationError):
    pass


class SingularFisher(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass


# projection
class RootBracketFailure(NumericalError):
    pass


class ConvergenceFailure(NumericalError):
    pass


# influence
class ExistenceViolated(ValidationError):
    pass


class SingularScaling(NumericalError):
    pass


class SolveFailure(NumericalError):
    pass


class NonUniqueBound(ValidationError):
    pass


class UnsupportedDimension(ValidationError):
    pass


# risk
class OutOfRange(ValidationError):
    pass


# testing
class RadiusConditionViolated(ValidationError):
    pass


class BadOrdering(ValidationError):
    pass


class SingularJtilde(NumericalError):
    pass


# montecarlo
class TangentUnbounded(ValidationError):
    pass
