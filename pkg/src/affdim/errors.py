"""Exception hierarchy shared by every module."""


class AffdimError(Exception):
    """Base class for library errors."""


class SingularMatrix(AffdimError, ValueError):
    pass


class BadOrder(AffdimError, ValueError):
    """Exterior power order out of range."""


class EmptyWord(AffdimError, ValueError):
    pass


class BudgetExceeded(AffdimError, RuntimeError):
    """A word-tree enumeration would visit more words than allowed."""

    def __init__(self, visits, budget):
        self.visits = visits
        self.budget = budget
        super().__init__(f"enumeration needs {visits} visits, budget is {budget}")


class NoSignChange(AffdimError, ArithmeticError):
    """A bisection bracket does not straddle zero."""


class InadmissibleForm(AffdimError, ValueError):
    """Linear form whose Cartan potential is not submultiplicative."""


class ValidationError(AffdimError, ValueError):
    """Malformed IFS document or inconsistent inputs."""


class NotContracting(AffdimError, ValueError):
    """No contraction certificate could be found for the generators."""
