"""Exception hierarchy shared by the library and the command-line front end"""


class MannWhitneyError(Exception):
    """Base class for every error raised by this package"""


class InvalidSampleError(MannWhitneyError, ValueError):
    """Observations are non-finite, a group is empty, or the input cannot be parsed"""


class InsufficientSampleError(InvalidSampleError):
    """A group has fewer observations than the requested quantity needs"""

    def __init__(self, n1: int, n2: int, required: int = 2):
        self.n1 = n1
        self.n2 = n2
        self.required = required
        super().__init__(
            f"insufficient sample size: n1={n1}, n2={n2} (each group needs at least {required})"
        )


class ConfigError(MannWhitneyError, ValueError):
    """Experiment configuration or a named lookup (family, estimator, fixture) is invalid"""


class TruncationError(MannWhitneyError):
    """A countable support could not be truncated to the requested tail tolerance"""


class BudgetExceededError(MannWhitneyError):
    """Exhaustive enumeration would visit more outcomes than the configured budget"""

    def __init__(self, outcomes: int, budget: int):
        self.outcomes = outcomes
        self.budget = budget
        super().__init__(f"enumeration needs {outcomes} outcomes, budget is {budget}")


class InvariantViolationError(MannWhitneyError, AssertionError):
    """An estimator left its proven range during a simulation run"""
