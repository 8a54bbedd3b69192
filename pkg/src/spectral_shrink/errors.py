"""Exception types shared across the package."""


class ShrinkError(Exception):
    """Base class for all package errors."""


class DomainError(ShrinkError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ContractError(ShrinkError, ValueError):
    """Arguments are individually valid but inconsistent with each other."""


class NumericError(ShrinkError, ArithmeticError):
    """A numerical procedure (root bracketing, eigensolver) failed."""


class ConfigError(ShrinkError, ValueError):
    """A configuration document failed validation.

    ``problems`` lists every issue found, not just the first one.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
