"""Shared exception types."""


class BudgetError(RuntimeError):
    """Raised when a request exceeds a hard resource budget.

    The message always names the budget and the requested size so a
    caller (or the CLI) can report exactly what was refused.
    """
