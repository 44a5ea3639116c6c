"""Exception types shared across the package.

The CLI maps these onto process exit codes: schema problems exit with 2,
failed numerical convergence with 3, and exceeded resource budgets with 4.
"""


class SchemaError(ValueError):
    """An instance description (JSON or constructor arguments) is invalid."""


class ConvergenceError(RuntimeError):
    """An iterative refinement loop stopped without reaching the tolerance."""


class BudgetError(RuntimeError):
    """A configured resource budget (states, nodes, memory) was exceeded."""
