"""
Exception hierarchy shared by every reconstruction app.

Each error carries the process exit code the CLI reports for it:
    - ConfigurationError: 2 (malformed config, invalid parameters, shape mismatch)
    - DataIOError: 3 (unreadable or malformed data files)
    - SolverDivergenceError: 4 (non-finite iterates)
"""


class ReconError(Exception):
    """Base class for all reconstruction errors."""
    exit_code = 1


class ConfigurationError(ReconError):
    """Raised when parameters or configuration values are invalid."""
    exit_code = 2


class DataIOError(ReconError):
    """Raised when a data file cannot be read, written or parsed."""
    exit_code = 3

    def __init__(self, path, reason: str):
        self.path = str(path)
        self.reason = reason
        super().__init__(f"{self.path}: {reason}")


class SolverDivergenceError(ReconError):
    """Raised when a solver produces non-finite values."""
    exit_code = 4

    def __init__(self, solver: str, iteration: int, detail: str = 'non-finite iterate'):
        self.solver = solver
        self.iteration = iteration
        self.detail = detail
        super().__init__(f"{solver} diverged at iteration {iteration}: {detail}")
