"""Exception hierarchy shared across the package."""


class ShapeError(ValueError):
    """Grid or dimension mismatch between trajectories or profiles."""


class InfeasibleError(ValueError):
    """A feasible set is empty or a point lies outside it."""

    def __init__(self, message, player=None):
        super().__init__(message)
        self.player = player


class MembershipError(InfeasibleError):
    """A candidate equilibrium component violates its constraint set."""

    def __init__(self, message, constraint=None, slack=None, player=None):
        super().__init__(message, player=player)
        self.constraint = constraint
        self.slack = slack


class ConvergenceError(RuntimeError):
    """An inner solver stalled; ``best`` holds its best iterate."""

    def __init__(self, message, best=None, certified_gap=None):
        super().__init__(message)
        self.best = best
        self.certified_gap = certified_gap


class ScenarioError(ValueError):
    """Malformed scenario text; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)
