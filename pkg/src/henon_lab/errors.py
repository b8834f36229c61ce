"""Exception hierarchy shared by every module."""


class HenonLabError(Exception):
    """Base class; the CLI maps these to exit code 1."""

    kind = "computation"


class InputError(HenonLabError):
    """Malformed user input; the CLI maps these to exit code 2."""

    kind = "input"


class BothConstantInY(HenonLabError):
    pass


class NonConvergence(HenonLabError):
    pass


class NotInverse(InputError):
    pass


class NonConstantJacobian(InputError):
    pass


class NotHenonType(HenonLabError):
    pass


class NotRegular(HenonLabError):
    pass


class VerificationFailed(HenonLabError):
    pass


class EliminationDegenerate(HenonLabError):
    pass


class NotPeriodic(HenonLabError):
    pass


class NotOnDiagonal(HenonLabError):
    pass


class Resonance(HenonLabError):
    def __init__(self, k, gap):
        super().__init__(f"resonance at order {k}: |lambda^k - mu| = {gap:.3e}")
        self.order = k
        self.gap = gap


class DegenerateData(HenonLabError):
    pass


class ChartOverflow(HenonLabError):
    pass


class NoSaddles(HenonLabError):
    pass


class InsufficientSignal(HenonLabError):
    pass


class OverflowHorizon(HenonLabError):
    pass
