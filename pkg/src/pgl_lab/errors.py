"""Exception types raised by the lab."""


class PglError(Exception):
    """Base class for all errors raised by pgl_lab."""


class PoleViolation(PglError, ArithmeticError):
    """The warping function vanished: the metric has a conjugate point."""

    def __init__(self, r, f):
        self.r = float(r)
        self.f = float(f)
        super().__init__(f"warping function f={self.f:.3e} <= 0 at r={self.r:.6g} "
                         "(conjugate point, the origin is no longer a pole)")


class EmptyWindow(PglError, ValueError):
    pass


class HypothesisFailed(PglError, ValueError):
    """A curvature-case positivity hypothesis or a precondition does not hold."""


class BoundViolated(PglError, AssertionError):
    def __init__(self, what, index, r, slack):
        self.what = what
        self.index = int(index)
        self.r = float(r)
        self.slack = float(slack)
        super().__init__(f"{what} violated at node {self.index} (r={self.r:.6g}): "
                         f"slack {self.slack:.3e}")


class TailDiverges(PglError, ArithmeticError):
    """The tail integral of inverse sphere area is infinite."""


class UnsupportedAnsatz(PglError, NotImplementedError):
    pass


class Diverged(PglError, RuntimeError):
    pass


class SigmaNotPositive(PglError, ValueError):
    """Condition (P1) is unavailable: the monotonicity exponent is not positive."""


class ConfigError(PglError, ValueError):
    pass
