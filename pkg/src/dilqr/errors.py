"""Exception types shared across the toolkit."""


class ContractViolation(ValueError):
    """An input failed a documented precondition (dimension, finiteness, ...)."""


class SingularSystem(RuntimeError):
    """A least-squares system was numerically rank-deficient."""

    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number


class NotPositiveDefinite(RuntimeError):
    """Q_uu lost positive definiteness during the backward pass."""

    def __init__(self, t):
        super().__init__(f"Q_uu not positive definite at t={t}")
        self.t = t


class RegularizationExhausted(RuntimeError):
    """The regularizer hit its cap with the backward pass still failing."""


class SynthesisFailure(RuntimeError):
    """Feedback-gain synthesis failed (non-PD control-weight block)."""

    def __init__(self, t):
        super().__init__(f"gain synthesis failed at t={t}: R + B'PB not positive definite")
        self.t = t
