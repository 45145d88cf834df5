"""Exception hierarchy shared by all modules."""


class PMError(Exception):
    """Base class for every error raised by partmon."""


class InvalidInput(PMError, ValueError):
    pass


class Infeasible(PMError):
    """No estimation function exists for the requested pair."""


class NotObservable(PMError):
    pass


class ResidualTooLarge(PMError):
    pass


class InconsistentObservation(PMError):
    """The observed symbol has zero probability under the current posterior."""


class ZeroProbabilityCondition(PMError):
    pass


class DisconnectedVt(PMError):
    """The greedy-tied graph is disconnected; indicates a geometry bug."""


class StructureViolation(PMError):
    pass


class CoverFailure(PMError):
    pass


class UnknownPairing(PMError):
    """No per-step lemma applies to the requested policy/game combination."""


class IncompatiblePolicy(PMError):
    pass


class BoundViolation(PMError, AssertionError):
    pass
