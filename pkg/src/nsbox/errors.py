"""Exception hierarchy shared by all nsbox modules."""


class NsboxError(Exception):
    """Base class for every error raised by nsbox."""


class ShapeMismatch(NsboxError, ValueError):
    pass


class NegativeEntry(NsboxError, ValueError):
    pass


class NotNormalized(NsboxError, ValueError):
    pass


class IndexOutOfRange(NsboxError, IndexError):
    pass


class WeightSumInvalid(NsboxError, ValueError):
    pass


class ScenarioMismatch(NsboxError, ValueError):
    pass


class MissingSetting(NsboxError, ValueError):
    pass


class CapExceeded(NsboxError, ValueError):
    pass


class NotNoSignaling(NsboxError, ValueError):
    pass


class UnsupportedScenario(NsboxError, ValueError):
    pass


class Infeasible(NsboxError, RuntimeError):
    """An LP that must be feasible was not; indicates a bug."""


class InfeasibleTarget(NsboxError, ValueError):
    pass


class NotUnitVector(NsboxError, ValueError):
    pass


class DegenerateDot(NsboxError, ValueError):
    """Kept for API completeness; sign(0) is resolved to +1 and never raised."""


class BudgetExceeded(NsboxError, ValueError):
    pass


class OutOfRange(NsboxError, ValueError):
    pass


class UnknownModel(NsboxError, ValueError):
    pass


class RangeError(NsboxError, ValueError):
    pass


class ParseError(NsboxError, ValueError):
    pass
