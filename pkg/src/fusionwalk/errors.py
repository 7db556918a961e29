"""Exception hierarchy shared by all fusionwalk modules."""


class FusionwalkError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(FusionwalkError):
    """Malformed or inconsistent input: bad ring parameters, labels that do
    not belong to a ring, measures that do not sum to one, matrices failing
    their defining relations."""


class RingMismatch(InvalidInput):
    """Two objects that must live over the same fusion ring do not."""


class Nonconvergence(FusionwalkError):
    """An adaptive series or limit did not converge within its budget.

    Carries whatever partial evidence was gathered (partial sums, oscillation
    history) in the ``evidence`` attribute.
    """

    def __init__(self, message, evidence=None):
        super().__init__(message)
        self.evidence = evidence if evidence is not None else {}


class NumericFailure(FusionwalkError):
    """A genuinely numerical failure: overflow, division by a vanishing
    denominator, a singular linear system."""


class ResourceLimit(FusionwalkError):
    """A computation would exceed its declared memory or work budget."""
