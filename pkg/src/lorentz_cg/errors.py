"""Exception hierarchy shared by the numeric layers and the CLI."""


class LorentzCGError(Exception):
    """Base class for every error raised by this package."""


class NumericError(LorentzCGError):
    """Numerical failure; the CLI maps these to exit code 2."""


class NonConvergence(NumericError):
    pass


class InteriorSingularity(NumericError):
    pass


class NonIntegrable(NumericError):
    pass


class BranchAmbiguity(NumericError):
    pass


class BranchLost(NumericError):
    pass


class LeftRegion(NumericError):
    pass


class RankDeficient(NumericError):
    pass


class PathThroughPole(NumericError):
    pass


class DegreeAmbiguous(NumericError):
    pass


class SearchInconclusive(NumericError):
    pass


class DomainError(LorentzCGError, ValueError):
    pass


class BranchCut(DomainError):
    pass


class AtPole(DomainError):
    pass


class AtEnd(DomainError):
    pass


class ImaginaryZeta(DomainError):
    pass
