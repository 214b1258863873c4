"""Exception hierarchy shared by every module of the package."""


class ChebError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ParseError(ChebError):
    exit_code = 1


class InvalidMesh(ChebError):
    exit_code = 1

    def __init__(self, invariant, element=None, detail=""):
        self.invariant = invariant
        self.element = element
        msg = f"invalid mesh: {invariant}"
        if element is not None:
            msg += f" (element {element})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class UnknownVertex(ChebError):
    pass


class IncompleteDomain(ChebError):
    """An operation reached the mesh boundary where a complete surface was needed."""

    exit_code = 5


class OverlapDetected(ChebError):
    pass


class DegenerateTangency(ChebError):
    exit_code = 5


class PreconditionViolated(ChebError):
    exit_code = 2


class SearchExhausted(ChebError):
    exit_code = 3

    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


class ZeroOnLoop(ChebError):
    def __init__(self, msg, index=None):
        super().__init__(msg)
        self.index = index


class RefinementExhausted(ChebError):
    exit_code = 5


class ConditionFailure(ChebError):
    exit_code = 4


class NetDegenerate(ChebError):
    exit_code = 5

    def __init__(self, msg, cell=None):
        super().__init__(msg)
        self.cell = cell


class InvalidBranch(ChebError):
    exit_code = 4


class GluingMismatch(ChebError):
    exit_code = 5
