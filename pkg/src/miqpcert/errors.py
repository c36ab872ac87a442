"""Exception and warning types shared across the package."""


class MiqpcertError(Exception):
    """Base class for all errors raised by this package."""


class NotPositiveDefinite(MiqpcertError):
    """A matrix required to be positive definite failed its pivot test."""


class RankDeficientWorkingSet(MiqpcertError):
    """The active-constraint rows are linearly dependent."""


class NumericalFailure(MiqpcertError):
    """A numerical routine could not produce a trustworthy result."""


class IterationCapExceeded(MiqpcertError):
    """The active-set iteration count exceeded its safety cap."""


class EmptyRegion(MiqpcertError):
    """An operation that needs a nonempty polyhedron received an empty one."""


class UnboundedRegion(MiqpcertError):
    """An operation that needs a bounded polyhedron received an unbounded one."""


class ParameterOutsideTheta0(MiqpcertError):
    """A parameter vector lies outside the problem's parameter set."""


class ParseError(MiqpcertError):
    """A problem or partition file could not be parsed; message names the field."""


class NotCovered(MiqpcertError):
    """A parameter vector is not contained in any region of a partition."""


class UnsupportedDimension(MiqpcertError):
    """The operation is only defined for two-dimensional parameter sets."""


class NodeBudgetExceeded(MiqpcertError):
    """A certification tuple processed more relaxations than the tree can hold."""


class DegeneracyWarning(UserWarning):
    """Two tie-breaking comparison functions coincide on a full-dimensional set."""
