"""Exception types raised across the package."""


class SubdynError(Exception):
    """Base class for all library errors."""


class MetricViolation(SubdynError):
    """A distance matrix fails one of the metric axioms.

    ``points`` names the offending triple ``(i, j, k)``. For the triangle
    inequality ``j`` is the intermediate point, i.e. ``d(i, k) > d(i, j) + d(j, k)``.
    Symmetry and diagonal failures repeat indices, e.g. ``(i, j, i)``.
    """

    def __init__(self, points, reason):
        self.points = tuple(int(p) for p in points)
        self.reason = reason
        super().__init__(f"metric violation at {self.points}: {reason}")


class DimensionMismatch(SubdynError, ValueError):
    pass


class EmptyImage(SubdynError):
    def __init__(self, point):
        self.point = point
        super().__init__(f"image set of point {point!r} is empty")


class DomainNotDense(SubdynError):
    def __init__(self, point, delta):
        self.point = point
        self.delta = delta
        super().__init__(
            f"point {point!r} has no defined point within delta={delta!r}")


class SparseCompositionDomain(SubdynError):
    pass


class DegreeViolation(SubdynError):
    def __init__(self, point, count, degree):
        self.point = point
        self.count = count
        self.degree = degree
        super().__init__(
            f"target point {point!r} has {count} preimages, expected {degree}")


class NegativeScalar(SubdynError, ValueError):
    pass


class NoConvergence(SubdynError):
    pass


class Infeasible(SubdynError):
    """Raised when a feasible region is empty.

    ``max_mass`` is set by entropy routines to the largest mass that a
    shift-invariant Markov measure with dominated marginal can reach.
    """

    def __init__(self, message, max_mass=None):
        self.max_mass = max_mass
        super().__init__(message)


class SelectionExplosion(SubdynError):
    def __init__(self, count, cap):
        self.count = count
        self.cap = cap
        super().__init__(
            f"{count} selections exceed the materialization cap {cap}")


class BadFiberSpec(SubdynError, ValueError):
    pass


class NotAMeasure(SubdynError):
    pass


class PreconditionFailed(SubdynError):
    def __init__(self, message, witness=None):
        self.witness = witness
        super().__init__(message)


class ReducibleGraph(SubdynError):
    pass


class SchemaError(SubdynError):
    """Scenario input does not validate; ``pointer`` is a JSON pointer."""

    def __init__(self, pointer, message):
        self.pointer = pointer
        super().__init__(f"{pointer or '/'}: {message}")
