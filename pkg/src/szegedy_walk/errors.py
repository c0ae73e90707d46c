"""Exception hierarchy.

Every error carries the data needed to reproduce the complaint. The CLI maps
the three families below onto exit codes (config 2, size cap 3, numerics 4).
"""


class WalkError(Exception):
    """Base class for all errors raised by this package."""


class InputError(WalkError, ValueError):
    """Malformed input: the caller broke a precondition."""


class SizeCapError(WalkError):
    """A dense object would exceed the configured size cap."""


class NumericalError(WalkError, ArithmeticError):
    """A numerical routine did not deliver its contract."""


class NegativeEntry(InputError):
    def __init__(self, i, j, value):
        self.i, self.j, self.value = i, j, value
        super().__init__(f"negative entry {value!r} at ({i}, {j})")


class RowSumViolation(InputError):
    def __init__(self, i, total):
        self.i, self.total = i, total
        super().__init__(f"row {i} sums to {total!r}, expected 1")


class NotSymmetric(InputError):
    def __init__(self, deviation):
        self.deviation = deviation
        super().__init__(f"matrix is not symmetric (max |P - P^T| = {deviation:.3e})")


class NotSquare(InputError):
    def __init__(self, shape):
        self.shape = shape
        super().__init__(f"expected a square matrix, got shape {shape}")


class EmptyMarkedSet(InputError):
    def __init__(self):
        super().__init__("marked set must be nonempty")


class DimensionMismatch(InputError):
    def __init__(self, expected, got):
        self.expected, self.got = expected, got
        super().__init__(f"dimension mismatch: expected {expected}, got {got}")


class NotOrthonormal(InputError):
    def __init__(self, system, i, j, value):
        self.system, self.i, self.j, self.value = system, i, j, value
        super().__init__(
            f"system {system!r} is not orthonormal: <x_{i}, x_{j}> = {value!r}"
        )


class TooLarge(SizeCapError):
    def __init__(self, size, cap):
        self.size, self.cap = size, cap
        super().__init__(f"size {size} exceeds cap {cap}")


class EigensolverFailure(NumericalError):
    pass


class NormDrift(NumericalError):
    def __init__(self, drift, allowed):
        self.drift, self.allowed = drift, allowed
        super().__init__(f"norm drifted by {drift:.3e} (allowed {allowed:.3e})")


class NoHitWithinCap(NumericalError):
    def __init__(self, cap):
        self.cap = cap
        super().__init__(f"no hit within K <= {cap}")
