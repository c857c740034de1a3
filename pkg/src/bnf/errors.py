"""Exception types shared across the package."""


class BNFError(Exception):
    """Base class for all library errors."""


class DimensionError(BNFError, ValueError):
    pass


class DegenerateBatch(BNFError, ArithmeticError):
    """A batch row is (numerically) constant, so its standard deviation is zero."""

    def __init__(self, row, sigma):
        self.row = row
        self.sigma = sigma
        super().__init__(f"row {row} has sigma={sigma!r}; batch is degenerate")


class IllConditioned(BNFError, ArithmeticError):
    def __init__(self, cond, limit):
        self.cond = cond
        self.limit = limit
        super().__init__(f"Gram matrix condition number {cond:.3g} exceeds {limit:.3g}")


class PreconditionUnmet(BNFError, ValueError):
    pass


class ZeroOptimum(BNFError, ValueError):
    pass


class NoConvergence(BNFError, RuntimeError):
    pass


class GenerationFailed(BNFError, RuntimeError):
    pass


class VerificationFailed(BNFError, AssertionError):
    """A numerical claim did not hold; ``stage`` names the failing check."""

    def __init__(self, stage, message):
        self.stage = stage
        super().__init__(f"{stage}: {message}")
