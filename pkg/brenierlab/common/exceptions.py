from collections.abc import Sequence


class ContractError(BaseException):
    """Thrown when the contract of a lazy task pipeline is violated.
       Not recommended to import and catch.
       Separated - not in the error hierarchy of this library.
    """
    def __init__(self, entity: str, method: str, message: str):
        text = f"violation of the {entity}-{method} contract - {message}"
        super().__init__(text)


class BaseLabError(Exception):
    """Base library level exception"""
    def __init__(self, message: str):
        super().__init__(message)


class DimensionMismatchError(BaseLabError):
    """Thrown when a point or a direction has the wrong number of coordinates"""
    def __init__(self, expected: int, received: int):
        self.expected = expected
        self.received = received
        super().__init__(f"dimension mismatch - expected {expected} coordinates, received {received}")


class DomainError(BaseLabError):
    """Thrown when an argument lies outside the domain of a function"""
    def __init__(self, name: str, value, domain: str):
        self.name = name
        self.value = value
        super().__init__(f"'{name}' = {value} lies outside the domain {domain}")


class ParameterRangeError(BaseLabError):
    """Thrown when a model parameter is outside the range where the bound makes sense"""
    def __init__(self, name: str, value, expected: str):
        self.name = name
        self.value = value
        super().__init__(f"parameter '{name}' = {value} - expected {expected}")


class EmptySearchError(BaseLabError):
    """Thrown when a search or sampling specification has nothing to evaluate"""
    def __init__(self, what: str):
        super().__init__(f"empty search specification - {what}")


class NotMonotoneError(BaseLabError):
    """Thrown when a tabulated function must be nondecreasing but is not"""
    def __init__(self, what: str):
        super().__init__(f"{what} is not monotone nondecreasing")


class NotConvexError(BaseLabError):
    """Thrown when a function supplied as convex fails a sampled convexity test"""
    def __init__(self, what: str, witness: Sequence[float]):
        self.witness = tuple(witness)
        super().__init__(f"{what} fails the midpoint convexity test at {self.witness}")


class BoundaryContactError(BaseLabError):
    """Thrown when a transport image touches the boundary of the target support"""
    def __init__(self, x: float, image: float):
        self.x = x
        self.image = image
        super().__init__(f"T({x}) = {image} lies where the target density vanishes")


class ShootingError(BaseLabError):
    """Thrown when the shooting method can not bracket the initial value"""
    def __init__(self, p: float, a: float, bracket: tuple[float, float]):
        self.bracket = bracket
        super().__init__(f"shooting for p={p}, a={a} failed - final bracket for f(0) is {bracket}")


class NonConvergenceError(BaseLabError):
    """Thrown when an iterative solver stops before reaching its tolerance"""
    def __init__(self, iterations: int, marginal_error: float):
        self.iterations = iterations
        self.marginal_error = marginal_error
        super().__init__(f"no convergence after {iterations} iterations, marginal error {marginal_error:.3e}")


class RejectionError(BaseLabError):
    """Thrown when rejection sampling from a bounding box is hopeless"""
    def __init__(self, acceptance: float):
        self.acceptance = acceptance
        super().__init__(f"rejection acceptance {acceptance:.2e} - body too thin for its bounding box")


class UnboundedBodyError(BaseLabError):
    """Thrown when a convex body has an infinite supporting slab"""
    def __init__(self, direction: Sequence[float]):
        super().__init__(f"convex body is unbounded in direction {tuple(direction)}")


class EnvelopeDomainError(BaseLabError):
    """Thrown when the envelope argument leaves the supporting slab"""
    def __init__(self, value: float, half_width: float):
        self.value = value
        super().__init__(f"envelope argument {value} outside [-{half_width}, {half_width}]")


class ConfigError(BaseLabError):
    """Thrown when an experiment configuration is invalid"""
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"config field '{field}' - {message}")
