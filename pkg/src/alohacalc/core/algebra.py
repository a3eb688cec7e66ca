"""
Success-function algebra for ALOHA receivers.

A receiver is represented by its success function: a map from a deterministic
load (packets per class) to the number of packets decoded per class. Functions
are immutable composites evaluated on demand, so no operation ever tabulates
the (infinite) load space. The four operations are minimum, composition,
closure and complement; `parallel` stacks two receivers side by side.
"""

import itertools
import logging
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Sequence

logger = logging.getLogger(__name__)

Load = tuple[int, ...]


class DimensionError(ValueError):
    """Raised when loads or evaluators of different class counts are combined."""

    pass


class DomainError(ValueError):
    """Raised when a load lies outside the domain an evaluator declares."""

    pass


class ContractivityError(ValueError):
    """Raised when an evaluator decodes more packets than were offered."""

    pass


def as_load(n: Iterable[int], dimension: Optional[int] = None) -> Load:
    """
    Validate and normalise a deterministic load.

    Args:
        n: Packet counts per class
        dimension: Expected number of classes (checked when given)

    Returns:
        The load as a tuple of non-negative ints

    Raises:
        DimensionError: If the load has the wrong number of classes
        DomainError: If an entry is negative or not an integer
    """
    counts = []
    for value in n:
        as_int = int(value)
        if as_int != value:
            raise DomainError(f"Load entries must be integers, got {value!r}")
        if as_int < 0:
            raise DomainError(f"Load entries must be non-negative, got {value!r}")
        counts.append(as_int)

    load = tuple(counts)
    if not load:
        raise DimensionError("A load needs at least one class")
    if dimension is not None and len(load) != dimension:
        raise DimensionError(f"Expected a load with {dimension} classes, got {len(load)}: {load}")
    return load


def load_leq(a: Load, b: Load) -> bool:
    """Componentwise a <= b."""
    return all(x <= y for x, y in zip(a, b))


def load_min(a: Load, b: Load) -> Load:
    return tuple(min(x, y) for x, y in zip(a, b))


def load_sub(a: Load, b: Load) -> Load:
    return tuple(x - y for x, y in zip(a, b))


class SuccessEvaluator(ABC):
    """
    Base class for success functions n -> phi(n) with phi(n) <= n.

    Subclasses implement `_evaluate`; `evaluate` validates the load and checks
    the contract on the way out. The `monotone_failure` and `all_or_nothing`
    flags are metadata: they start unset and are only switched on by
    `verify_properties` or by constructors whose property holds for every load.
    """

    def __init__(self, dimension: int, name: Optional[str] = None):
        if dimension < 1:
            raise DimensionError(f"Evaluator dimension must be at least 1, got {dimension}")
        self.dimension = dimension
        self.name = name or type(self).__name__
        self.monotone_failure = False
        self.all_or_nothing = False

    @abstractmethod
    def _evaluate(self, load: Load) -> Load:
        """Compute phi(load) for an already validated load."""

    def evaluate(self, n: Iterable[int]) -> Load:
        """
        Evaluate the success function.

        Args:
            n: Deterministic load with `dimension` classes

        Returns:
            Number of decoded packets per class

        Raises:
            DimensionError: If the load has the wrong number of classes
            DomainError: If the load is outside the evaluator's domain
            ContractivityError: If the result exceeds the load
        """
        load = as_load(n, self.dimension)
        result = self._evaluate(load)
        if not load_leq(result, load) or min(result) < 0:
            raise ContractivityError(f"{self.name} returned {result} for load {load}")
        return result

    def __call__(self, n: Iterable[int]) -> Load:
        return self.evaluate(n)

    def mark(self, monotone_failure: bool = False, all_or_nothing: bool = False) -> "SuccessEvaluator":
        """
        Raise metadata flags for properties that hold by construction.

        Flags are only ever added here; `verify_properties` overwrites them with
        what a box check finds. All-or-nothing implies monotone failure.
        """
        self.all_or_nothing = self.all_or_nothing or all_or_nothing
        self.monotone_failure = self.monotone_failure or monotone_failure or all_or_nothing
        return self

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name} K={self.dimension}>"


class FunctionEvaluator(SuccessEvaluator):
    """Evaluator backed by a closed-form rule."""

    def __init__(self, dimension: int, rule: Callable[[Load], Sequence[int]], name: Optional[str] = None):
        super().__init__(dimension, name)
        self._rule = rule

    def _evaluate(self, load: Load) -> Load:
        return tuple(int(x) for x in self._rule(load))


class IdentityEvaluator(SuccessEvaluator):
    """The identity epsilon(n) = n, unit of both minimum and composition."""

    def __init__(self, dimension: int):
        super().__init__(dimension, "identity")
        self.mark(all_or_nothing=True)

    def _evaluate(self, load: Load) -> Load:
        return load


class ComplementEvaluator(SuccessEvaluator):
    """f^c(n) = n - f(n)."""

    def __init__(self, inner: SuccessEvaluator):
        super().__init__(inner.dimension, f"{inner.name}^c")
        self.inner = inner

    def _evaluate(self, load: Load) -> Load:
        return load_sub(load, self.inner.evaluate(load))


class MinimumEvaluator(SuccessEvaluator):
    """(f ^ g)(n) = min[f(n), g(n)] componentwise."""

    def __init__(self, f: SuccessEvaluator, g: SuccessEvaluator):
        _check_same_dimension(f, g)
        super().__init__(f.dimension, f"({f.name} ^ {g.name})")
        self.f = f
        self.g = g

    def _evaluate(self, load: Load) -> Load:
        return load_min(self.f.evaluate(load), self.g.evaluate(load))


class CompositionEvaluator(SuccessEvaluator):
    """(f o g)(n) = f(g(n))."""

    def __init__(self, f: SuccessEvaluator, g: SuccessEvaluator):
        _check_same_dimension(f, g)
        super().__init__(f.dimension, f"({f.name} o {g.name})")
        self.f = f
        self.g = g

    def _evaluate(self, load: Load) -> Load:
        return self.f.evaluate(self.g.evaluate(load))


class ClosureEvaluator(SuccessEvaluator):
    """
    f*(n): the fixed point reached by iterating f from n.

    Iterates are non-increasing integer vectors, so the fixed point is reached
    after at most sum(n) + 1 applications. Results are memoised per instance;
    the memo is guarded by a lock so one instance can be shared across threads.
    """

    def __init__(self, inner: SuccessEvaluator):
        super().__init__(inner.dimension, f"{inner.name}*")
        self.inner = inner
        self._memo: dict[Load, Load] = {}
        self._lock = threading.Lock()

    def trace(self, load: Load) -> list[Load]:
        """Return the iterates n, f(n), f(f(n)), ... up to and including the fixed point."""
        iterates = [load]
        current = load
        bound = sum(load) + 1
        while True:
            following = self.inner.evaluate(current)
            if following == current:
                break
            iterates.append(following)
            current = following
            if len(iterates) - 1 > bound:
                # Unreachable for contractive inner functions.
                raise ContractivityError(f"Closure of {self.inner.name} did not settle at {load}")
        return iterates

    def _evaluate(self, load: Load) -> Load:
        with self._lock:
            cached = self._memo.get(load)
        if cached is not None:
            return cached

        iterates = self.trace(load)
        result = iterates[-1]
        logger.debug("%s at %s settled after %d steps", self.name, load, len(iterates) - 1)

        with self._lock:
            self._memo[load] = result
        return result


class ParallelEvaluator(SuccessEvaluator):
    """(f, g): f on the first K_f classes, g on the remaining K_g classes."""

    def __init__(self, f: SuccessEvaluator, g: SuccessEvaluator):
        super().__init__(f.dimension + g.dimension, f"({f.name}, {g.name})")
        self.f = f
        self.g = g
        self.mark(
            monotone_failure=f.monotone_failure and g.monotone_failure,
            all_or_nothing=f.all_or_nothing and g.all_or_nothing,
        )

    def _evaluate(self, load: Load) -> Load:
        split = self.f.dimension
        return self.f.evaluate(load[:split]) + self.g.evaluate(load[split:])


def _check_same_dimension(f: SuccessEvaluator, g: SuccessEvaluator) -> None:
    if f.dimension != g.dimension:
        raise DimensionError(
            f"Cannot combine {f.name} (K={f.dimension}) with {g.name} (K={g.dimension})"
        )


def identity(dimension: int) -> SuccessEvaluator:
    return IdentityEvaluator(dimension)


def zero(dimension: int) -> SuccessEvaluator:
    """The receiver that never decodes anything (epsilon^c)."""
    evaluator = FunctionEvaluator(dimension, lambda load: (0,) * len(load), "zero")
    return evaluator.mark(all_or_nothing=True)


def complement(f: SuccessEvaluator) -> SuccessEvaluator:
    """Return f^c; the complement of a complement is the original evaluator."""
    if isinstance(f, ComplementEvaluator):
        return f.inner
    return ComplementEvaluator(f)


def minimum(f: SuccessEvaluator, g: SuccessEvaluator) -> SuccessEvaluator:
    return MinimumEvaluator(f, g)


def compose(f: SuccessEvaluator, g: SuccessEvaluator) -> SuccessEvaluator:
    """Return f o g, i.e. g is applied first."""
    return CompositionEvaluator(f, g)


def closure(f: SuccessEvaluator) -> SuccessEvaluator:
    return ClosureEvaluator(f)


def closure_trace(f: SuccessEvaluator, n: Iterable[int]) -> list[Load]:
    """Iterates of f starting at n, ending with the fixed point f*(n)."""
    return ClosureEvaluator(f).trace(as_load(n, f.dimension))


def parallel(f: SuccessEvaluator, g: SuccessEvaluator) -> SuccessEvaluator:
    return ParallelEvaluator(f, g)


@dataclass(frozen=True)
class VerificationBox:
    """The finite grid {0..u_1} x ... x {0..u_K} used for exhaustive checks."""

    upper: Load

    def __post_init__(self):
        object.__setattr__(self, "upper", as_load(self.upper))

    @classmethod
    def cube(cls, dimension: int, side: int) -> "VerificationBox":
        return cls((side,) * dimension)

    @property
    def dimension(self) -> int:
        return len(self.upper)

    @property
    def size(self) -> int:
        size = 1
        for u in self.upper:
            size *= u + 1
        return size

    def contains(self, load: Load) -> bool:
        return len(load) == self.dimension and load_leq(load, self.upper)

    def loads(self) -> Iterator[Load]:
        """All loads in the box, in lexicographic order."""
        return itertools.product(*(range(u + 1) for u in self.upper))


@dataclass
class Violation:
    """First counterexample found for a property."""

    loads: tuple[Load, ...]
    detail: str


@dataclass
class PropertyReport:
    """Result of `verify_properties` over one box."""

    box: VerificationBox
    contractive: bool = True
    monotone_failure: bool = True
    all_or_nothing: bool = True
    violations: dict[str, Violation] = field(default_factory=dict)

    def _fail(self, prop: str, loads: tuple[Load, ...], detail: str) -> None:
        if prop not in self.violations:
            self.violations[prop] = Violation(loads, detail)
        setattr(self, prop, False)


def _record_flags(f: SuccessEvaluator, report: PropertyReport) -> None:
    f.monotone_failure = report.monotone_failure
    f.all_or_nothing = report.all_or_nothing and report.monotone_failure


def verify_properties(f: SuccessEvaluator, box: VerificationBox) -> PropertyReport:
    """
    Exhaustively check contractivity, failure monotonicity and all-or-nothing on a box.

    Monotonicity and the on-off property are order statements that chain along
    monotone lattice paths, and such paths between two loads of a box stay in
    the box, so checking every pair (n, n + e_j) covers every pair n' <= n''.
    For the on-off property a class counts as "off" only when it has packets.

    The metadata flags of `f` are overwritten with the outcome, so a failure on
    a larger box clears a flag an earlier, smaller box had set.

    Args:
        f: The evaluator to check
        box: The finite domain to enumerate

    Returns:
        A PropertyReport with the first violation found per property

    Raises:
        DimensionError: If the box and evaluator dimensions differ
    """
    if box.dimension != f.dimension:
        raise DimensionError(f"Box has {box.dimension} classes, {f.name} has {f.dimension}")

    logger.info("Verifying %s over %d loads", f.name, box.size)
    report = PropertyReport(box)
    values: dict[Load, Load] = {}

    for load in box.loads():
        try:
            values[load] = f.evaluate(load)
        except ContractivityError as e:
            report._fail("contractive", (load,), str(e))
            report._fail("monotone_failure", (load,), "not contractive")
            report._fail("all_or_nothing", (load,), "not contractive")
            _record_flags(f, report)
            return report

    for load, value in values.items():
        for k, (n_k, phi_k) in enumerate(zip(load, value)):
            if phi_k not in (0, n_k):
                report._fail(
                    "all_or_nothing", (load,), f"class {k + 1} decodes {phi_k} of {n_k}"
                )

        for j in range(f.dimension):
            if load[j] == box.upper[j]:
                continue
            larger = load[:j] + (load[j] + 1,) + load[j + 1 :]
            larger_value = values[larger]
            failure = load_sub(load, value)
            larger_failure = load_sub(larger, larger_value)
            if not load_leq(failure, larger_failure):
                report._fail(
                    "monotone_failure",
                    (load, larger),
                    f"failure {failure} at {load} exceeds {larger_failure} at {larger}",
                )
            for k in range(f.dimension):
                full_at_larger = larger_value[k] == larger[k]
                if full_at_larger and value[k] != load[k]:
                    report._fail(
                        "all_or_nothing",
                        (load, larger),
                        f"class {k + 1} fully decoded at {larger} but not at {load}",
                    )
                off_at_smaller = load[k] > 0 and value[k] == 0
                if off_at_smaller and larger_value[k] != 0:
                    report._fail(
                        "all_or_nothing",
                        (load, larger),
                        f"class {k + 1} lost at {load} but decoded at {larger}",
                    )

    _record_flags(f, report)
    return report


def leq(f: SuccessEvaluator, g: SuccessEvaluator, box: VerificationBox) -> bool:
    """Pointwise f <= g over the box."""
    _check_same_dimension(f, g)
    return all(load_leq(f(load), g(load)) for load in box.loads())


def equal_on(f: SuccessEvaluator, g: SuccessEvaluator, box: VerificationBox) -> bool:
    """Pointwise f == g over the box."""
    _check_same_dimension(f, g)
    return all(f(load) == g(load) for load in box.loads())


def is_star_shaped(f: SuccessEvaluator, box: VerificationBox) -> bool:
    """For K=1: f(n)/n non-decreasing over 1..u."""
    if f.dimension != 1:
        raise DimensionError("Star-shapedness is defined for single-class functions")
    ratios = [f((n,))[0] / n for n in range(1, box.upper[0] + 1)]
    return all(a <= b for a, b in zip(ratios, ratios[1:]))


def star_threshold(f: SuccessEvaluator, box: VerificationBox) -> Optional[int]:
    """Least n >= 1 in the box with f(n) = n, or None."""
    if f.dimension != 1:
        raise DimensionError("Star threshold is defined for single-class functions")
    for n in range(1, box.upper[0] + 1):
        if f((n,))[0] == n:
            return n
    return None
