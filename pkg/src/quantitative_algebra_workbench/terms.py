"""Signatures, terms and the term-algebra metric.

A term over a generator space ``M`` is an immutable tree of ``Var`` leaves
(points of ``M``) and ``App`` nodes. Two terms are at finite distance only
when they are similar (same shape up to variable names); then the distance
is the largest distance between generators at matching leaf positions.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Iterator, Mapping, Sequence

from quantitative_algebra_workbench.config import TERM_UNIVERSE_BUDGET
from quantitative_algebra_workbench.errors import BudgetExceeded, EvaluationError, InputError
from quantitative_algebra_workbench.metric import (
    INF,
    ZERO,
    Dist,
    MetricSpace,
    PseudometricSpace,
    canonical_key,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OperationSymbol:
    """An operation symbol; ``arity`` is a count or, for metric arities, a finite space."""

    name: str
    arity: Any

    def __post_init__(self) -> None:
        if isinstance(self.arity, bool):
            raise InputError(f"arity of {self.name} must be a natural number or a finite space")
        if isinstance(self.arity, int):
            if self.arity < 0:
                raise InputError(f"arity of {self.name} is negative")
        elif not isinstance(self.arity, PseudometricSpace):
            raise InputError(
                f"arity {self.arity!r} of {self.name} is not finite; infinitary operations "
                "can be named but not evaluated over finite carriers"
            )

    @property
    def generalized(self) -> bool:
        return isinstance(self.arity, PseudometricSpace)

    @property
    def positions(self) -> tuple:
        """Child index set: ``0..n-1`` or the points of the arity space."""
        if self.generalized:
            return self.arity.points
        return tuple(range(self.arity))

    @property
    def width(self) -> int:
        return len(self.positions)

    def arity_space(self) -> PseudometricSpace:
        if self.generalized:
            return self.arity
        return MetricSpace.discrete(range(self.arity))


class Signature:
    """An ordered collection of operation symbols; the order fixes the symbol rank."""

    def __init__(self, symbols: Iterable[OperationSymbol | tuple[str, Any]] = ()):
        built = []
        for symbol in symbols:
            if not isinstance(symbol, OperationSymbol):
                symbol = OperationSymbol(*symbol)
            built.append(symbol)
        self.symbols: tuple[OperationSymbol, ...] = tuple(built)
        self._by_name = {s.name: s for s in self.symbols}
        if len(self._by_name) != len(self.symbols):
            raise InputError("operation symbol names must be unique")
        self._rank = {s.name: i for i, s in enumerate(self.symbols)}

    def __iter__(self) -> Iterator[OperationSymbol]:
        return iter(self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, name: object) -> bool:
        return name in self._by_name

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Signature):
            return NotImplemented
        return self.symbols == other.symbols

    def __hash__(self) -> int:
        return hash(self.symbols)

    def __repr__(self) -> str:
        return "Signature(" + ", ".join(f"{s.name}/{s.width}" for s in self.symbols) + ")"

    def symbol(self, name: str) -> OperationSymbol:
        try:
            return self._by_name[name]
        except KeyError:
            raise InputError(f"unknown operation symbol {name!r}") from None

    def rank(self, name: str) -> int:
        return self._rank.get(name, len(self._rank))

    @property
    def finitary(self) -> bool:
        return not any(s.generalized for s in self.symbols)


class Term:
    """Base class of ``Var`` and ``App``."""

    __slots__ = ()
    height: int

    def sort_key(self) -> tuple:
        return term_order_key(self)


class Var(Term):
    __slots__ = ("point", "_hash")

    def __init__(self, point: Any):
        object.__setattr__(self, "point", point)
        object.__setattr__(self, "_hash", hash(("var", point)))

    def __setattr__(self, name, value):
        raise AttributeError("terms are immutable")

    height = 0

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Var) and other.point == self.point

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Var({self.point!r})"

    def __str__(self) -> str:
        return format_term(self)


class App(Term):
    __slots__ = ("symbol", "children", "height", "_hash")

    def __init__(self, symbol: str, children: Sequence[Term] = ()):
        children = tuple(children)
        for child in children:
            if not isinstance(child, Term):
                raise InputError(f"argument {child!r} of {symbol} is not a term")
        object.__setattr__(self, "symbol", symbol)
        object.__setattr__(self, "children", children)
        object.__setattr__(self, "height", 1 + max((c.height for c in children), default=0))
        object.__setattr__(self, "_hash", hash((symbol, children)))

    def __setattr__(self, name, value):
        raise AttributeError("terms are immutable")

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        return (
            isinstance(other, App)
            and other._hash == self._hash
            and other.symbol == self.symbol
            and other.children == self.children
        )

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"App({self.symbol!r}, {list(self.children)!r})"

    def __str__(self) -> str:
        return format_term(self)


def height(t: Term) -> int:
    """0 on variables, ``1 + max`` over children otherwise (constants have height 1)."""
    return t.height


def variables(t: Term) -> set:
    if isinstance(t, Var):
        return {t.point}
    found: set = set()
    for child in t.children:
        found |= variables(child)
    return found


def format_term(t: Term) -> str:
    if isinstance(t, Var):
        return str(t.point)
    return f"{t.symbol}(" + ", ".join(format_term(c) for c in t.children) + ")"


def term_order_key(t: Term, signature: Signature | None = None) -> tuple:
    """Canonical structural order: height, then symbol rank, then children left to right."""
    if isinstance(t, Var):
        return (0, 0, canonical_key(t.point))
    head = signature.rank(t.symbol) if signature is not None else 0
    return (
        t.height,
        1,
        head,
        t.symbol,
        tuple(term_order_key(c, signature) for c in t.children),
    )


def similar(t: Term, s: Term) -> bool:
    """Same tree shape and symbols, variables all pairwise similar."""
    if isinstance(t, Var) or isinstance(s, Var):
        return isinstance(t, Var) and isinstance(s, Var)
    if t.symbol != s.symbol or len(t.children) != len(s.children):
        return False
    return all(similar(a, b) for a, b in zip(t.children, s.children))


def raw_term_distance(t: Term, s: Term, generators: PseudometricSpace) -> Dist:
    """The term-algebra distance, without a universe membership check."""
    if isinstance(t, Var) and isinstance(s, Var):
        return generators.d(t.point, s.point)
    if isinstance(t, Var) or isinstance(s, Var):
        return INF
    if t.symbol != s.symbol or len(t.children) != len(s.children):
        return INF
    result: Dist = ZERO
    for a, b in zip(t.children, s.children):
        result = max(result, raw_term_distance(a, b, generators))
        if result is INF:
            break
    return result


def validate_term(t: Term, signature: Signature, generators: PseudometricSpace) -> None:
    """Check symbols, arities, variables and nonexpanding generalized child tuples.

    Raises:
        InputError: Naming the first offending subterm.
    """
    if isinstance(t, Var):
        if t.point not in generators:
            raise InputError(f"variable {t.point!r} is not a generator")
        return
    symbol = signature.symbol(t.symbol)
    if len(t.children) != symbol.width:
        raise InputError(f"{t.symbol} expects {symbol.width} arguments, got {len(t.children)} in {format_term(t)}")
    for child in t.children:
        validate_term(child, signature, generators)
    if symbol.generalized:
        arity = symbol.arity
        for (i, a), (j, b) in itertools.combinations(enumerate(t.children), 2):
            if raw_term_distance(a, b, generators) > arity.d_index(i, j):
                raise InputError(
                    f"arguments of {format_term(t)} at {arity.points[i]}, {arity.points[j]} "
                    "are further apart than the arity allows"
                )


class TermSpace:
    """All terms of height at most ``depth_bound`` with the term-algebra metric."""

    def __init__(self, signature: Signature, generators: PseudometricSpace, depth_bound: int, terms: Sequence[Term]):
        self.signature = signature
        self.generators = generators
        self.depth_bound = depth_bound
        self.terms: tuple[Term, ...] = tuple(terms)
        self._index = {t: i for i, t in enumerate(self.terms)}
        self._space: MetricSpace | None = None

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[Term]:
        return iter(self.terms)

    def __contains__(self, t: object) -> bool:
        return t in self._index

    def index(self, t: Term) -> int:
        try:
            return self._index[t]
        except KeyError:
            raise InputError(f"term {format_term(t)} is not in the universe of depth {self.depth_bound}") from None

    def d(self, t: Term, s: Term) -> Dist:
        self.index(t)
        self.index(s)
        return raw_term_distance(t, s, self.generators)

    def at_most(self, depth: int) -> list[Term]:
        return [t for t in self.terms if t.height <= depth]

    @property
    def space(self) -> MetricSpace:
        """The universe as a metric space (built on first use)."""
        if self._space is None:
            self._space = MetricSpace.from_function(
                self.terms, lambda t, s: raw_term_distance(t, s, self.generators), validate=False
            )
        return self._space


def term_distance(t: Term, s: Term, universe: TermSpace) -> Dist:
    """Distance of two terms of ``universe``: ``inf`` unless similar."""
    return universe.d(t, s)


def _child_tuples(symbol: OperationSymbol, pool: Sequence[Term], fresh_from: int, generators: PseudometricSpace) -> Iterator[tuple]:
    """Child tuples over ``pool`` using at least one term at index ``>= fresh_from``."""
    width = symbol.width
    if not symbol.generalized:
        for combo in itertools.product(range(len(pool)), repeat=width):
            if max(combo) >= fresh_from:
                yield tuple(pool[k] for k in combo)
        return
    arity = symbol.arity
    chosen: list[int] = []

    def extend(i: int) -> Iterator[tuple]:
        if i == width:
            if max(chosen) >= fresh_from:
                yield tuple(pool[k] for k in chosen)
            return
        for k, candidate in enumerate(pool):
            if all(
                raw_term_distance(pool[chosen[j]], candidate, generators) <= arity.d_index(j, i)
                for j in range(i)
            ):
                chosen.append(k)
                yield from extend(i + 1)
                chosen.pop()

    yield from extend(0)


def enumerate_terms(
    signature: Signature,
    generators: PseudometricSpace,
    depth: int,
    budget: int = TERM_UNIVERSE_BUDGET,
) -> TermSpace:
    """Every valid term of height ``<= depth``, in canonical structural order.

    Raises:
        BudgetExceeded: If the universe would exceed ``budget`` terms.
    """
    if depth < 0:
        raise InputError("depth must be non-negative")
    universe: list[Term] = [Var(p) for p in generators.points]
    if len(universe) > budget:
        raise BudgetExceeded(f"term universe exceeds budget of {budget} terms")
    previous_size = 0
    for level in range(1, depth + 1):
        fresh: list[Term] = []
        for symbol in signature:
            if symbol.width == 0:
                if level == 1:
                    fresh.append(App(symbol.name))
                continue
            for children in _child_tuples(symbol, universe, previous_size, generators):
                if max(c.height for c in children) != level - 1:
                    continue
                fresh.append(App(symbol.name, children))
                if len(universe) + len(fresh) > budget:
                    raise BudgetExceeded(
                        f"term universe exceeds budget of {budget} terms at height {level}"
                    )
        fresh.sort(key=lambda t: term_order_key(t, signature))
        previous_size = len(universe)
        universe.extend(fresh)
        logger.debug(f"height {level}: {len(fresh)} new terms, {len(universe)} total")
    return TermSpace(signature, generators, depth, universe)


def homomorphic_extension(assignment: Mapping | Callable, algebra: Any) -> Callable[[Term], Any]:
    """The unique homomorphism ``f#`` from terms to ``algebra`` extending ``assignment``.

    ``algebra`` needs an ``apply(symbol, args)`` method. Undefined operation entries
    raise ``EvaluationError`` carrying the offending subterm.
    """
    lookup = assignment.__getitem__ if isinstance(assignment, Mapping) else assignment
    cache: dict[Term, Any] = {}

    def extend(t: Term) -> Any:
        if t in cache:
            return cache[t]
        if isinstance(t, Var):
            try:
                value = lookup(t.point)
            except KeyError:
                raise EvaluationError(f"no value for variable {t.point!r}", term=t) from None
        else:
            args = tuple(extend(c) for c in t.children)
            try:
                value = algebra.apply(t.symbol, args)
            except EvaluationError as exc:
                if exc.term is not None:
                    raise
                raise EvaluationError(f"{exc} while evaluating {format_term(t)}", term=t) from exc
        cache[t] = value
        return value

    return extend


def kleisli_extension(assignment: Mapping | Callable) -> Callable[[Term], Term]:
    """Substitution ``f*``: replace every variable by the term ``assignment`` gives it."""
    lookup = assignment.__getitem__ if isinstance(assignment, Mapping) else assignment

    def substitute(t: Term) -> Term:
        if isinstance(t, Var):
            return lookup(t.point)
        return App(t.symbol, tuple(substitute(c) for c in t.children))

    return substitute


def binary_partial_signature() -> Signature:
    """A binary operation defined only on arguments at distance ``<= 1``, plus a constant ``s``."""
    pair = MetricSpace.from_pairs(("x", "y"), {("x", "y"): 1})
    return Signature([OperationSymbol("bin", pair), OperationSymbol("s", 0)])


def monoid_signature() -> Signature:
    return Signature([("mul", 2), ("unit", 0)])


def semilattice_signature() -> Signature:
    return Signature([("join", 2), ("zero", 0)])
