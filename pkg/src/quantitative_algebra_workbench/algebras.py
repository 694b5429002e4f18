"""Finite quantitative algebras and their homomorphisms."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Any, Callable, Iterator, Mapping, Sequence

from quantitative_algebra_workbench.config import ENUMERATION_BUDGET, IMAGE_SIZE_CAP
from quantitative_algebra_workbench.errors import BudgetExceeded, EvaluationError, InputError
from quantitative_algebra_workbench.metric import (
    INF,
    ZERO,
    Dist,
    MetricSpace,
    NonexpandingMap,
    PseudometricSpace,
    format_dist,
    hom_space,
    product_all,
    smallest_pseudometric,
)
from quantitative_algebra_workbench.reports import CheckReport, check_report, label, witness
from quantitative_algebra_workbench.terms import OperationSymbol, Signature, monoid_signature

logger = logging.getLogger(__name__)


def nonexpanding_tuples(arity: PseudometricSpace, carrier: PseudometricSpace) -> list[tuple]:
    """Argument tuples of a generalized operation: nonexpanding maps ``arity -> carrier``."""
    return [f.images for f in hom_space(arity, carrier).points]


def argument_distance(carrier: PseudometricSpace, a: Sequence, b: Sequence) -> Dist:
    """Supremum distance of two argument tuples; 0 for nullary ones."""
    return max((carrier.d(x, y) for x, y in zip(a, b)), default=ZERO)


class QuantAlgebra:
    """A finite carrier with one operation table per symbol.

    Finitary tables are keyed by every tuple in ``carrier^n``; tables of
    generalized symbols by the nonexpanding argument tuples, listed in the
    order of the arity space's points. A ``partial`` algebra may leave entries
    out; applying it there raises ``EvaluationError``.

    Raises:
        InputError: If a table is not shape-correct.
    """

    def __init__(
        self,
        signature: Signature,
        carrier: PseudometricSpace,
        tables: Mapping[str, Mapping[tuple, Any]],
        *,
        partial: bool = False,
        name: str = "",
    ):
        self.signature = signature
        self.carrier = carrier
        self.partial = partial
        self.name = name
        self._domains: dict[str, list[tuple]] = {}
        built: dict[str, dict[tuple, Any]] = {}
        for symbol in signature:
            if symbol.name not in tables:
                raise InputError(f"no table for operation {symbol.name}")
            table = {tuple(k): v for k, v in tables[symbol.name].items()}
            domain = self.domain(symbol)
            allowed = set(domain)
            for key, value in table.items():
                if key not in allowed:
                    raise InputError(f"{symbol.name}{label(key)} is not an argument tuple of this carrier")
                if value not in carrier:
                    raise InputError(f"{symbol.name}{label(key)} = {value!r} is not in the carrier")
            if not partial and len(table) != len(domain):
                missing = next(k for k in domain if k not in table)
                raise InputError(f"table of {symbol.name} is undefined at {label(missing)}")
            built[symbol.name] = table
        extra = set(tables) - set(built)
        if extra:
            raise InputError(f"table given for unknown operation {sorted(extra)[0]}")
        self.tables = built

    @classmethod
    def from_operations(
        cls,
        signature: Signature,
        carrier: PseudometricSpace,
        operations: Mapping[str, Callable[..., Any]],
        **kwargs: Any,
    ) -> "QuantAlgebra":
        """Tabulate Python callables over every argument tuple."""
        shape = cls(signature, carrier, {s.name: {} for s in signature}, partial=True)
        tables = {
            s.name: {args: operations[s.name](*args) for args in shape.domain(s)}
            for s in signature
        }
        return cls(signature, carrier, tables, **kwargs)

    def domain(self, symbol: OperationSymbol | str) -> list[tuple]:
        """Every argument tuple on which ``symbol`` should be defined."""
        if isinstance(symbol, str):
            symbol = self.signature.symbol(symbol)
        if symbol.name not in self._domains:
            if symbol.generalized:
                self._domains[symbol.name] = nonexpanding_tuples(symbol.arity, self.carrier)
            else:
                count = len(self.carrier) ** symbol.width
                if count > ENUMERATION_BUDGET:
                    raise BudgetExceeded(f"table of {symbol.name} has {count} entries")
                self._domains[symbol.name] = list(itertools.product(self.carrier.points, repeat=symbol.width))
        return self._domains[symbol.name]

    def apply(self, name: str, args: Sequence) -> Any:
        try:
            return self.tables[name][tuple(args)]
        except KeyError:
            if name not in self.tables:
                raise EvaluationError(f"unknown operation {name}") from None
            raise EvaluationError(f"{name} is undefined at {label(tuple(args))}") from None

    def is_defined(self, name: str, args: Sequence) -> bool:
        return tuple(args) in self.tables.get(name, {})

    def __len__(self) -> int:
        return len(self.carrier)

    def __repr__(self) -> str:
        kind = "partial " if self.partial else ""
        return f"QuantAlgebra({self.name or kind + 'algebra'}, {len(self.carrier)} elements)"

    def same_tables(self, other: "QuantAlgebra") -> bool:
        return self.carrier == other.carrier and self.tables == other.tables


@dataclass(frozen=True)
class Homomorphism:
    source: QuantAlgebra
    target: QuantAlgebra
    map: NonexpandingMap

    def __call__(self, x: Any) -> Any:
        return self.map(x)


def _as_map(f: Any, source: QuantAlgebra, target: QuantAlgebra) -> NonexpandingMap:
    if isinstance(f, Homomorphism):
        return f.map
    if isinstance(f, NonexpandingMap):
        return f
    return NonexpandingMap(source.carrier, target.carrier, f, check=False)


def check_algebra(algebra: QuantAlgebra) -> CheckReport:
    """Every pair of argument tuples whose results lie further apart than the tuples."""
    witnesses = []
    carrier = algebra.carrier
    for symbol in algebra.signature:
        table = algebra.tables[symbol.name]
        entries = list(table.items())
        for (a, x), (b, y) in itertools.combinations(entries, 2):
            before = argument_distance(carrier, a, b)
            after = carrier.d(x, y)
            if after > before:
                witnesses.append(witness(
                    "expanding-operation",
                    f"d({symbol.name}{label(a)}, {symbol.name}{label(b)}) = {format_dist(after)} "
                    f"exceeds argument distance {format_dist(before)}",
                    symbol=symbol.name, left=a, right=b, argument_distance=before, result_distance=after,
                ))
    return check_report("algebra", witnesses, elements=len(carrier), partial=algebra.partial)


def check_homomorphism(f: Any, source: QuantAlgebra, target: QuantAlgebra) -> CheckReport:
    """Nonexpansiveness of ``f`` plus commutation with every defined table entry."""
    if source.signature != target.signature:
        raise InputError("homomorphism between algebras of different signatures")
    mapping = _as_map(f, source, target)
    witnesses = [
        witness(
            "expanding-map",
            f"d({label(x)}, {label(x2)}) = {format_dist(before)} but images are at {format_dist(after)}",
            left=x, right=x2, source_distance=before, target_distance=after,
        )
        for x, x2, before, after in mapping.expansions()
    ]
    for symbol in source.signature:
        for args, value in source.tables[symbol.name].items():
            image_args = tuple(mapping(a) for a in args)
            if not target.is_defined(symbol.name, image_args):
                witnesses.append(witness(
                    "undefined-in-target",
                    f"{symbol.name}{label(image_args)} is undefined in the target",
                    symbol=symbol.name, arguments=args,
                ))
                continue
            expected = target.apply(symbol.name, image_args)
            if mapping(value) != expected:
                witnesses.append(witness(
                    "not-preserved",
                    f"f({symbol.name}{label(args)}) = {label(mapping(value))} but "
                    f"{symbol.name}(f{label(args)}) = {label(expected)}",
                    symbol=symbol.name, arguments=args,
                ))
    return check_report("homomorphism", witnesses)


def one_point_algebra(signature: Signature, point: Any = "*") -> QuantAlgebra:
    """The terminal algebra: it satisfies every equation."""
    carrier = MetricSpace([point], [[ZERO]], validate=False)
    return QuantAlgebra.from_operations(
        signature, carrier, {s.name: (lambda *args, _p=point: _p) for s in signature}, name="one-point"
    )


def word_algebra(alphabet: PseudometricSpace, cap: int) -> QuantAlgebra:
    """Words of length ``<= cap`` under concatenation truncated to ``cap`` letters.

    Truncated concatenation is associative with the empty word as unit, and it is
    nonexpanding for the letterwise metric (words of different lengths at ``inf``).
    """
    words = [w for n in range(cap + 1) for w in itertools.product(alphabet.points, repeat=n)]

    def distance(u: tuple, v: tuple) -> Dist:
        if len(u) != len(v):
            return INF
        return max((alphabet.d(a, b) for a, b in zip(u, v)), default=ZERO)

    carrier = MetricSpace.from_function(words, distance, validate=False)
    return QuantAlgebra.from_operations(
        monoid_signature(),
        carrier,
        {"mul": lambda u, v: (u + v)[:cap], "unit": lambda: ()},
        name=f"words<={cap}",
    )


def product_algebra(algebras: Sequence[QuantAlgebra], signature: Signature | None = None) -> QuantAlgebra:
    """Componentwise product with the maximum metric; the empty product is the one-point algebra."""
    if not algebras:
        if signature is None:
            raise InputError("the empty product needs an explicit signature")
        return one_point_algebra(signature, point=())
    signature = algebras[0].signature
    if any(a.signature != signature for a in algebras):
        raise InputError("product of algebras with different signatures")
    if not signature.finitary:
        raise InputError("products are only built for finitary signatures")
    carrier = product_all([a.carrier for a in algebras])

    def componentwise(name: str) -> Callable[..., tuple]:
        return lambda *args: tuple(
            a.apply(name, tuple(arg[i] for arg in args)) for i, a in enumerate(algebras)
        )

    return QuantAlgebra.from_operations(
        signature,
        carrier,
        {s.name: componentwise(s.name) for s in signature},
        partial=any(a.partial for a in algebras),
        name="product",
    )


def projection(product: QuantAlgebra, factors: Sequence[QuantAlgebra], i: int) -> Homomorphism:
    return Homomorphism(
        product,
        factors[i],
        NonexpandingMap(product.carrier, factors[i].carrier, lambda x: x[i], check=False),
    )


def subalgebra_generated(algebra: QuantAlgebra, seed: Sequence[Any]) -> QuantAlgebra:
    """Least operation-closed subset containing ``seed``, with the inherited metric."""
    members = set()
    for x in seed:
        algebra.carrier.index(x)
        members.add(x)
    changed = True
    while changed:
        changed = False
        for symbol in algebra.signature:
            for args, value in algebra.tables[symbol.name].items():
                if value not in members and all(a in members for a in args):
                    members.add(value)
                    changed = True
    ordered = [x for x in algebra.carrier.points if x in members]
    carrier = algebra.carrier.subspace(ordered)
    tables = {
        s.name: {
            args: value
            for args, value in algebra.tables[s.name].items()
            if all(a in members for a in args)
        }
        for s in algebra.signature
    }
    return QuantAlgebra(algebra.signature, carrier, tables, partial=algebra.partial, name="subalgebra")


def inclusion(sub: QuantAlgebra, algebra: QuantAlgebra) -> Homomorphism:
    """The isometric embedding of a subalgebra."""
    return Homomorphism(sub, algebra, NonexpandingMap(sub.carrier, algebra.carrier, lambda x: x))


def restrict(algebra: QuantAlgebra, points: Sequence[Any], name: str = "") -> QuantAlgebra:
    """The subalgebra on an operation-closed subset (``InputError`` if it is not closed)."""
    members = set(points)
    tables = {}
    for symbol in algebra.signature:
        table = {}
        for args, value in algebra.tables[symbol.name].items():
            if all(a in members for a in args):
                if value not in members:
                    raise InputError(f"{label(points)} is not closed under {symbol.name}")
                table[args] = value
        tables[symbol.name] = table
    ordered = [x for x in algebra.carrier.points if x in members]
    return QuantAlgebra(algebra.signature, algebra.carrier.subspace(ordered), tables, partial=algebra.partial, name=name)


def image_factorization(f: Homomorphism) -> tuple[Homomorphism, Homomorphism]:
    """Split ``f`` into a surjective homomorphism onto ``f[A]`` and an isometric embedding."""
    image_points = set(f.map.images)
    image = restrict(f.target, [y for y in f.target.carrier.points if y in image_points], name="image")
    surjective = Homomorphism(f.source, image, NonexpandingMap(f.source.carrier, image.carrier, f.map, check=False))
    return surjective, inclusion(image, f.target)


def _partitions(items: Sequence[Any]) -> Iterator[list[list[Any]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for smaller in _partitions(rest):
        yield [[first]] + smaller
        for i in range(len(smaller)):
            yield smaller[:i] + [[first] + smaller[i]] + smaller[i + 1:]


def _is_congruence(algebra: QuantAlgebra, block_of: Mapping[Any, int]) -> bool:
    for symbol in algebra.signature:
        table = algebra.tables[symbol.name]
        for (a, x), (b, y) in itertools.combinations(table.items(), 2):
            if block_of[x] != block_of[y] and all(block_of[p] == block_of[q] for p, q in zip(a, b)):
                return False
    return True


def _greatest_quotient_metric(algebra: QuantAlgebra, reps: list[Any], block_of: Mapping[Any, int]) -> PseudometricSpace:
    """Largest pseudometric on the blocks making the quotient map and every operation nonexpanding."""
    carrier = algebra.carrier
    constraints = [
        (reps[block_of[x]], reps[block_of[y]], carrier.d(x, y))
        for x, y in carrier.pairs()
        if block_of[x] != block_of[y] and carrier.d(x, y) is not INF
    ]
    quotient = smallest_pseudometric(reps, constraints)
    entries = [
        (symbol.name, tuple(block_of[a] for a in args), block_of[value])
        for symbol in algebra.signature
        for args, value in algebra.tables[symbol.name].items()
    ]
    while True:
        bounds = []
        for (name, a, x), (name2, b, y) in itertools.combinations(entries, 2):
            if name != name2 or x == y:
                continue
            bound = max((quotient.d(reps[i], reps[j]) for i, j in zip(a, b)), default=ZERO)
            if quotient.d(reps[x], reps[y]) > bound:
                bounds.append((reps[x], reps[y], bound))
        if not bounds:
            return quotient
        current = [
            (p, q, quotient.d(p, q)) for p, q in itertools.combinations(reps, 2) if quotient.d(p, q) is not INF
        ]
        quotient = smallest_pseudometric(reps, current + bounds)


def homomorphic_images(algebra: QuantAlgebra, size_cap: int = IMAGE_SIZE_CAP) -> list[Homomorphism]:
    """Surjective homomorphisms onto quotients by operation-compatible partitions.

    Each quotient carries the greatest admissible metric and, in addition, its
    truncations ``min(d, theta)`` at every realized positive distance ``theta``.
    Partitions whose greatest metric identifies distinct blocks are skipped; the
    coarser partition is enumerated on its own.

    Raises:
        BudgetExceeded: If the carrier has more than ``size_cap`` elements.
    """
    if not algebra.signature.finitary:
        raise InputError("homomorphic images are only enumerated for finitary signatures")
    if len(algebra) > size_cap:
        raise BudgetExceeded(f"homomorphic images are enumerated for at most {size_cap} elements")
    images = []
    for partition in _partitions(list(algebra.carrier.points)):
        block_of = {x: i for i, block in enumerate(partition) for x in block}
        if not _is_congruence(algebra, block_of):
            continue
        reps = [block[0] for block in partition]
        metric = _greatest_quotient_metric(algebra, reps, block_of)
        if not metric.is_metric():
            continue
        for theta in [None] + metric.realized_distances(include_zero=False):
            if theta is None:
                space = MetricSpace(reps, metric.rows, validate=False)
            else:
                space = MetricSpace.from_function(reps, lambda p, q, t=theta: min(metric.d(p, q), t), validate=False)
            tables = {
                s.name: {
                    tuple(reps[block_of[a]] for a in args): reps[block_of[value]]
                    for args, value in algebra.tables[s.name].items()
                }
                for s in algebra.signature
            }
            quotient = QuantAlgebra(algebra.signature, space, tables, partial=algebra.partial, name="image")
            images.append(Homomorphism(
                algebra, quotient, NonexpandingMap(algebra.carrier, space, lambda x: reps[block_of[x]], check=False)
            ))
    logger.debug(f"{len(images)} homomorphic images of a {len(algebra)}-element algebra")
    return images


def _tables_for(symbol: OperationSymbol, carrier: PseudometricSpace) -> list[dict[tuple, Any]]:
    """All nonexpanding tables of one finitary symbol, by backtracking."""
    domain = list(itertools.product(carrier.points, repeat=symbol.width))
    found: list[dict] = []
    values: list[Any] = []

    def extend(i: int) -> None:
        if i == len(domain):
            found.append(dict(zip(domain, values)))
            return
        for candidate in carrier.points:
            if all(
                carrier.d(values[j], candidate) <= argument_distance(carrier, domain[j], domain[i])
                for j in range(i)
            ):
                values.append(candidate)
                extend(i + 1)
                values.pop()

    extend(0)
    return found


def enumerate_algebras(
    signature: Signature,
    carrier: PseudometricSpace,
    budget: int = ENUMERATION_BUDGET,
) -> Iterator[QuantAlgebra]:
    """Every algebra on ``carrier`` with nonexpanding operations, in a fixed order.

    Raises:
        BudgetExceeded: If the raw table space exceeds ``budget``.
    """
    if not signature.finitary:
        raise InputError("algebras are only enumerated for finitary signatures")
    candidates = 1
    for symbol in signature:
        candidates *= len(carrier) ** (len(carrier) ** symbol.width)
        if candidates > budget:
            raise BudgetExceeded(f"more than {budget} candidate operation tables")
    per_symbol = [_tables_for(symbol, carrier) for symbol in signature]
    for combination in itertools.product(*per_symbol):
        yield QuantAlgebra(signature, carrier, {s.name: t for s, t in zip(signature, combination)})
