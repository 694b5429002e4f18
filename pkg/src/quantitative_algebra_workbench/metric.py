"""Exact extended metric spaces and the constructions built on them.

Distances are either ``fractions.Fraction`` values or the ``INF`` singleton.
Spaces are finite, immutable and carry their points in a fixed order; every
construction here is a pure function of its inputs.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Hashable, Iterable, Iterator, Mapping, Sequence, Union

from quantitative_algebra_workbench.config import (
    ENUMERATION_BUDGET,
    HOM_SPACE_BUDGET,
    ISOMETRY_SEARCH_LIMIT,
)
from quantitative_algebra_workbench.errors import BudgetExceeded, InputError

logger = logging.getLogger(__name__)


class Infinity:
    """The distance ``inf``: absorbs addition and dominates every rational."""

    _instance: "Infinity | None" = None

    def __new__(cls) -> "Infinity":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __reduce__(self):
        return (Infinity, ())

    def __repr__(self) -> str:
        return "INF"

    def __str__(self) -> str:
        return "inf"

    def __hash__(self) -> int:
        return hash("qalg-infinity")

    def __eq__(self, other: object) -> bool:
        return other is self

    def __lt__(self, other: object) -> bool:
        return False

    def __le__(self, other: object) -> bool:
        return other is self

    def __gt__(self, other: object) -> bool:
        return other is not self

    def __ge__(self, other: object) -> bool:
        return True

    def __add__(self, other: object) -> "Infinity":
        return self

    __radd__ = __add__


INF = Infinity()
ZERO = Fraction(0)

Dist = Union[Fraction, Infinity]
Point = Hashable


def as_dist(value: Any) -> Dist:
    """Coerce ints, ``Fraction`` values, ``"p/q"`` strings and ``INF`` to a distance."""
    if value is INF:
        return INF
    if isinstance(value, bool) or isinstance(value, float):
        raise InputError(f"distance {value!r} is not an exact rational")
    if isinstance(value, str):
        return parse_dist(value)
    if isinstance(value, (int, Fraction)):
        result = Fraction(value)
    else:
        raise InputError(f"distance {value!r} is not an exact rational")
    if result < 0:
        raise InputError(f"distance {value!r} is negative")
    return result


def parse_dist(text: str) -> Dist:
    """Parse ``inf``, ``p`` or ``p/q``; decimals are rejected."""
    text = text.strip()
    if text == "inf":
        return INF
    numerator, slash, denominator = text.partition("/")
    if not numerator.isdigit() or (slash and not denominator.isdigit()):
        raise InputError(f"rational p/q expected, got {text!r}")
    if slash and int(denominator) == 0:
        raise InputError(f"zero denominator in {text!r}")
    return Fraction(int(numerator), int(denominator) if slash else 1)


def format_dist(value: Dist) -> str:
    if value is INF:
        return "inf"
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def canonical_key(obj: Any) -> tuple:
    """A total, process-independent sort key for points of any construction."""
    if isinstance(obj, str):
        return (0, obj)
    if isinstance(obj, (int, Fraction)) and not isinstance(obj, bool):
        return (1, obj)
    if isinstance(obj, tuple):
        return (2, len(obj), tuple(canonical_key(item) for item in obj))
    if isinstance(obj, frozenset):
        return (3, len(obj), tuple(sorted(canonical_key(item) for item in obj)))
    sort_key = getattr(obj, "sort_key", None)
    if callable(sort_key):
        return (4, sort_key())
    return (5, repr(obj))


class PseudometricSpace:
    """A finite set of labelled points with a symmetric extended distance matrix.

    Args:
        points: Point labels, in the order used for every enumeration.
        matrix: Row-major distances, ``matrix[i][j] = d(points[i], points[j])``.
        validate: Check the axioms (and coerce entries) before accepting the matrix.

    Raises:
        InputError: On duplicate labels, a malformed matrix or a violated axiom.
    """

    requires_separation = False
    kind = "pseudometric space"

    def __init__(self, points: Iterable[Point], matrix: Sequence[Sequence[Any]], *, validate: bool = True):
        self.points: tuple = tuple(points)
        self._index = {p: i for i, p in enumerate(self.points)}
        if len(self._index) != len(self.points):
            raise InputError(f"duplicate point labels in {self.points!r}")
        if len(matrix) != len(self.points) or any(len(row) != len(self.points) for row in matrix):
            raise InputError("distance matrix does not match the number of points")
        if validate:
            self._rows = tuple(tuple(as_dist(v) for v in row) for row in matrix)
            problems = check_metric_axioms(self, require_separation=self.requires_separation)
            if problems:
                more = f" (and {len(problems) - 1} more)" if len(problems) > 1 else ""
                raise InputError(f"not a valid {self.kind}: {problems[0]}{more}")
        else:
            self._rows = tuple(tuple(row) for row in matrix)

    @classmethod
    def from_function(cls, points: Iterable[Point], distance: Callable[[Point, Point], Any], *, validate: bool = True):
        points = tuple(points)
        return cls(points, [[distance(x, y) for y in points] for x in points], validate=validate)

    @classmethod
    def from_pairs(
        cls,
        points: Iterable[Point],
        pairs: Mapping[tuple[Point, Point], Any],
        default: Any = INF,
        *,
        validate: bool = True,
    ):
        """Build a space from the listed distances; unlisted pairs get ``default``."""
        points = tuple(points)
        index = {p: i for i, p in enumerate(points)}
        n = len(points)
        matrix = [[ZERO if i == j else default for j in range(n)] for i in range(n)]
        seen: dict[tuple[int, int], Any] = {}
        for (x, y), value in pairs.items():
            if x not in index or y not in index:
                raise InputError(f"unknown point in distance entry d({x}, {y})")
            i, j = index[x], index[y]
            key = (min(i, j), max(i, j))
            if key in seen and seen[key] != value:
                raise InputError(f"conflicting distances given for d({x}, {y})")
            seen[key] = value
            matrix[i][j] = matrix[j][i] = value
        return cls(points, matrix, validate=validate)

    @classmethod
    def discrete(cls, points: Iterable[Point]):
        points = tuple(points)
        n = len(points)
        return cls(points, [[ZERO if i == j else INF for j in range(n)] for i in range(n)], validate=False)

    def d(self, x: Point, y: Point) -> Dist:
        return self._rows[self.index(x)][self.index(y)]

    def d_index(self, i: int, j: int) -> Dist:
        return self._rows[i][j]

    def index(self, x: Point) -> int:
        try:
            return self._index[x]
        except KeyError:
            raise InputError(f"unknown point {x!r}") from None

    @property
    def rows(self) -> tuple:
        return self._rows

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[Point]:
        return iter(self.points)

    def __contains__(self, x: object) -> bool:
        try:
            return x in self._index
        except TypeError:
            return False

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PseudometricSpace):
            return NotImplemented
        if set(self.points) != set(other.points):
            return False
        return all(self.d(x, y) == other.d(x, y) for x in self.points for y in self.points)

    def __hash__(self) -> int:
        return hash(frozenset(self.points))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({len(self.points)} points)"

    def pairs(self) -> Iterator[tuple[Point, Point]]:
        """Unordered pairs of distinct points."""
        return itertools.combinations(self.points, 2)

    def realized_distances(self, include_zero: bool = True) -> list[Fraction]:
        """Sorted distinct finite distances occurring in the space."""
        values = {v for row in self._rows for v in row if v is not INF}
        if not include_zero:
            values.discard(ZERO)
        elif self.points:
            values.add(ZERO)
        return sorted(values)

    def subspace(self, points: Iterable[Point]):
        chosen = [p for p in points]
        for p in chosen:
            self.index(p)
        return type(self)(chosen, [[self.d(x, y) for y in chosen] for x in chosen], validate=False)

    def is_discrete(self) -> bool:
        return all(self.d(x, y) is INF for x, y in self.pairs())

    def is_metric(self) -> bool:
        return all(self.d(x, y) != ZERO for x, y in self.pairs())

    def as_metric(self) -> "MetricSpace":
        return MetricSpace(self.points, self._rows)


class MetricSpace(PseudometricSpace):
    """A finite extended metric space: a pseudometric space where ``d(x, y) = 0`` forces ``x = y``."""

    requires_separation = True
    kind = "metric space"


def check_metric_axioms(space: PseudometricSpace, require_separation: bool | None = None) -> list[str]:
    """List every violated axiom, found by exhaustive pair and triple enumeration."""
    if require_separation is None:
        require_separation = space.requires_separation
    problems: list[str] = []
    points = space.points
    rows = space.rows
    n = len(points)
    for i in range(n):
        if rows[i][i] != ZERO:
            problems.append(f"d({points[i]}, {points[i]}) = {format_dist(rows[i][i])} is not 0")
        for j in range(n):
            value = rows[i][j]
            if value is not INF and not (isinstance(value, Fraction) and value >= 0):
                problems.append(f"d({points[i]}, {points[j]}) = {value!r} is not a distance")
                return problems
    for i, j in itertools.combinations(range(n), 2):
        if rows[i][j] != rows[j][i]:
            problems.append(f"d({points[i]}, {points[j]}) is not symmetric")
        if require_separation and rows[i][j] == ZERO:
            problems.append(f"distinct points {points[i]} and {points[j]} are at distance 0")
    for i in range(n):
        for j in range(n):
            dij = rows[i][j]
            if dij is INF:
                continue
            for k in range(n):
                if rows[i][k] > dij + rows[j][k]:
                    problems.append(
                        f"triangle inequality fails: d({points[i]}, {points[k]}) > "
                        f"d({points[i]}, {points[j]}) + d({points[j]}, {points[k]})"
                    )
    return problems


class NonexpandingMap:
    """A map between finite spaces with ``d(f x, f x') <= d(x, x')``.

    Args:
        dom: Domain space.
        cod: Codomain space.
        assignment: A mapping or callable giving the image of every domain point.
        check: Verify nonexpansiveness and raise ``InputError`` on failure. Diagnostic
            code builds unchecked maps and asks for ``expansions()`` instead.
    """

    __slots__ = ("dom", "cod", "images")

    def __init__(self, dom: PseudometricSpace, cod: PseudometricSpace, assignment: Mapping | Callable, *, check: bool = True):
        self.dom = dom
        self.cod = cod
        if isinstance(assignment, Mapping):
            missing = [x for x in dom.points if x not in assignment]
            if missing:
                raise InputError(f"map is undefined on {missing[0]!r}")
            images = tuple(assignment[x] for x in dom.points)
        else:
            images = tuple(assignment(x) for x in dom.points)
        for x, y in zip(dom.points, images):
            if y not in cod:
                raise InputError(f"image {y!r} of {x!r} is not a point of the codomain")
        self.images = images
        if check:
            witnesses = self.expansions(limit=1)
            if witnesses:
                x, x2, before, after = witnesses[0]
                raise InputError(
                    f"map is not nonexpanding: d({x}, {x2}) = {format_dist(before)} "
                    f"but images are at {format_dist(after)}"
                )

    @classmethod
    def identity(cls, space: PseudometricSpace) -> "NonexpandingMap":
        return cls(space, space, lambda x: x, check=False)

    def __call__(self, x: Point) -> Point:
        return self.images[self.dom.index(x)]

    @property
    def mapping(self) -> dict:
        return dict(zip(self.dom.points, self.images))

    def expansions(self, limit: int | None = None) -> list[tuple[Point, Point, Dist, Dist]]:
        """Pairs ``(x, x', d(x, x'), d(f x, f x'))`` witnessing expansion."""
        found = []
        cod_index = [self.cod.index(y) for y in self.images]
        for i, j in itertools.combinations(range(len(self.dom)), 2):
            after = self.cod.d_index(cod_index[i], cod_index[j])
            before = self.dom.d_index(i, j)
            if after > before:
                found.append((self.dom.points[i], self.dom.points[j], before, after))
                if limit is not None and len(found) >= limit:
                    break
        return found

    def is_nonexpanding(self) -> bool:
        return not self.expansions(limit=1)

    def is_surjective(self) -> bool:
        return set(self.images) == set(self.cod.points)

    def is_injective(self) -> bool:
        return len(set(self.images)) == len(self.images)

    def is_isometric(self) -> bool:
        return all(
            self.cod.d(self.images[i], self.images[j]) == self.dom.d_index(i, j)
            for i, j in itertools.combinations(range(len(self.dom)), 2)
        )

    def then(self, other: "NonexpandingMap") -> "NonexpandingMap":
        """The composite ``other ∘ self``."""
        if other.dom.points != self.cod.points:
            raise InputError("maps are not composable")
        return NonexpandingMap(self.dom, other.cod, lambda x: other(self(x)), check=False)

    def sort_key(self) -> tuple:
        return canonical_key(self.images)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NonexpandingMap):
            return NotImplemented
        return (
            self.images == other.images
            and self.dom.points == other.dom.points
            and self.cod.points == other.cod.points
        )

    def __hash__(self) -> int:
        return hash(self.images)

    def __repr__(self) -> str:
        body = ", ".join(f"{x}->{y}" for x, y in zip(self.dom.points, self.images))
        return f"NonexpandingMap({body})"


def map_distance(f: NonexpandingMap, g: NonexpandingMap) -> Dist:
    """The supremum distance ``sup_x d(f x, g x)``; 0 on an empty domain."""
    return max((f.cod.d(a, b) for a, b in zip(f.images, g.images)), default=ZERO)


def product_all(spaces: Sequence[PseudometricSpace]) -> MetricSpace:
    """Cartesian product with the maximum metric; points are tuples."""
    size = 1
    for space in spaces:
        size *= len(space)
    if size > ENUMERATION_BUDGET:
        raise BudgetExceeded(f"product has {size} points, budget is {ENUMERATION_BUDGET}")
    points = list(itertools.product(*(space.points for space in spaces)))
    index_tuples = list(itertools.product(*(range(len(space)) for space in spaces)))
    rows = []
    for a in index_tuples:
        rows.append([
            max((space.d_index(i, j) for space, i, j in zip(spaces, a, b)), default=ZERO)
            for b in index_tuples
        ])
    return MetricSpace(points, rows, validate=False)


def product(a: PseudometricSpace, b: PseudometricSpace) -> MetricSpace:
    """Binary product ``A x B`` with ``d((a, b), (a', b')) = max(d(a, a'), d(b, b'))``."""
    return product_all([a, b])


def power(a: PseudometricSpace, n: int) -> MetricSpace:
    return product_all([a] * n)


def tensor(a: PseudometricSpace, b: PseudometricSpace) -> MetricSpace:
    """Tensor product: cartesian pairs with the (saturating) sum metric."""
    points = list(itertools.product(a.points, b.points))
    rows = [
        [a.d(x, x2) + b.d(y, y2) for (x2, y2) in points]
        for (x, y) in points
    ]
    return MetricSpace(points, rows, validate=False)


def hom_space(a: PseudometricSpace, b: PseudometricSpace) -> MetricSpace:
    """All nonexpanding maps ``A -> B`` with the supremum metric.

    Raises:
        BudgetExceeded: If ``|B|^|A|`` exceeds the configured hom-space budget.
    """
    candidates = len(b) ** len(a)
    if candidates > HOM_SPACE_BUDGET:
        raise BudgetExceeded(f"hom-space has up to {candidates} maps, budget is {HOM_SPACE_BUDGET}")
    n = len(a)
    maps: list[NonexpandingMap] = []
    chosen: list[int] = []

    def extend(i: int) -> None:
        if i == n:
            maps.append(NonexpandingMap(a, b, dict(zip(a.points, (b.points[k] for k in chosen))), check=False))
            return
        for k in range(len(b)):
            if all(b.d_index(chosen[j], k) <= a.d_index(j, i) for j in range(i)):
                chosen.append(k)
                extend(i + 1)
                chosen.pop()

    extend(0)
    logger.debug(f"hom-space of {len(a)} -> {len(b)} points has {len(maps)} maps")
    return MetricSpace.from_function(maps, map_distance, validate=False)


def check_ultrametric(a: PseudometricSpace) -> bool:
    """True iff ``d(x, z) <= max(d(x, y), d(y, z))`` for all triples."""
    return all(
        a.d(x, z) <= max(a.d(x, y), a.d(y, z))
        for x in a.points for y in a.points for z in a.points
    )


def smallest_pseudometric(points: Iterable[Point], constraints: Iterable[tuple[Point, Point, Any]]) -> PseudometricSpace:
    """The pointwise-largest pseudometric with ``d(x_i, y_i) <= delta_i`` for every constraint.

    Computed as the shortest-path metric of the constraint graph (``inf`` between
    components, 0 on the diagonal).
    """
    points = tuple(points)
    index = {p: i for i, p in enumerate(points)}
    n = len(points)
    rows: list[list[Dist]] = [[ZERO if i == j else INF for j in range(n)] for i in range(n)]
    for x, y, delta in constraints:
        if x not in index or y not in index:
            unknown = x if x not in index else y
            raise InputError(f"constraint mentions unknown point {unknown!r}")
        delta = as_dist(delta)
        i, j = index[x], index[y]
        if delta < rows[i][j]:
            rows[i][j] = rows[j][i] = delta
    for k in range(n):
        row_k = rows[k]
        for i in range(n):
            dik = rows[i][k]
            if dik is INF:
                continue
            row_i = rows[i]
            for j in range(n):
                candidate = dik + row_k[j]
                if candidate < row_i[j]:
                    row_i[j] = candidate
    return PseudometricSpace(points, rows, validate=False)


def metric_reflection(space: PseudometricSpace) -> tuple[MetricSpace, NonexpandingMap]:
    """Collapse zero-distance points; classes are labelled by their first member."""
    representative: dict[Point, Point] = {}
    reps: list[Point] = []
    for x in space.points:
        for r in reps:
            if space.d(x, r) == ZERO:
                representative[x] = r
                break
        else:
            representative[x] = x
            reps.append(x)
    quotient = MetricSpace(reps, [[space.d(x, y) for y in reps] for x in reps], validate=False)
    return quotient, NonexpandingMap(space, quotient, representative, check=False)


def hausdorff_distance(space: PseudometricSpace, a: Iterable[Point], b: Iterable[Point]) -> Dist:
    """``max(sup_a d(a, B), sup_b d(b, A))``; ``inf`` against the empty set, 0 between empty sets."""
    a, b = list(a), list(b)
    for x in itertools.chain(a, b):
        space.index(x)
    if not a and not b:
        return ZERO
    if not a or not b:
        return INF
    forward = max(min(space.d(x, y) for y in b) for x in a)
    backward = max(min(space.d(y, x) for x in a) for y in b)
    return max(forward, backward)


def _check_chain(chain: Sequence[PseudometricSpace], maps: Sequence[NonexpandingMap]) -> None:
    if not chain:
        raise InputError("a directed chain needs at least one space")
    if len(maps) != len(chain) - 1:
        raise InputError(f"chain of {len(chain)} spaces needs {len(chain) - 1} connecting maps, got {len(maps)}")
    for i, f in enumerate(maps):
        if f.dom.points != chain[i].points or f.cod.points != chain[i + 1].points:
            raise InputError(f"connecting map {i} does not go from stage {i} to stage {i + 1}")


def connecting_map(chain: Sequence[PseudometricSpace], maps: Sequence[NonexpandingMap], i: int, j: int) -> NonexpandingMap:
    """The composite ``D_i -> D_j`` for ``i <= j``."""
    result = NonexpandingMap.identity(chain[i])
    for k in range(i, j):
        result = result.then(maps[k])
    return result


def directed_colimit(
    chain: Sequence[PseudometricSpace],
    maps: Sequence[NonexpandingMap],
) -> tuple[PseudometricSpace, list[NonexpandingMap]]:
    """Colimit of a finite chain ``D_0 -> ... -> D_k``.

    The last stage realizes every infimum over later stages, so it carries the
    colimit and the cocone consists of the composite connecting maps. The true
    colimit of an infinite chain is the limit of these truncations.
    """
    _check_chain(chain, maps)
    last = len(chain) - 1
    cocone = [connecting_map(chain, maps, i, last) for i in range(len(chain))]
    return chain[last], cocone


def distance_trajectory(
    chain: Sequence[PseudometricSpace],
    maps: Sequence[NonexpandingMap],
    stage: int,
    y: Point,
    y2: Point,
) -> list[Dist]:
    """Distances of the images of ``y, y2`` at stages ``stage, stage + 1, ...``."""
    _check_chain(chain, maps)
    trajectory = [chain[stage].d(y, y2)]
    for k in range(stage, len(maps)):
        y, y2 = maps[k](y), maps[k](y2)
        trajectory.append(chain[k + 1].d(y, y2))
    return trajectory


def verify_colimit(
    chain: Sequence[PseudometricSpace],
    maps: Sequence[NonexpandingMap],
    colimit: PseudometricSpace,
    cocone: Sequence[NonexpandingMap],
) -> list[str]:
    """Violations of collective surjectivity and of the inf-over-later-stages distance formula."""
    _check_chain(chain, maps)
    problems = []
    covered = set()
    for c in cocone:
        covered.update(c.images)
    missing = [x for x in colimit.points if x not in covered]
    if missing:
        problems.append(f"cocone is not collectively surjective: {missing[0]!r} is not hit")
    for i, c in enumerate(cocone):
        for y, y2 in itertools.combinations(chain[i].points, 2):
            expected = min(distance_trajectory(chain, maps, i, y, y2))
            actual = colimit.d(c(y), c(y2))
            if actual != expected:
                problems.append(
                    f"stage {i}: d(c({y}), c({y2})) = {format_dist(actual)} "
                    f"but the infimum over later stages is {format_dist(expected)}"
                )
    return problems


@dataclass(frozen=True, eq=False)
class PrecongruenceDiagram:
    """The discrete underlying set of a space with its ``<= eps`` pair relations.

    ``levels`` maps every realized finite distance to the pairs within it; larger
    ``eps`` would repeat the last relation.
    """

    base: MetricSpace
    discrete: MetricSpace
    levels: dict = field(default_factory=dict)

    def level_space(self, eps: Dist) -> MetricSpace:
        return MetricSpace.discrete(self.pairs_within(eps))

    def pairs_within(self, eps: Dist) -> tuple:
        if eps in self.levels:
            return self.levels[eps]
        return tuple(
            (x, y) for x in self.base.points for y in self.base.points if self.base.d(x, y) <= eps
        )

    def projections(self, eps: Dist) -> tuple[NonexpandingMap, NonexpandingMap]:
        space = self.level_space(eps)
        left = NonexpandingMap(space, self.discrete, lambda pair: pair[0], check=False)
        right = NonexpandingMap(space, self.discrete, lambda pair: pair[1], check=False)
        return left, right

    def level_violations(self, f: Mapping | Callable, target: PseudometricSpace) -> list[tuple[Dist, Point, Point]]:
        """Pairs ``(eps, x, x')`` in a level whose images lie further apart than ``eps``."""
        apply = f.__getitem__ if isinstance(f, Mapping) else f
        return [
            (eps, x, y)
            for eps, pairs in self.levels.items()
            for x, y in pairs
            if target.d(apply(x), apply(y)) > eps
        ]


def precongruence(space: MetricSpace) -> PrecongruenceDiagram:
    """Build the precongruence diagram of ``space``, one level per realized finite distance."""
    levels = {
        eps: tuple((x, y) for x in space.points for y in space.points if space.d(x, y) <= eps)
        for eps in space.realized_distances()
    }
    return PrecongruenceDiagram(base=space, discrete=MetricSpace.discrete(space.points), levels=levels)


def find_isometry(a: PseudometricSpace, b: PseudometricSpace, limit: int = ISOMETRY_SEARCH_LIMIT) -> dict | None:
    """A distance-preserving bijection ``A -> B`` found by backtracking, or ``None``."""
    if len(a) != len(b):
        return None
    if len(a) > limit:
        raise BudgetExceeded(f"isometry search is limited to {limit} points")
    n = len(a)
    assigned: list[int] = []
    used = [False] * n

    def extend(i: int) -> bool:
        if i == n:
            return True
        for k in range(n):
            if used[k]:
                continue
            if all(b.d_index(assigned[j], k) == a.d_index(j, i) for j in range(i)):
                used[k] = True
                assigned.append(k)
                if extend(i + 1):
                    return True
                assigned.pop()
                used[k] = False
        return False

    if not extend(0):
        return None
    return {a.points[i]: b.points[k] for i, k in enumerate(assigned)}
