"""Concrete monads on finite metric spaces and their property checkers.

An instance works elementwise: ``elements(M)`` lists the points of ``TM`` up to
the instance's size cap, ``fmap`` applies ``Tf`` to one element,
``unit_element`` and ``join`` give the unit and multiplication, and
``distance`` is the metric of ``TM``. Elements are plain hashable values
(tuples, frozensets, terms), so ``join`` and ``fmap`` work beyond the cap and
the checkers never need to tabulate ``TTM`` or ``TTTM`` as metric spaces.

Instances are created by name through the registry::

    @register_monad("word")
    class WordMonad(MonadInstance): ...

    monad = get_monad("word", cap=3)
"""

from __future__ import annotations

import itertools
import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

from quantitative_algebra_workbench.config import DEFAULT_MONAD_CAP, ENUMERATION_BUDGET
from quantitative_algebra_workbench.errors import BudgetExceeded, EvaluationError, InputError
from quantitative_algebra_workbench.metric import (
    INF,
    ZERO,
    Dist,
    MetricSpace,
    NonexpandingMap,
    PseudometricSpace,
    as_dist,
    canonical_key,
    directed_colimit,
    format_dist,
    hausdorff_distance,
    hom_space,
    map_distance,
    precongruence,
    smallest_pseudometric,
    verify_colimit,
)
from quantitative_algebra_workbench.reports import CheckReport, check_report, label, witness
from quantitative_algebra_workbench.terms import (
    App,
    Term,
    Var,
    binary_partial_signature,
    enumerate_terms,
    kleisli_extension,
    raw_term_distance,
)

logger = logging.getLogger(__name__)

_REGISTRY: dict[str, type] = {}


def register_monad(name: str) -> Callable[[type], type]:
    """Class decorator adding an instance to the by-name registry."""

    def decorator(cls: type) -> type:
        cls.name = name
        _REGISTRY[name] = cls
        return cls

    return decorator


def monad_names() -> list[str]:
    return sorted(_REGISTRY)


def get_monad(name: str, **options: Any) -> "MonadInstance":
    """Instantiate a registered monad; ``name:param`` passes ``param`` as ``eps``.

    Raises:
        InputError: For an unknown name.
    """
    name, _, param = name.partition(":")
    if param:
        options.setdefault("eps", param)
    try:
        cls = _REGISTRY[name]
    except KeyError:
        raise InputError(f"unknown monad {name!r}; known: {', '.join(monad_names())}") from None
    return cls(**options)


@dataclass(frozen=True)
class PointSet:
    """The bare point set of a space too large to tabulate."""

    points: tuple

    def __contains__(self, x: object) -> bool:
        return x in self.points

    def __len__(self) -> int:
        return len(self.points)


def _space_key(space: Any) -> tuple:
    return (space.points, getattr(space, "rows", None))


class MonadInstance:
    """Base class; subclasses provide the elementwise operations."""

    name = "monad"
    is_monad = True
    interpretation: dict[str, Callable[..., Any]] = {}

    def __init__(self, cap: int = DEFAULT_MONAD_CAP):
        if cap < 0:
            raise InputError("size cap must be non-negative")
        self.cap = cap
        self._spaces: dict[tuple, MetricSpace] = {}

    def __repr__(self) -> str:
        return f"{type(self).__name__}(cap={self.cap})"

    def with_cap(self, cap: int) -> "MonadInstance":
        clone = type(self).__new__(type(self))
        clone.__dict__.update(self.__dict__)
        clone.cap = cap
        clone._spaces = {}
        return clone

    # elementwise interface

    def elements(self, space: Any) -> list:
        raise NotImplementedError

    def distance(self, space: PseudometricSpace, a: Any, b: Any) -> Dist:
        raise NotImplementedError

    def fmap(self, fn: Callable[[Any], Any], element: Any, dom: Any, cod: Any) -> Any:
        raise NotImplementedError

    def unit_element(self, x: Any, space: Any) -> Any:
        raise EvaluationError(f"{self.name} is a functor without a unit")

    def join(self, element: Any, space: Any) -> Any:
        raise EvaluationError(f"{self.name} is a functor without a multiplication")

    def support(self, element: Any) -> set:
        """Points of the underlying space an element is built from."""
        return set(element)

    def precongruence_witness(self, a: Any, b: Any, eps: Dist, space: PseudometricSpace) -> Any | None:
        """A constructive ``P`` in ``T(D^eps)`` projecting to ``a`` and ``b``, if the instance has one."""
        return None

    def lift_points(self, space: Any) -> Any:
        """``TM`` as needed for enumerating ``TTM``: its point set suffices here."""
        return PointSet(tuple(self.elements(space)))

    def evaluate(self, t: Term, space: Any) -> Any:
        """Read a term through the instance's interpretation of the operation symbols."""
        if isinstance(t, Var):
            return self.unit_element(t.point, space)
        try:
            operation = self.interpretation[t.symbol]
        except KeyError:
            raise EvaluationError(f"{self.name} does not interpret {t.symbol}", term=t) from None
        return operation(*(self.evaluate(c, space) for c in t.children))

    # whole-space interface

    def on_space(self, space: PseudometricSpace) -> MetricSpace:
        key = _space_key(space)
        if key not in self._spaces:
            points = self.elements(space)
            self._spaces[key] = MetricSpace.from_function(
                points, lambda a, b: self.distance(space, a, b), validate=False
            )
        return self._spaces[key]

    def on_map(self, f: NonexpandingMap) -> NonexpandingMap:
        dom, cod = self.on_space(f.dom), self.on_space(f.cod)
        return NonexpandingMap(dom, cod, lambda a: self.fmap(f, a, f.dom, f.cod), check=False)

    def unit(self, space: PseudometricSpace) -> NonexpandingMap:
        return NonexpandingMap(space, self.on_space(space), lambda x: self.unit_element(x, space), check=False)

    def mult(self, space: PseudometricSpace) -> NonexpandingMap:
        """``TTM -> TM``; the codomain uses the squared cap so that every join fits."""
        inner = self.on_space(space)
        outer = self.on_space(inner)
        target = self.with_cap(self.cap * self.cap).on_space(space)
        return NonexpandingMap(outer, target, lambda a: self.join(a, space), check=False)


def _letterwise(space: PseudometricSpace, u: Sequence, v: Sequence) -> Dist:
    if len(u) != len(v):
        return INF
    return max((space.d(a, b) for a, b in zip(u, v)), default=ZERO)


@register_monad("word")
class WordMonad(MonadInstance):
    """Words with the coproduct-of-powers metric: letterwise maximum, ``inf`` across lengths."""

    interpretation = {"mul": lambda a, b: a + b, "unit": lambda: ()}

    def elements(self, space: Any) -> list:
        return [w for n in range(self.cap + 1) for w in itertools.product(space.points, repeat=n)]

    def distance(self, space: PseudometricSpace, a: tuple, b: tuple) -> Dist:
        return _letterwise(space, a, b)

    def fmap(self, fn, element, dom, cod):
        return tuple(fn(x) for x in element)

    def unit_element(self, x, space):
        return (x,)

    def join(self, element, space):
        return tuple(itertools.chain.from_iterable(element))

    def precongruence_witness(self, a, b, eps, space):
        if len(a) != len(b):
            return None
        return tuple(zip(a, b))


def _multiset(items: Iterable) -> tuple:
    return tuple(sorted(items, key=canonical_key))


@register_monad("commutative_word")
class CommutativeWordMonad(WordMonad):
    """Finite multisets, as sorted words; ``d`` is the best letterwise maximum over permutations."""

    interpretation = {"mul": lambda a, b: _multiset(a + b), "unit": lambda: ()}

    def elements(self, space: Any) -> list:
        ordered = sorted(space.points, key=canonical_key)
        return [w for n in range(self.cap + 1) for w in itertools.combinations_with_replacement(ordered, n)]

    def _best_permutation(self, space, a, b) -> tuple[Dist, tuple]:
        best: Dist = INF
        best_order: tuple = tuple(b)
        for order in itertools.permutations(b):
            d = _letterwise(space, a, order)
            if d < best:
                best, best_order = d, order
        return best, best_order

    def distance(self, space, a, b):
        if len(a) != len(b):
            return INF
        return self._best_permutation(space, a, b)[0]

    def fmap(self, fn, element, dom, cod):
        return _multiset(fn(x) for x in element)

    def unit_element(self, x, space):
        return (x,)

    def join(self, element, space):
        return _multiset(itertools.chain.from_iterable(element))

    def precongruence_witness(self, a, b, eps, space):
        if len(a) != len(b):
            return None
        d, order = self._best_permutation(space, a, b)
        if d > eps:
            return None
        return _multiset(zip(a, order))


def _word_term(word: Sequence[Any]) -> Term:
    """Balanced product of the letters, so its height is the least possible."""
    if not word:
        return App("unit")
    if len(word) == 1:
        return Var(word[0])
    middle = (len(word) + 1) // 2
    return App("mul", (_word_term(word[:middle]), _word_term(word[middle:])))


@register_monad("almost_commutative")
class AlmostCommutativeMonad(WordMonad):
    """Words whose metric is computed by the free almost commutative monoid (``eps > 0``).

    The closed form ``d(xy, yx) = min(d(x, y), eps)`` is a tested consequence.
    Distances are the free-algebra upper bounds at the least depth holding
    words of the compared length.
    """

    def __init__(self, cap: int = DEFAULT_MONAD_CAP, eps: Any = Fraction(1, 2)):
        super().__init__(cap)
        self.eps = as_dist(eps)
        if self.eps == ZERO or self.eps is INF:
            raise InputError("almost commutativity needs 0 < eps < inf; use commutative_word or word instead")
        self._free: dict[tuple, Any] = {}

    def __repr__(self) -> str:
        return f"AlmostCommutativeMonad(cap={self.cap}, eps={format_dist(self.eps)})"

    @staticmethod
    def depth_for(length: int) -> int:
        return max(1, (max(length, 1) - 1).bit_length())

    def free_algebra_on(self, space: PseudometricSpace, depth: int):
        from quantitative_algebra_workbench.equations import almost_commutative_presentation
        from quantitative_algebra_workbench.free_algebra import free_algebra

        key = (_space_key(space), depth)
        if key not in self._free:
            self._free[key] = free_algebra(almost_commutative_presentation(self.eps), space, depth)
        return self._free[key]

    def distance(self, space, a, b):
        if len(a) != len(b):
            return INF
        if a == b:
            return ZERO
        return self.free_algebra_on(space, self.depth_for(len(a))).distance(_word_term(a), _word_term(b))

    def precongruence_witness(self, a, b, eps, space):
        return None


@register_monad("finite_hausdorff")
class HausdorffMonad(MonadInstance):
    """Finite subsets (the empty set included) with the Hausdorff metric."""

    interpretation = {"join": lambda a, b: a | b, "zero": lambda: frozenset()}

    def elements(self, space: Any) -> list:
        return [
            frozenset(c)
            for n in range(min(self.cap, len(space.points)) + 1)
            for c in itertools.combinations(space.points, n)
        ]

    def distance(self, space, a, b):
        return hausdorff_distance(space, a, b)

    def fmap(self, fn, element, dom, cod):
        return frozenset(fn(x) for x in element)

    def unit_element(self, x, space):
        return frozenset((x,))

    def join(self, element, space):
        return frozenset().union(*element)

    def precongruence_witness(self, a, b, eps, space):
        """``{(x, nearest b)} | {(nearest a, y)}``: every pair lies within the Hausdorff distance."""
        if not a and not b:
            return frozenset()
        if not a or not b:
            return None
        ordered_a = sorted(a, key=canonical_key)
        ordered_b = sorted(b, key=canonical_key)
        forward = {(x, min(ordered_b, key=lambda y: space.d(x, y))) for x in ordered_a}
        backward = {(min(ordered_a, key=lambda x: space.d(x, y)), y) for y in ordered_b}
        return frozenset(forward | backward)


def quasi_discrete_classes(space: PseudometricSpace) -> tuple[list[frozenset], PseudometricSpace]:
    """Collapse points at distance ``<= 1`` until every non-zero distance exceeds 1.

    Returns the classes (ordered by first member) and the collapsed pseudometric.
    """
    current = smallest_pseudometric(
        space.points, [(x, y, space.d(x, y)) for x, y in space.pairs() if space.d(x, y) is not INF]
    )
    while True:
        close = [(x, y) for x, y in current.pairs() if ZERO < current.d(x, y) <= 1]
        if not close:
            break
        constraints = [(x, y, current.d(x, y)) for x, y in current.pairs() if current.d(x, y) is not INF]
        current = smallest_pseudometric(space.points, constraints + [(x, y, 0) for x, y in close])
    classes: list[frozenset] = []
    for x in space.points:
        if not any(x in c for c in classes):
            classes.append(frozenset(y for y in space.points if current.d(x, y) == ZERO))
    return classes, current


@register_monad("quasi_discrete_reflection")
class QuasiDiscreteMonad(MonadInstance):
    """Reflection into quasi-discrete spaces; elements are classes of identified points.

    It is not finitary: along the chain ``{-1} u {2^-k : k <= n}`` its images stay two
    points whose distance keeps shrinking towards 1, while the colimit is one point.
    """

    def __init__(self, cap: int = DEFAULT_MONAD_CAP):
        super().__init__(cap)
        self._classes: dict[tuple, tuple] = {}

    def _collapse(self, space):
        key = _space_key(space)
        if key not in self._classes:
            self._classes[key] = quasi_discrete_classes(space)
        return self._classes[key]

    def elements(self, space):
        return list(self._collapse(space)[0])

    def class_of(self, x, space) -> frozenset:
        for c in self._collapse(space)[0]:
            if x in c:
                return c
        raise InputError(f"{x!r} is not a point of the space")

    def distance(self, space, a, b):
        collapsed = self._collapse(space)[1]
        return collapsed.d(min(a, key=canonical_key), min(b, key=canonical_key))

    def fmap(self, fn, element, dom, cod):
        return self.class_of(fn(min(element, key=canonical_key)), cod)

    def unit_element(self, x, space):
        return self.class_of(x, space)

    def join(self, element, space):
        inner = min(element, key=canonical_key)
        return self.class_of(min(inner, key=canonical_key), space)

    def lift_points(self, space):
        return self.on_space(space)


@register_monad("tensor_word")
class TensorWordFunctor(MonadInstance):
    """Words with the sum metric (coproduct of tensor powers); a functor that is not enriched."""

    is_monad = False

    def elements(self, space):
        return [w for n in range(self.cap + 1) for w in itertools.product(space.points, repeat=n)]

    def distance(self, space, a, b):
        if len(a) != len(b):
            return INF
        total: Dist = ZERO
        for x, y in zip(a, b):
            total = total + space.d(x, y)
        return total

    def fmap(self, fn, element, dom, cod):
        return tuple(fn(x) for x in element)


@register_monad("binary_partial_terms")
class BinaryPartialTermFunctor(MonadInstance):
    """Terms of the binary partial operation up to height ``cap``; it does not preserve surjections."""

    is_monad = False

    def __init__(self, cap: int = 2):
        super().__init__(cap)
        self.signature = binary_partial_signature()

    def elements(self, space):
        return list(enumerate_terms(self.signature, space, self.cap).terms)

    def distance(self, space, a, b):
        return raw_term_distance(a, b, space)

    def fmap(self, fn, element, dom, cod):
        return kleisli_extension(lambda x: Var(fn(x)))(element)

    def support(self, element):
        from quantitative_algebra_workbench.terms import variables

        return variables(element)

    def evaluate(self, t, space):
        return t


def random_space(rng: random.Random, max_points: int = 4, distances: Sequence[Any] = (Fraction(1, 4), Fraction(1, 2), 1, 2, INF)) -> MetricSpace:
    """A seeded random metric space: random pair distances closed under shortest paths."""
    values = [as_dist(v) for v in distances if v is INF or as_dist(v) > 0]
    n = rng.randint(1, max_points)
    points = [f"p{i}" for i in range(n)]
    constraints = [(x, y, rng.choice(values)) for x, y in itertools.combinations(points, 2)]
    closure = smallest_pseudometric(points, [c for c in constraints if c[2] is not INF])
    return MetricSpace(points, closure.rows, validate=False)


def _sample(items: list, limit: int, rng: random.Random) -> list:
    if len(items) <= limit:
        return items
    return rng.sample(items, limit)


def _third_level(monad: MonadInstance, ttm: Any, limit: int, rng: random.Random) -> tuple[list, bool]:
    """Elements of ``TTTM``: all of them when few enough, otherwise a seeded sample."""
    if isinstance(monad, QuasiDiscreteMonad):
        return monad.elements(ttm), False
    points = list(ttm.points)
    outer = monad.cap
    total = sum(len(points) ** n for n in range(outer + 1))
    if total <= limit:
        return monad.elements(ttm), False
    drawn = []
    for _ in range(limit):
        size = rng.randint(0, outer)
        picked = [rng.choice(points) for _ in range(size)]
        drawn.append(_rebuild(monad, picked))
    return drawn, True


def _rebuild(monad: MonadInstance, picked: list) -> Any:
    if isinstance(monad, HausdorffMonad):
        return frozenset(picked)
    if isinstance(monad, CommutativeWordMonad):
        return _multiset(picked)
    return tuple(picked)


def _neighbours(spaces: Sequence[PseudometricSpace], i: int, count: int) -> list[PseudometricSpace]:
    return [spaces[(i + k) % len(spaces)] for k in range(count)]


def check_functor_laws(monad: MonadInstance, spaces: Sequence[PseudometricSpace], map_limit: int = 8) -> CheckReport:
    """``T id = id`` and ``T(g f) = Tg Tf`` on every element.

    Composites are sampled along consecutive spaces of the list (cyclically),
    with at most ``map_limit`` maps per hom-space.
    """
    witnesses = []
    for space in spaces:
        for a in monad.elements(space):
            if monad.fmap(lambda x: x, a, space, space) != a:
                witnesses.append(witness("identity", f"T id moves {label(a)}"))
    for i in range(len(spaces)):
        s1, s2, s3 = _neighbours(spaces, i, 3)
        fs = hom_space(s1, s2).points[:map_limit]
        gs = hom_space(s2, s3).points[:map_limit]
        for f in fs:
            for g in gs:
                for a in monad.elements(s1):
                    lhs = monad.fmap(lambda x: g(f(x)), a, s1, s3)
                    rhs = monad.fmap(g, monad.fmap(f, a, s1, s2), s2, s3)
                    if lhs != rhs:
                        witnesses.append(witness("composition", f"T(g f) and Tg Tf differ on {label(a)}",
                                                 f=f, g=g, element=a))
    return check_report("functor-laws", witnesses, monad=monad.name, spaces=len(spaces))


def check_monad_laws(
    monad: MonadInstance,
    spaces: Sequence[PseudometricSpace],
    law_cap: int = 2,
    limit: int = 2000,
    seed: int = 0,
) -> CheckReport:
    """Unit and associativity laws, naturality of unit and multiplication, nonexpansiveness of both.

    Laws are checked on elements of ``TM``, ``TTM`` and ``TTTM`` built with size
    cap ``min(cap, law_cap)``; ``TTTM`` is sampled (seeded) when it has more than
    ``limit`` elements, and the report says so.
    """
    if not monad.is_monad:
        raise InputError(f"{monad.name} is only a functor")
    rng = random.Random(seed)
    small = monad.with_cap(min(monad.cap, law_cap))
    witnesses = []
    sampled = False
    for i, space in enumerate(spaces):
        tm = small.on_space(space)
        for a in tm.points:
            if small.join(small.unit_element(a, tm), space) != a:
                witnesses.append(witness("left-unit", f"mu(eta_T(a)) != a for a = {label(a)}", element=a))
            if small.join(small.fmap(lambda x: small.unit_element(x, space), a, space, tm), space) != a:
                witnesses.append(witness("right-unit", f"mu(T eta(a)) != a for a = {label(a)}", element=a))
        for x, y in itertools.combinations(space.points, 2):
            if small.distance(space, small.unit_element(x, space), small.unit_element(y, space)) > space.d(x, y):
                witnesses.append(witness("unit-expanding", f"eta expands d({label(x)}, {label(y)})"))
        ttm = small.lift_points(tm)
        ttm_elements = list(ttm.points)
        tttm_elements, was_sampled = _third_level(small, ttm, limit, rng)
        sampled |= was_sampled
        for big in tttm_elements:
            lhs = small.join(small.join(big, tm), space)
            rhs = small.join(small.fmap(lambda inner: small.join(inner, space), big, ttm, tm), space)
            if lhs != rhs:
                witnesses.append(witness(
                    "associativity",
                    f"mu(mu_T(A)) = {label(lhs)} but mu(T mu(A)) = {label(rhs)}",
                    element=big,
                ))
        pairs = _sample(list(itertools.combinations(ttm_elements, 2)), limit, rng)
        sampled |= len(pairs) < len(ttm_elements) * (len(ttm_elements) - 1) // 2
        for big, big2 in pairs:
            if small.distance(space, small.join(big, space), small.join(big2, space)) > small.distance(tm, big, big2):
                witnesses.append(witness("mult-expanding", f"mu expands d({label(big)}, {label(big2)})"))
        for target in _neighbours(spaces, i, 2):
            for f in hom_space(space, target).points[:8]:
                tf_tm = small.on_space(target)
                for x in space.points:
                    if small.fmap(f, small.unit_element(x, space), space, target) != small.unit_element(f(x), target):
                        witnesses.append(witness("unit-naturality", f"T f(eta x) != eta(f x) for x = {label(x)}"))
                for big in _sample(ttm_elements, 64, rng):
                    lhs = small.fmap(f, small.join(big, space), space, target)
                    ttf = small.fmap(lambda inner: small.fmap(f, inner, space, target), big, tm, tf_tm)
                    rhs = small.join(ttf, target)
                    if lhs != rhs:
                        witnesses.append(witness("mult-naturality", f"T f(mu A) != mu(TT f A) for A = {label(big)}"))
    return check_report("monad-laws", witnesses, monad=monad.name, law_cap=small.cap, sampled=sampled, spaces=len(spaces))


def lifted_distances(monad: MonadInstance, f: NonexpandingMap, g: NonexpandingMap) -> list[tuple[Any, Dist]]:
    """``d(Tf a, Tg a)`` for every element ``a`` of ``T(dom)``."""
    return [
        (a, monad.distance(f.cod, monad.fmap(f, a, f.dom, f.cod), monad.fmap(g, a, g.dom, g.cod)))
        for a in monad.elements(f.dom)
    ]


def check_enriched(monad: MonadInstance, a: PseudometricSpace, b: PseudometricSpace) -> CheckReport:
    """``d(Tf, Tg) <= d(f, g)`` for every pair of nonexpanding maps ``A -> B``."""
    maps = hom_space(a, b).points
    witnesses = []
    for f, g in itertools.combinations_with_replacement(maps, 2):
        bound = map_distance(f, g)
        lifted = lifted_distances(monad, f, g)
        worst = max((d for _, d in lifted), default=ZERO)
        if worst > bound:
            witnesses.append(witness(
                "not-enriched",
                f"d(Tf, Tg) = {format_dist(worst)} exceeds d(f, g) = {format_dist(bound)}",
                f=f, g=g, map_distance=bound, lifted_distance=worst,
                by_element={label(e): d for e, d in lifted if d > bound},
            ))
    return check_report("enriched", witnesses, monad=monad.name, maps=len(maps))


def check_preserves_surjections(monad: MonadInstance, e: NonexpandingMap) -> CheckReport:
    """Is ``Te`` onto ``T(cod)`` (both within the size cap)?

    Raises:
        InputError: If ``e`` itself is not surjective.
    """
    if not e.is_surjective():
        raise InputError("map is not surjective")
    hit = {monad.fmap(e, a, e.dom, e.cod) for a in monad.elements(e.dom)}
    missed = [b for b in monad.elements(e.cod) if b not in hit]
    witnesses = [witness("not-hit", f"{label(b)} is not in the image of T e", element=b) for b in missed]
    return check_report("preserves-surjections", witnesses, monad=monad.name)


def dyadic_chain(n: int) -> tuple[list[MetricSpace], list[NonexpandingMap]]:
    """The inclusion chain ``A_0 <= ... <= A_n`` with ``A_k = {-1} u {2^-i : i <= k}`` on the line."""
    chain = []
    for k in range(n + 1):
        values = [Fraction(-1)] + [Fraction(1, 2 ** i) for i in range(k + 1)]
        labels = [format_dist(abs(v)) if v >= 0 else "-1" for v in values]
        chain.append(MetricSpace.from_function(
            labels, lambda p, q, lookup=dict(zip(labels, values)): abs(lookup[p] - lookup[q]), validate=False,
        ))
    maps = [NonexpandingMap(chain[k], chain[k + 1], lambda x: x) for k in range(n)]
    return chain, maps


def _first_shrink(f: NonexpandingMap) -> tuple:
    for a, b in itertools.combinations(f.dom.points, 2):
        before, after = f.dom.d(a, b), f.cod.d(f(a), f(b))
        if after < before:
            return a, b, before, after
    raise InputError("map does not shrink any distance")


def check_directed_colimit_preservation(
    monad: MonadInstance,
    chain: Sequence[PseudometricSpace],
    maps: Sequence[NonexpandingMap],
) -> CheckReport:
    """Compare a finite chain with its image under ``T``.

    The finite colimit itself is always preserved (it is the last stage). What
    a truncation can show is the tail behaviour: a step where the base map is an
    isometric embedding but its image under ``T`` shrinks some distance means
    the images keep collapsing and ``T`` misses the colimit of the infinite chain.
    The per-stage distance trajectories are reported for inspection.
    """
    colimit, cocone = directed_colimit(chain, maps)
    witnesses = [witness("base-colimit", p) for p in verify_colimit(chain, maps, colimit, cocone)]
    t_chain = [monad.on_space(space) for space in chain]
    t_maps = [monad.on_map(f) for f in maps]
    t_colimit, t_cocone = directed_colimit(t_chain, t_maps)
    witnesses += [witness("image-colimit", p) for p in verify_colimit(t_chain, t_maps, t_colimit, t_cocone)]
    for k, (f, tf) in enumerate(zip(maps, t_maps)):
        if f.is_isometric() and not tf.is_isometric():
            a, b, before, after = _first_shrink(tf)
            witnesses.append(witness(
                "diverges",
                f"stage {k}: base map is isometric but T shrinks d({label(a)}, {label(b)}) "
                f"from {format_dist(before)} to {format_dist(after)}",
                stage=k, left=a, right=b, before=before, after=after,
            ))
    trajectories = {}
    first = t_chain[0]
    for a, b in itertools.combinations(first.points, 2):
        path = [first.d(a, b)]
        x, y = a, b
        for tf in t_maps:
            x, y = tf(x), tf(y)
            path.append(tf.cod.d(x, y))
        trajectories[f"{label(a)} ~ {label(b)}"] = [format_dist(d) for d in path]
    return check_report(
        "directed-colimit",
        witnesses,
        monad=monad.name,
        stages=len(chain),
        colimit_size=len(t_colimit),
        trajectories=trajectories,
    )


def check_precongruence_preservation(monad: MonadInstance, space: MetricSpace, budget: int = ENUMERATION_BUDGET) -> CheckReport:
    """Witness criterion for preserving the colimit of the precongruence of ``space``.

    For every pair ``a, b`` of ``T|M|`` whose images under ``T`` of the identity
    ``|M| -> M`` lie at finite distance ``eps``, look for ``P`` in ``T(D^eps)``
    with ``T pi_l (P) = a`` and ``T pi_r (P) = b``. A pass is sufficient for the
    colimit to be preserved; a failure is inconclusive about the property itself.
    """
    diagram = precongruence(space)
    discrete = diagram.discrete
    identity = NonexpandingMap(discrete, space, lambda x: x, check=False)
    elements = monad.elements(discrete)
    witnesses = []
    checked = constructive = searched = 0
    for a, b in itertools.combinations_with_replacement(elements, 2):
        eps = monad.distance(space, monad.fmap(identity, a, discrete, space), monad.fmap(identity, b, discrete, space))
        if eps is INF:
            continue
        checked += 1
        pairs = diagram.pairs_within(eps)
        allowed = set(pairs)
        level = MetricSpace.discrete(pairs)

        def projects(p: Any) -> bool:
            return (
                monad.support(p) <= allowed
                and monad.fmap(lambda pair: pair[0], p, level, discrete) == a
                and monad.fmap(lambda pair: pair[1], p, level, discrete) == b
            )

        candidate = monad.precongruence_witness(a, b, eps, space)
        if candidate is not None and projects(candidate):
            constructive += 1
            continue
        searched += 1
        found = None
        for count, p in enumerate(monad.elements(level)):
            if count > budget:
                raise BudgetExceeded(f"witness search over T(D^{format_dist(eps)}) exceeds {budget} elements")
            if projects(p):
                found = p
                break
        if found is None:
            witnesses.append(witness(
                "no-witness",
                f"no P in T(D^{format_dist(eps)}) projects to {label(a)} and {label(b)}",
                left=a, right=b, eps=eps,
            ))
    return check_report(
        "precongruence",
        witnesses,
        monad=monad.name,
        pairs=checked,
        constructive=constructive,
        searched=searched,
        criterion="sufficient",
    )
