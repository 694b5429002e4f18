"""Quantitative equations, basic equations and their satisfaction.

Three equation shapes are supported:

* ``QuantEquation``: ``l =[e] r`` over discrete variables, satisfied when every
  interpretation of the variables puts ``l`` and ``r`` within ``e``.
* ``BasicEquation``: ``M |- l =[e] r`` over a metric context ``M``, where only
  nonexpanding interpretations count.
* ``HypothesisListEquation``: ``x ~[d] y, ... |- l =[e] r``; it is equivalent to the
  basic equation obtained by ``reflect_hypotheses``.

Every decider returns a ``SatisfactionResult``. Interpretations are tried in
lexicographic order of the carrier, so the reported witness is the first one.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Iterator, Sequence, Union

from quantitative_algebra_workbench.algebras import (
    QuantAlgebra,
    homomorphic_images,
    product_algebra,
    subalgebra_generated,
)
from quantitative_algebra_workbench.config import ENUMERATION_BUDGET, IMAGE_SIZE_CAP
from quantitative_algebra_workbench.errors import BudgetExceeded, EvaluationError, InputError
from quantitative_algebra_workbench.metric import (
    INF,
    ZERO,
    Dist,
    MetricSpace,
    PseudometricSpace,
    as_dist,
    format_dist,
    metric_reflection,
    smallest_pseudometric,
)
from quantitative_algebra_workbench.reports import (
    CheckReport,
    MembershipResult,
    SatisfactionResult,
    check_report,
    jsonable,
    label,
    witness,
)
from quantitative_algebra_workbench.terms import (
    App,
    Signature,
    Term,
    Var,
    format_term,
    homomorphic_extension,
    kleisli_extension,
    monoid_signature,
    semilattice_signature,
    validate_term,
    variables,
)

logger = logging.getLogger(__name__)


def _occurring(*terms: Term) -> tuple:
    seen: list = []
    for t in terms:
        for p in _leaf_order(t):
            if p not in seen:
                seen.append(p)
    return tuple(seen)


def _leaf_order(t: Term) -> Iterator[Any]:
    if isinstance(t, Var):
        yield t.point
    else:
        for child in t.children:
            yield from _leaf_order(child)


@dataclass(frozen=True)
class QuantEquation:
    """``left =[eps] right`` over the discrete variable set ``variables``."""

    left: Term
    right: Term
    eps: Dist = ZERO
    variables: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "eps", as_dist(self.eps))
        if not self.variables:
            object.__setattr__(self, "variables", _occurring(self.left, self.right))
        missing = (variables(self.left) | variables(self.right)) - set(self.variables)
        if missing:
            raise InputError(f"variables {sorted(map(str, missing))} are not declared")

    @property
    def var_count(self) -> int:
        return len(self.variables)

    @property
    def context(self) -> MetricSpace:
        return MetricSpace.discrete(self.variables)

    @property
    def unconditional(self) -> bool:
        return True

    def __str__(self) -> str:
        return f"{format_term(self.left)} =[{format_dist(self.eps)}] {format_term(self.right)}"


@dataclass(frozen=True)
class BasicEquation:
    """``context |- left =[eps] right``; terms range over the points of ``context``."""

    context: PseudometricSpace
    left: Term
    right: Term
    eps: Dist = ZERO
    context_name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "eps", as_dist(self.eps))
        for p in variables(self.left) | variables(self.right):
            if p not in self.context:
                raise InputError(f"variable {p!r} is not a point of the context")

    @property
    def variables(self) -> tuple:
        return self.context.points

    @property
    def unconditional(self) -> bool:
        return self.context.is_discrete()

    def __str__(self) -> str:
        name = self.context_name or "{" + ", ".join(label(p) for p in self.context.points) + "}"
        return f"{name} |- {format_term(self.left)} =[{format_dist(self.eps)}] {format_term(self.right)}"


@dataclass(frozen=True)
class HypothesisListEquation:
    """``x1 ~[d1] y1, ... |- left =[eps] right``."""

    hypotheses: tuple
    left: Term
    right: Term
    eps: Dist = ZERO
    variables: tuple = ()

    def __post_init__(self) -> None:
        hypotheses = tuple((x, y, as_dist(delta)) for x, y, delta in self.hypotheses)
        object.__setattr__(self, "hypotheses", hypotheses)
        object.__setattr__(self, "eps", as_dist(self.eps))
        if not self.variables:
            seen = [p for x, y, _ in hypotheses for p in (x, y)]
            ordered = tuple(dict.fromkeys(seen + list(_occurring(self.left, self.right))))
            object.__setattr__(self, "variables", ordered)
        declared = set(self.variables)
        for x, y, _ in hypotheses:
            if x not in declared or y not in declared:
                raise InputError(f"hypothesis {x} ~ {y} mentions an undeclared variable")
        if (variables(self.left) | variables(self.right)) - declared:
            raise InputError("conclusion mentions an undeclared variable")

    @property
    def unconditional(self) -> bool:
        return all(delta is INF or x == y for x, y, delta in self.hypotheses)

    def __str__(self) -> str:
        hyps = ", ".join(f"{x} ~[{format_dist(d)}] {y}" for x, y, d in self.hypotheses)
        return f"{hyps} |- {format_term(self.left)} =[{format_dist(self.eps)}] {format_term(self.right)}"


Equation = Union[QuantEquation, BasicEquation, HypothesisListEquation]


@dataclass
class Presentation:
    """A signature together with a finite list of equations."""

    signature: Signature
    equations: list = field(default_factory=list)
    name: str = ""
    metadata: dict = field(default_factory=dict)

    def validate(self) -> None:
        """Check every equation's terms against the signature.

        Raises:
            InputError: Naming the first ill-formed equation.
        """
        for e in self.equations:
            context = equation_context(e)
            for t in (e.left, e.right):
                try:
                    validate_term(t, self.signature, context)
                except InputError as exc:
                    raise InputError(f"in equation {e}: {exc}") from exc

    def unconditional_equations(self) -> list:
        return [e for e in self.equations if e.unconditional]

    def __str__(self) -> str:
        return self.name or "presentation"


def equation_context(e: Equation) -> PseudometricSpace:
    """The space interpretations range over (``inf`` hypotheses give no constraint)."""
    if isinstance(e, BasicEquation):
        return e.context
    if isinstance(e, HypothesisListEquation):
        return smallest_pseudometric(e.variables, e.hypotheses)
    return e.context


def interpretations(
    context: PseudometricSpace,
    carrier: PseudometricSpace,
    nonexpanding: bool = True,
    budget: int = ENUMERATION_BUDGET,
) -> Iterator[dict]:
    """Assignments ``context -> carrier`` in lexicographic order.

    With ``nonexpanding`` only maps with ``d(f x, f y) <= d(x, y)`` are produced;
    partial assignments are pruned as soon as a pair violates the bound.
    """
    points = context.points
    n = len(points)
    if not nonexpanding and len(carrier) ** n > budget:
        raise BudgetExceeded(f"{len(carrier)}^{n} interpretations exceed the budget of {budget}")
    bounds = [
        [context.d_index(j, i) if nonexpanding else INF for j in range(i)]
        for i in range(n)
    ]
    chosen: list = []
    produced = 0

    def extend(i: int) -> Iterator[dict]:
        nonlocal produced
        if i == n:
            produced += 1
            if produced > budget:
                raise BudgetExceeded(f"more than {budget} interpretations")
            yield dict(zip(points, chosen))
            return
        for candidate in carrier.points:
            if all(
                bounds[i][j] is INF or carrier.d(chosen[j], candidate) <= bounds[i][j]
                for j in range(i)
            ):
                chosen.append(candidate)
                yield from extend(i + 1)
                chosen.pop()

    yield from extend(0)


def _decide(
    algebra: QuantAlgebra,
    e: Equation,
    assignments: Iterator[dict],
    skip_undefined: bool,
) -> SatisfactionResult:
    checked = skipped = 0
    for assignment in assignments:
        evaluate = homomorphic_extension(assignment, algebra)
        try:
            left, right = evaluate(e.left), evaluate(e.right)
        except EvaluationError:
            if not skip_undefined:
                raise
            skipped += 1
            continue
        checked += 1
        distance = algebra.carrier.d(left, right)
        if distance > e.eps:
            return SatisfactionResult(
                equation=str(e),
                holds=False,
                assignment={label(k): jsonable(v) for k, v in assignment.items()},
                left_value=jsonable(left),
                right_value=jsonable(right),
                distance=format_dist(distance),
                checked=checked,
                skipped=skipped,
            )
    return SatisfactionResult(equation=str(e), holds=True, checked=checked, skipped=skipped)


def satisfies(algebra: QuantAlgebra, e: QuantEquation, skip_undefined: bool = False) -> SatisfactionResult:
    """Decide ``A |= l =[eps] r`` over all functions from the variables to the carrier."""
    if not isinstance(e, QuantEquation):
        return satisfies_equation(algebra, e, skip_undefined)
    return _decide(algebra, e, interpretations(e.context, algebra.carrier, nonexpanding=False), skip_undefined)


def satisfies_basic(algebra: QuantAlgebra, e: BasicEquation, skip_undefined: bool = False) -> SatisfactionResult:
    """Decide ``A |= M |- l =[eps] r`` over the nonexpanding interpretations ``M -> A``."""
    return _decide(algebra, e, interpretations(e.context, algebra.carrier), skip_undefined)


def satisfies_hypotheses(
    algebra: QuantAlgebra,
    e: HypothesisListEquation,
    skip_undefined: bool = False,
) -> SatisfactionResult:
    """Decide a hypothesis list directly: functions obeying every ``d(f x, f y) <= delta``."""
    constraints: dict[tuple, Dist] = {}
    for x, y, delta in e.hypotheses:
        key = (x, y)
        constraints[key] = min(constraints.get(key, INF), delta)

    def obeys(assignment: dict) -> bool:
        return all(algebra.carrier.d(assignment[x], assignment[y]) <= delta for (x, y), delta in constraints.items())

    everything = interpretations(MetricSpace.discrete(e.variables), algebra.carrier, nonexpanding=False)
    return _decide(algebra, e, (a for a in everything if obeys(a)), skip_undefined)


def satisfies_equation(algebra: QuantAlgebra, e: Equation, skip_undefined: bool = False) -> SatisfactionResult:
    """Dispatch on the equation shape."""
    if isinstance(e, QuantEquation):
        return satisfies(algebra, e, skip_undefined)
    if isinstance(e, BasicEquation):
        return satisfies_basic(algebra, e, skip_undefined)
    if isinstance(e, HypothesisListEquation):
        return satisfies_hypotheses(algebra, e, skip_undefined)
    raise InputError(f"not an equation: {e!r}")


def reflect_hypotheses(e: HypothesisListEquation) -> BasicEquation:
    """Turn a hypothesis list into a basic equation over a metric context.

    The context is the metric reflection of the largest pseudometric meeting
    every hypothesis bound; variables at distance 0 are identified in both terms.
    """
    closure = smallest_pseudometric(e.variables, e.hypotheses)
    context, quotient = metric_reflection(closure)
    rename = kleisli_extension(lambda x: Var(quotient(x)))
    logger.debug(f"reflected {len(e.variables)} variables onto a {len(context)}-point context")
    return BasicEquation(context, rename(e.left), rename(e.right), e.eps)


def variety_membership(algebra: QuantAlgebra, presentation: Presentation, skip_undefined: bool = False) -> MembershipResult:
    """Conjunction of the satisfaction checks, stopping at the first failing equation."""
    results = []
    for e in presentation.equations:
        result = satisfies_equation(algebra, e, skip_undefined)
        results.append(result)
        if not result.holds:
            return MembershipResult(presentation=str(presentation), holds=False, failing_equation=str(e), results=results)
    return MembershipResult(presentation=str(presentation), holds=True, results=results)


def _first_failure(algebra: QuantAlgebra, equations: Sequence[Equation]) -> SatisfactionResult | None:
    for e in equations:
        result = satisfies_equation(algebra, e)
        if not result.holds:
            return result
    return None


def birkhoff_closure_check(
    presentation: Presentation,
    sample: Sequence[QuantAlgebra],
    size_cap: int = IMAGE_SIZE_CAP,
) -> CheckReport:
    """Check that members of the variety stay members under products, subalgebras and images.

    Images are checked against the unconditional equations only; basic equations
    need not survive a surjective homomorphism.
    """
    if not presentation.signature.finitary:
        raise InputError("closure is checked for finitary signatures only")
    members = [a for a in sample if variety_membership(a, presentation).holds]
    unconditional = presentation.unconditional_equations()
    witnesses = []
    counts = {"members": len(members), "products": 0, "subalgebras": 0, "images": 0, "skipped_images": 0}

    for i, j in itertools.combinations_with_replacement(range(len(members)), 2):
        prod = product_algebra([members[i], members[j]])
        counts["products"] += 1
        failure = _first_failure(prod, presentation.equations)
        if failure is not None:
            witnesses.append(witness("product", f"product of members {i} and {j} fails {failure.equation}",
                                     members=[i, j], assignment=failure.assignment))

    for i, algebra in enumerate(members):
        seen = []
        points = algebra.carrier.points
        for size in range(len(points) + 1):
            for seed in itertools.combinations(points, size):
                sub = subalgebra_generated(algebra, seed)
                if any(sub.carrier.points == s for s in seen):
                    continue
                seen.append(sub.carrier.points)
                counts["subalgebras"] += 1
                failure = _first_failure(sub, presentation.equations)
                if failure is not None:
                    witnesses.append(witness("subalgebra", f"subalgebra generated by {label(seed)} fails {failure.equation}",
                                             member=i, seed=seed))
        if len(algebra) > size_cap:
            counts["skipped_images"] += 1
            continue
        for h in homomorphic_images(algebra, size_cap):
            counts["images"] += 1
            failure = _first_failure(h.target, unconditional)
            if failure is not None:
                witnesses.append(witness("image", f"a homomorphic image of member {i} fails {failure.equation}",
                                         member=i, image=h.map))
    logger.info(f"closure check: {counts}")
    return check_report("birkhoff-closure", witnesses, **counts)


def _symbol_name(n: int, k: int) -> str:
    return f"t{n}_{k}"


def standard_variables(n: int) -> tuple[str, ...]:
    return tuple(f"x{i}" for i in range(n))


def presentation_from_monad(monad: Any, n_max: int, size_cap: int, truncate: bool = True) -> Presentation:
    """Signature ``Sigma_n = |T V_n|`` with the three equation families, for ``n <= n_max``.

    ``V_n`` is the discrete space on ``x0 .. x{n-1}``. Each ``T V_n`` keeps its first
    ``size_cap`` elements (unit images first); the three families are emitted
    for retained symbols only:

    1. ``s(x0..) =[d] s'(x0..)`` for distinct symbols at finite distance ``d``;
    2. ``k*(s)(x0..) = s(k(x0), ..)`` for ``k: V_n -> T V_m`` with retained values;
    3. ``eta(x_i)(x0..) = x_i``.

    Raises:
        BudgetExceeded: If ``truncate`` is false and some ``T V_n`` is larger than ``size_cap``.
    """
    retained: dict[int, list] = {}
    names: dict[int, dict] = {}
    spaces: dict[int, MetricSpace] = {}
    truncated = {}
    symbols = []
    for n in range(n_max + 1):
        space = MetricSpace.discrete(standard_variables(n))
        spaces[n] = space
        units = [monad.unit_element(x, space) for x in space.points]
        others = [t for t in monad.elements(space) if t not in units]
        ordered = list(dict.fromkeys(units)) + others
        if len(ordered) > size_cap and not truncate:
            raise BudgetExceeded(f"T V_{n} has {len(ordered)} elements, size cap is {size_cap}")
        truncated[n] = len(ordered) > size_cap
        retained[n] = ordered[:size_cap]
        names[n] = {t: _symbol_name(n, k) for k, t in enumerate(retained[n])}
        symbols.extend((names[n][t], n) for t in retained[n])
    signature = Signature(symbols)

    def applied(n: int, element: Any, args: Sequence[Term]) -> Term:
        return App(names[n][element], tuple(args))

    equations: list = []
    for n in range(n_max + 1):
        xs = tuple(Var(x) for x in spaces[n].points)
        for s, t in itertools.combinations(retained[n], 2):
            distance = monad.distance(spaces[n], s, t)
            if distance is not INF:
                equations.append(QuantEquation(applied(n, s, xs), applied(n, t, xs), distance, spaces[n].points))
    for n in range(n_max + 1):
        for m in range(n_max + 1):
            target = spaces[m]
            ys = tuple(Var(y) for y in target.points)
            choices = retained[m]
            lifted = monad.on_space(target)
            if len(choices) ** n > ENUMERATION_BUDGET:
                raise BudgetExceeded(f"too many substitutions V_{n} -> T V_{m}")
            for values in itertools.product(choices, repeat=n):
                k = dict(zip(spaces[n].points, values))
                for s in retained[n]:
                    substituted = monad.join(monad.fmap(k.__getitem__, s, spaces[n], lifted), target)
                    if substituted not in names[m]:
                        continue
                    right = applied(n, s, tuple(applied(m, v, ys) for v in values))
                    left = applied(m, substituted, ys)
                    equations.append(QuantEquation(left, right, ZERO, target.points))
    for n in range(n_max + 1):
        xs = tuple(Var(x) for x in spaces[n].points)
        for x in spaces[n].points:
            unit = monad.unit_element(x, spaces[n])
            if unit in names[n]:
                equations.append(QuantEquation(applied(n, unit, xs), Var(x), ZERO, spaces[n].points))
    glossary = {names[n][t]: label(t) for n in retained for t in retained[n]}
    logger.info(f"presentation from {getattr(monad, 'name', 'monad')}: {len(signature)} symbols, {len(equations)} equations")
    return Presentation(
        signature,
        equations,
        name=f"from-{getattr(monad, 'name', 'monad')}",
        metadata={"truncated": any(truncated.values()), "truncated_levels": [n for n, t in truncated.items() if t],
                  "symbols": glossary},
    )


def _x(name: str) -> Var:
    return Var(name)


def _mul(a: Term, b: Term) -> App:
    return App("mul", (a, b))


def monoid_presentation() -> Presentation:
    x, y, z = _x("x"), _x("y"), _x("z")
    unit = App("unit")
    return Presentation(
        monoid_signature(),
        [
            QuantEquation(_mul(_mul(x, y), z), _mul(x, _mul(y, z))),
            QuantEquation(_mul(unit, x), x),
            QuantEquation(_mul(x, unit), x),
        ],
        name="monoid",
    )


def commutative_monoid_presentation() -> Presentation:
    p = monoid_presentation()
    p.equations.append(QuantEquation(_mul(_x("x"), _x("y")), _mul(_x("y"), _x("x"))))
    p.name = "commutative-monoid"
    return p


def almost_commutative_presentation(eps: Any) -> Presentation:
    p = monoid_presentation()
    p.equations.append(QuantEquation(_mul(_x("x"), _x("y")), _mul(_x("y"), _x("x")), as_dist(eps)))
    p.name = f"almost-commutative-{format_dist(as_dist(eps))}"
    return p


def semilattice_presentation() -> Presentation:
    """Commutative idempotent monoids written with ``join`` and ``zero``."""
    x, y, z = _x("x"), _x("y"), _x("z")

    def join(a: Term, b: Term) -> App:
        return App("join", (a, b))

    return Presentation(
        semilattice_signature(),
        [
            QuantEquation(join(join(x, y), z), join(x, join(y, z))),
            QuantEquation(join(x, y), join(y, x)),
            QuantEquation(join(x, x), x),
            QuantEquation(join(x, App("zero")), x),
        ],
        name="semilattice",
    )


def almost_semilattice_presentation(eps: Any) -> Presentation:
    p = almost_commutative_presentation(eps)
    p.equations.append(QuantEquation(_mul(_x("x"), _x("x")), _x("x"), as_dist(eps)))
    p.name = f"almost-semilattice-{format_dist(as_dist(eps))}"
    return p


def almost_small_presentation(eps: Any) -> Presentation:
    return Presentation(
        Signature(),
        [QuantEquation(_x("x"), _x("y"), as_dist(eps))],
        name=f"almost-small-{format_dist(as_dist(eps))}",
    )


def _unit_distance_pair() -> MetricSpace:
    return MetricSpace.from_pairs(("x", "y"), {("x", "y"): 1})


def quasi_commutative_presentation(eps: Any = 0) -> Presentation:
    """Monoids with ``x =[1] y |- x * y =[eps] y * x``."""
    p = monoid_presentation()
    p.equations.append(BasicEquation(_unit_distance_pair(), _mul(_x("x"), _x("y")), _mul(_x("y"), _x("x")), as_dist(eps)))
    p.name = "quasi-commutative-monoid" if as_dist(eps) == ZERO else f"almost-quasi-commutative-{format_dist(as_dist(eps))}"
    return p


def quasi_discrete_presentation() -> Presentation:
    """Spaces whose non-zero distances all exceed 1: ``x =[1] y |- x = y``."""
    return Presentation(
        Signature(),
        [BasicEquation(_unit_distance_pair(), _x("x"), _x("y"), ZERO)],
        name="quasi-discrete",
    )
