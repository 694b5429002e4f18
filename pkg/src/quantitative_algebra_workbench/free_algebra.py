"""Depth-bounded free algebras of a presentation on a finite metric space.

The terms of height at most ``depth`` are kept modulo exact identifications in
an e-graph: union-find classes of hash-consed operation nodes, saturated with
the unconditional ``eps = 0`` equations. Distances are then computed between
classes as the greatest pseudometric meeting

* the generator bounds ``d(x, y) <= d_M(x, y)``,
* every axiom instance ``d(f#l, f#r) <= eps`` (nonexpanding ``f`` for basic
  equations, checked against the current distances),
* congruence ``d(s(a_i), s(b_i)) <= max_i d(a_i, b_i)``,
* the triangle inequality.

Classes that end up at distance 0 are merged and the whole computation is
repeated. Every constraint holds in the true free algebra, so the resulting
distances are upper bounds of the true ones; they are exact whenever an oracle
or the stability check certifies them.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterator, Mapping

from quantitative_algebra_workbench.algebras import QuantAlgebra, check_algebra
from quantitative_algebra_workbench.config import EGRAPH_BUDGET, ENUMERATION_BUDGET
from quantitative_algebra_workbench.equations import (
    BasicEquation,
    HypothesisListEquation,
    Presentation,
    reflect_hypotheses,
    variety_membership,
)
from quantitative_algebra_workbench.errors import (
    BudgetExceeded,
    ConvergenceError,
    EvaluationError,
    InputError,
)
from quantitative_algebra_workbench.metric import (
    INF,
    ZERO,
    Dist,
    MetricSpace,
    NonexpandingMap,
    PseudometricSpace,
    check_metric_axioms,
    format_dist,
)
from quantitative_algebra_workbench.reports import (
    CheckReport,
    FreeAlgebraReport,
    check_report,
    label,
    witness,
)
from quantitative_algebra_workbench.terms import (
    App,
    Term,
    TermSpace,
    Var,
    enumerate_terms,
    format_term,
    homomorphic_extension,
    term_order_key,
    variables,
)

logger = logging.getLogger(__name__)

Node = tuple  # (symbol, child classes) or (None, generator point)


class _EGraph:
    """Hash-consed operation nodes over union-find classes."""

    def __init__(self, budget: int = EGRAPH_BUDGET):
        self.budget = budget
        self._parent: list[int] = []
        self.hashcons: dict[Node, int] = {}

    def find(self, c: int) -> int:
        root = c
        while self._parent[root] != root:
            root = self._parent[root]
        while self._parent[c] != root:
            self._parent[c], c = root, self._parent[c]
        return root

    def canonical(self, node: Node) -> Node:
        if node[0] is None:
            return node
        return (node[0], tuple(self.find(k) for k in node[1]))

    def add(self, node: Node) -> int:
        node = self.canonical(node)
        existing = self.hashcons.get(node)
        if existing is not None:
            return self.find(existing)
        if len(self.hashcons) >= self.budget:
            raise BudgetExceeded(f"e-graph exceeds budget of {self.budget} nodes")
        cls = len(self._parent)
        self._parent.append(cls)
        self.hashcons[node] = cls
        return cls

    def union(self, a: int, b: int) -> bool:
        a, b = self.find(a), self.find(b)
        if a == b:
            return False
        if b < a:
            a, b = b, a
        self._parent[b] = a
        return True

    def rebuild(self) -> None:
        """Restore the hash-cons invariant, merging classes of nodes that became equal."""
        while True:
            fresh: dict[Node, int] = {}
            merged = False
            for node, cls in self.hashcons.items():
                canon = self.canonical(node)
                cls = self.find(cls)
                other = fresh.get(canon)
                if other is not None and self.find(other) != cls:
                    self.union(other, cls)
                    merged = True
                fresh[canon] = self.find(cls)
            self.hashcons = fresh
            if not merged:
                return

    def classes(self) -> dict[int, list[Node]]:
        members: dict[int, list[Node]] = {}
        for node, cls in self.hashcons.items():
            members.setdefault(self.find(cls), []).append(node)
        return members

    def heights(self) -> dict[int, int]:
        """Least height of a term in each class."""
        heights: dict[int, int] = {}
        changed = True
        while changed:
            changed = False
            for node, cls in self.hashcons.items():
                if node[0] is None:
                    h = 0
                else:
                    kids = [heights.get(self.find(k)) for k in node[1]]
                    if any(k is None for k in kids):
                        continue
                    h = 1 + max(kids, default=0)
                root = self.find(cls)
                if h < heights.get(root, h + 1):
                    heights[root] = h
                    changed = True
        return heights

    def lookup(self, pattern: Term, binding: Mapping[Any, int]) -> int | None:
        if isinstance(pattern, Var):
            bound = binding.get(pattern.point)
            return None if bound is None else self.find(bound)
        kids = []
        for child in pattern.children:
            k = self.lookup(child, binding)
            if k is None:
                return None
            kids.append(k)
        cls = self.hashcons.get((pattern.symbol, tuple(kids)))
        return None if cls is None else self.find(cls)

    def match(self, pattern: Term, cls: int, binding: dict, members: Mapping[int, list[Node]]) -> Iterator[dict]:
        cls = self.find(cls)
        if isinstance(pattern, Var):
            bound = binding.get(pattern.point)
            if bound is None:
                yield {**binding, pattern.point: cls}
            elif self.find(bound) == cls:
                yield binding
            return
        for node in members.get(cls, ()):
            if node[0] == pattern.symbol and len(node[1]) == len(pattern.children):
                yield from self._match_children(pattern.children, node[1], 0, binding, members)

    def _match_children(self, patterns, kids, i, binding, members) -> Iterator[dict]:
        if i == len(patterns):
            yield binding
            return
        for extended in self.match(patterns[i], kids[i], binding, members):
            yield from self._match_children(patterns, kids, i + 1, extended, members)


def _instances(graph: _EGraph, left: Term, right: Term, free_vars: tuple) -> Iterator[tuple[dict, int, int]]:
    """Bindings under which both sides are represented, with the two classes."""
    members = graph.classes()
    roots = sorted(members)
    for cls in roots:
        for binding in graph.match(left, cls, {}, members):
            missing = [v for v in free_vars if v not in binding]
            for values in itertools.product(roots, repeat=len(missing)):
                full = {**binding, **dict(zip(missing, values))}
                other = graph.lookup(right, full)
                if other is not None:
                    yield full, graph.find(cls), other


@dataclass
class FreeAlgebraApprox:
    """The result of ``free_algebra``: classes, their distances, the quotient and the unit.

    Class representatives are the least terms of their class in the canonical
    structural order; ``pseudo`` is the class-level distance (already separated,
    so it coincides with its metric reflection) and ``quotient`` is the partial
    algebra whose tables are the represented operation nodes.
    """

    presentation: Presentation
    generators: PseudometricSpace
    depth_bound: int
    representatives: list[Term]
    pseudo: MetricSpace
    quotient: QuantAlgebra
    unit: NonexpandingMap
    rounds: int = 1
    exactness_flag: bool = False
    exact: list[list[bool]] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    _graph: _EGraph | None = field(default=None, repr=False)
    _rep_of: dict = field(default_factory=dict, repr=False)
    _universe: TermSpace | None = field(default=None, repr=False)

    def class_of(self, t: Term) -> Term:
        """Representative of the class of ``t``.

        Raises:
            InputError: If ``t`` is not represented at this depth.
        """
        graph = self._graph
        if isinstance(t, Var):
            cls = graph.hashcons.get((None, t.point))
            if cls is None:
                raise InputError(f"{t.point!r} is not a generator")
            return self._rep_of[graph.find(cls)]
        binding = {p: graph.find(graph.hashcons[(None, p)]) for p in variables(t) if (None, p) in graph.hashcons}
        cls = graph.lookup(t, binding)
        if cls is None:
            raise InputError(f"term {format_term(t)} is not represented at depth {self.depth_bound}")
        return self._rep_of[cls]

    def distance(self, t: Term, s: Term) -> Dist:
        return self.pseudo.d(self.class_of(t), self.class_of(s))

    @property
    def universe(self) -> TermSpace:
        """Every term of height at most ``depth_bound`` (enumerated on first use)."""
        if self._universe is None:
            self._universe = enumerate_terms(self.presentation.signature, self.generators, self.depth_bound)
        return self._universe

    def __len__(self) -> int:
        return len(self.representatives)


class _DistanceSolver:
    """Class-level greatest pseudometric, on integers scaled by a common denominator."""

    def __init__(self, graph: _EGraph, scale: int):
        self.graph = graph
        self.scale = scale
        self.members = graph.classes()
        self.roots = sorted(self.members)
        self.dist: dict[int, dict[int, int]] = {c: {} for c in self.roots}
        self.parents: dict[int, list[tuple[str, tuple, int]]] = {c: [] for c in self.roots}
        for cls, nodes in self.members.items():
            for node in nodes:
                if node[0] is not None:
                    for kid in set(node[1]):
                        self.parents[kid].append((node[0], node[1], cls))
        self.pairs = len(self.roots) * (len(self.roots) - 1) // 2
        self.relaxations = 0
        self.passes = 0
        self.worklist: list[tuple[int, int]] = []

    def scaled(self, value: Fraction) -> int:
        return int(value * self.scale)

    def get(self, a: int, b: int) -> int | None:
        if a == b:
            return 0
        return self.dist[a].get(b)

    def lower(self, a: int, b: int, value: int) -> bool:
        if a == b:
            return False
        current = self.dist[a].get(b)
        if current is not None and current <= value:
            return False
        self.relaxations += 1
        self.dist[a][b] = value
        self.dist[b][a] = value
        self.worklist.append((a, b))
        return True

    def propagate(self) -> None:
        while self.worklist:
            a, b = self.worklist.pop()
            value = self.dist[a][b]
            for c, w in list(self.dist[b].items()):
                self.lower(a, c, value + w)
            for c, w in list(self.dist[a].items()):
                self.lower(b, c, value + w)
            for symbol, kids, p in self.parents[a]:
                for symbol2, kids2, q in self.parents[b]:
                    if symbol != symbol2 or p == q or len(kids) != len(kids2):
                        continue
                    bound = 0
                    for k1, k2 in zip(kids, kids2):
                        d = self.get(k1, k2)
                        if d is None:
                            break
                        bound = max(bound, d)
                    else:
                        self.lower(p, q, bound)

    def saturate_basic(self, basic: list[BasicEquation]) -> None:
        """Re-instantiate the basic equations until a pass lowers nothing.

        Every changing pass lowers at least one pair; with a single pair each
        change lands on a distinct ``eps``.

        Raises:
            ConvergenceError: If more than ``max(pairs ** 2, len(basic))`` passes change a distance.
        """
        limit = max(self.pairs * self.pairs, len(basic), 1)
        while True:
            changed = False
            for e in basic:
                changed |= self.basic_instances(e, self.scaled(e.eps))
            self.propagate()
            if not changed:
                return
            self.passes += 1
            if self.passes > limit:
                raise ConvergenceError(f"distance fixed point did not converge within {limit} passes")

    def basic_instances(self, e: BasicEquation, eps: int) -> bool:
        """Apply every instance of ``e`` nonexpanding for the current distances."""
        context = e.context
        points = context.points
        graph = self.graph
        changed = False
        for cls in self.roots:
            for binding in graph.match(e.left, cls, {}, self.members):
                for full in self._extend(binding, points, context):
                    other = graph.lookup(e.right, full)
                    if other is not None and self.lower(graph.find(cls), other, eps):
                        changed = True
        return changed

    def _extend(self, binding: dict, points: tuple, context: PseudometricSpace) -> Iterator[dict]:
        for x, y in itertools.combinations([p for p in points if p in binding], 2):
            if not self._within(binding[x], binding[y], context.d(x, y)):
                return
        missing = [p for p in points if p not in binding]
        if not missing:
            yield binding
            return
        x = missing[0]
        anchors = [(binding[z], context.d(z, x)) for z in points if z in binding and context.d(z, x) is not INF]
        if anchors:
            anchor = anchors[0][0]
            candidates = sorted({anchor, *self.dist[anchor]})
        else:
            candidates = self.roots
        for c in candidates:
            if all(self._within(b, c, bound) for b, bound in anchors):
                yield from self._extend({**binding, x: c}, points, context)

    def _within(self, a: int, b: int, bound: Dist) -> bool:
        if bound is INF:
            return True
        d = self.get(a, b)
        return d is not None and d <= self.scaled(bound)


def _scale_for(presentation_distances: list[Dist], generators: PseudometricSpace) -> int:
    scale = 1
    values = list(presentation_distances) + [v for row in generators.rows for v in row]
    for v in values:
        if v is not INF:
            scale = math.lcm(scale, v.denominator)
    return scale


def _split_equations(presentation: Presentation) -> tuple[list, list, list]:
    """Exact rules, static ``eps > 0`` bounds and conditional (basic) equations."""
    rules, bounds, basic = [], [], []
    for e in presentation.equations:
        if isinstance(e, HypothesisListEquation):
            e = reflect_hypotheses(e)
        if e.eps is INF:
            continue
        if isinstance(e, BasicEquation) and not e.unconditional:
            basic.append(e)
            continue
        occurring = variables(e.left) | variables(e.right)
        free_vars = tuple(p for p in e.variables if p in occurring)
        target = rules if e.eps == ZERO else bounds
        target.append((e.left, e.right, e.eps, free_vars))
    return rules, bounds, basic


def _saturate(graph: _EGraph, rules: list) -> None:
    while True:
        pending = []
        for left, right, _, free_vars in rules:
            for _, a, b in _instances(graph, left, right, free_vars):
                if a != b:
                    pending.append((a, b))
        merged = False
        for a, b in pending:
            merged |= graph.union(a, b)
        if not merged:
            return
        graph.rebuild()


def _grow(graph: _EGraph, presentation: Presentation, depth: int, rules: list) -> None:
    for level in range(1, depth + 1):
        heights = graph.heights()
        eligible = sorted(c for c, h in heights.items() if h <= level - 1)
        for symbol in presentation.signature:
            if len(eligible) ** symbol.width > graph.budget:
                raise BudgetExceeded(f"{symbol.name} would add more than {graph.budget} nodes at height {level}")
            for kids in itertools.product(eligible, repeat=symbol.width):
                graph.add((symbol.name, kids))
        graph.rebuild()
        _saturate(graph, rules)


def _representatives(graph: _EGraph, presentation: Presentation) -> dict[int, Term]:
    signature = presentation.signature
    reps: dict[int, Term] = {}
    keys: dict[int, tuple] = {}
    changed = True
    while changed:
        changed = False
        for node, cls in graph.hashcons.items():
            root = graph.find(cls)
            if node[0] is None:
                candidate: Term = Var(node[1])
            else:
                kids = [graph.find(k) for k in node[1]]
                if any(k not in reps for k in kids):
                    continue
                candidate = App(node[0], tuple(reps[k] for k in kids))
            key = term_order_key(candidate, signature)
            if root not in keys or key < keys[root]:
                reps[root] = candidate
                keys[root] = key
                changed = True
    return reps


def free_algebra(presentation: Presentation, generators: PseudometricSpace, depth: int) -> FreeAlgebraApprox:
    """Approximate the free algebra of ``presentation`` on ``generators`` by terms of height ``<= depth``.

    Raises:
        InputError: For generalized signatures.
        BudgetExceeded: If the e-graph outgrows its budget.
        ConvergenceError: If the distance fixed point exceeds its pass limit.
    """
    if not presentation.signature.finitary:
        raise InputError("free algebras are computed for finitary signatures only")
    if depth < 0:
        raise InputError("depth must be non-negative")
    presentation.validate()
    rules, bounds, basic = _split_equations(presentation)
    scale = _scale_for(
        [b[2] for b in bounds]
        + [e.eps for e in basic]
        + [v for e in basic for row in e.context.rows for v in row],
        generators,
    )
    graph = _EGraph()
    for x in generators.points:
        graph.add((None, x))

    rounds = 0
    while True:
        rounds += 1
        _grow(graph, presentation, depth, rules)
        solver = _DistanceSolver(graph, scale)
        var_class = {x: graph.find(graph.hashcons[(None, x)]) for x in generators.points}
        for x, y in generators.pairs():
            d = generators.d(x, y)
            if d is not INF:
                solver.lower(var_class[x], var_class[y], solver.scaled(d))
        for left, right, eps, free_vars in bounds:
            for _, a, b in _instances(graph, left, right, free_vars):
                solver.lower(a, b, solver.scaled(eps))
        solver.propagate()
        solver.saturate_basic(basic)
        zero_pairs = [(a, b) for a in solver.roots for b, v in solver.dist[a].items() if v == 0 and a < b]
        logger.info(
            f"round {rounds}: {len(solver.roots)} classes, {len(graph.hashcons)} nodes, "
            f"{solver.relaxations} relaxations in {solver.passes + 1} passes, {len(zero_pairs)} zero-distance pairs"
        )
        if not zero_pairs:
            break
        for a, b in zero_pairs:
            graph.union(a, b)
        graph.rebuild()
        _saturate(graph, rules)

    reps = _representatives(graph, presentation)
    roots = sorted(solver.roots, key=lambda c: term_order_key(reps[c], presentation.signature))
    order = [reps[c] for c in roots]

    def distance(i: int, j: int) -> Dist:
        d = solver.get(roots[i], roots[j])
        return INF if d is None else Fraction(d, scale)

    n = len(roots)
    pseudo = MetricSpace(order, [[distance(i, j) for j in range(n)] for i in range(n)], validate=False)
    tables: dict[str, dict[tuple, Term]] = {s.name: {} for s in presentation.signature}
    for node, cls in graph.hashcons.items():
        if node[0] is not None:
            tables[node[0]][tuple(reps[graph.find(k)] for k in node[1])] = reps[graph.find(cls)]
    quotient = QuantAlgebra(presentation.signature, pseudo, tables, partial=True, name=f"free-{presentation}")
    unit = NonexpandingMap(generators, pseudo, lambda x: reps[var_class[x]], check=False)
    return FreeAlgebraApprox(
        presentation=presentation,
        generators=generators,
        depth_bound=depth,
        representatives=order,
        pseudo=pseudo,
        quotient=quotient,
        unit=unit,
        rounds=rounds,
        exact=[[i == j for j in range(n)] for i in range(n)],
        metadata={"nodes": len(graph.hashcons), "relaxations": solver.relaxations, "passes": solver.passes},
        _graph=graph,
        _rep_of={c: reps[c] for c in solver.roots},
    )


def verify_fixed_point(approx: FreeAlgebraApprox, pseudo: PseudometricSpace | None = None) -> CheckReport:
    """Check the closure conditions on the class distances (or on a proposed replacement).

    Generator bounds, axiom instances, congruence and the triangle inequality are
    all re-checked from scratch; with the computed distances the report holds.
    """
    space = pseudo if pseudo is not None else approx.pseudo
    witnesses = []
    for problem in check_metric_axioms(space, require_separation=False):
        witnesses.append(witness("triangle", problem))
    for x, y in approx.generators.pairs():
        bound = approx.generators.d(x, y)
        actual = space.d(approx.unit(x), approx.unit(y))
        if actual > bound:
            witnesses.append(witness("generator-bound", f"d([{x}], [{y}]) = {format_dist(actual)} exceeds {format_dist(bound)}"))
    algebra = approx.quotient
    if pseudo is not None:
        algebra = QuantAlgebra(algebra.signature, space, algebra.tables, partial=True)
    for w in check_algebra(algebra).witnesses:
        witnesses.append(witness("congruence", w.message, **w.data))
    membership = variety_membership(algebra, approx.presentation, skip_undefined=True)
    if not membership.holds:
        failing = membership.results[-1]
        witnesses.append(witness("axiom", f"{failing.equation} fails at distance {failing.distance}",
                                 assignment=failing.assignment))
    return check_report("fixed-point", witnesses, classes=len(space))


def universal_property_check(approx: FreeAlgebraApprox, algebra: QuantAlgebra, assignment: Any) -> CheckReport:
    """Check that ``assignment: M -> A`` extends to a unique homomorphism out of the quotient."""
    membership = variety_membership(algebra, approx.presentation)
    if not membership.holds:
        return check_report(
            "universal-property",
            [witness("precondition", f"target algebra fails {membership.failing_equation}")],
        )
    f = assignment if isinstance(assignment, NonexpandingMap) else NonexpandingMap(
        approx.generators, algebra.carrier, assignment, check=False
    )
    witnesses = [
        witness("expanding-assignment", f"d({x}, {y}) = {format_dist(b)} but images are at {format_dist(a)}")
        for x, y, b, a in f.expansions()
    ]
    extend = homomorphic_extension(f, algebra)
    values: dict[Term, Any] = {}
    for rep in approx.representatives:
        try:
            values[rep] = extend(rep)
        except EvaluationError as exc:
            witnesses.append(witness("truncation", f"cannot evaluate {format_term(rep)}: {exc}"))
    for x in approx.generators.points:
        rep = approx.unit(x)
        if rep in values and values[rep] != f(x):
            witnesses.append(witness("unit", f"h([{x}]) differs from f({x})"))
    for symbol in approx.quotient.signature:
        for args, result in approx.quotient.tables[symbol.name].items():
            if result not in values or any(a not in values for a in args):
                continue
            image_args = tuple(values[a] for a in args)
            if not algebra.is_defined(symbol.name, image_args):
                witnesses.append(witness("truncation", f"{symbol.name}{label(image_args)} is undefined in the target"))
                continue
            if algebra.apply(symbol.name, image_args) != values[result]:
                witnesses.append(witness(
                    "not-preserved",
                    f"h({symbol.name}{label(args)}) differs from {symbol.name}(h{label(args)})",
                ))
    for p, q in itertools.combinations(values, 2):
        if algebra.carrier.d(values[p], values[q]) > approx.pseudo.d(p, q):
            witnesses.append(witness("expanding-extension", f"h expands the distance of [{format_term(p)}] and [{format_term(q)}]"))
    return check_report(
        "universal-property",
        witnesses,
        unique=True,
        extension={format_term(p): label(v) for p, v in values.items()},
    )


def _oracle_reachable(oracle: Any, approx: FreeAlgebraApprox) -> list:
    """Oracle elements denoted by some term of height at most the depth bound.

    Raises:
        BudgetExceeded: If a level would apply an operation to more than the enumeration budget of argument tuples.
    """
    reached: dict[Any, None] = {}
    for x in approx.generators.points:
        reached.setdefault(oracle.unit_element(x, approx.generators))
    for _ in range(approx.depth_bound):
        below = list(reached)
        for symbol in approx.presentation.signature:
            operation = oracle.interpretation.get(symbol.name)
            if operation is None:
                continue
            if len(below) ** symbol.width > ENUMERATION_BUDGET:
                raise BudgetExceeded(f"oracle {symbol.name} would be applied to more than {ENUMERATION_BUDGET} tuples")
            for args in itertools.product(below, repeat=symbol.width):
                try:
                    reached.setdefault(operation(*args))
                except EvaluationError:
                    continue
    return list(reached)


def compare_with_oracle(approx: FreeAlgebraApprox, oracle: Any) -> CheckReport:
    """Compare the classes with the oracle's elements through the canonical evaluation map.

    The map must be a distance-preserving bijection onto the oracle elements
    reachable within the depth bound; on success the approximation is flagged exact.
    """
    witnesses = []
    images: dict[Term, Any] = {}
    for rep in approx.representatives:
        try:
            images[rep] = oracle.evaluate(rep, approx.generators)
        except EvaluationError as exc:
            witnesses.append(witness("unevaluable", f"{format_term(rep)}: {exc}"))
    seen: dict[Any, Term] = {}
    for rep, value in images.items():
        if value in seen:
            witnesses.append(witness("not-injective", f"[{format_term(rep)}] and [{format_term(seen[value])}] both map to {label(value)}"))
        else:
            seen[value] = rep
    try:
        reachable = _oracle_reachable(oracle, approx)
    except EvaluationError as exc:
        reachable = []
        witnesses.append(witness("unevaluable", f"generators: {exc}"))
    for value in reachable:
        if value not in seen:
            witnesses.append(witness(
                "not-surjective",
                f"{label(value)} is reachable within depth {approx.depth_bound} but no class maps to it",
                element=value,
            ))
    for p, q in itertools.combinations(images, 2):
        expected = oracle.distance(approx.generators, images[p], images[q])
        actual = approx.pseudo.d(p, q)
        if expected != actual:
            witnesses.append(witness(
                "distance",
                f"d([{format_term(p)}], [{format_term(q)}]) = {format_dist(actual)} but the oracle gives {format_dist(expected)}",
                left=p, right=q, computed=actual, oracle=expected,
            ))
    report = check_report("oracle", witnesses, oracle=getattr(oracle, "name", str(oracle)), classes=len(images), reachable=len(reachable))
    if report.holds:
        approx.exactness_flag = True
        approx.exact = [[True] * len(approx) for _ in range(len(approx))]
    return report


def stability_check(approx: FreeAlgebraApprox) -> CheckReport:
    """Recompute one level deeper and tag class pairs whose distances did not move.

    A deeper distance larger than the shallower one would contradict monotone
    refinement and is reported as a violation.
    """
    deeper = free_algebra(approx.presentation, approx.generators, approx.depth_bound + 1)
    witnesses = []
    stable = 0
    reps = approx.representatives
    for i, j in itertools.combinations(range(len(reps)), 2):
        before = approx.pseudo.d(reps[i], reps[j])
        after = deeper.distance(reps[i], reps[j])
        if after > before:
            witnesses.append(witness("not-monotone", f"d([{format_term(reps[i])}], [{format_term(reps[j])}]) grew with depth"))
        elif after == before:
            approx.exact[i][j] = approx.exact[j][i] = True
            stable += 1
    return check_report("stability", witnesses, stable_pairs=stable, pairs=len(reps) * (len(reps) - 1) // 2)


def free_algebra_report(approx: FreeAlgebraApprox) -> FreeAlgebraReport:
    reps = approx.representatives
    return FreeAlgebraReport(
        presentation=str(approx.presentation),
        generators=[label(x) for x in approx.generators.points],
        depth=approx.depth_bound,
        representatives=[format_term(r) for r in reps],
        distances=[[format_dist(approx.pseudo.d(p, q)) for q in reps] for p in reps],
        exact=approx.exact,
        unit={label(x): format_term(approx.unit(x)) for x in approx.generators.points},
        exactness_flag=approx.exactness_flag,
        partial=approx.quotient.partial,
        classes=len(reps),
        rounds=approx.rounds,
        metadata=approx.metadata,
    )
