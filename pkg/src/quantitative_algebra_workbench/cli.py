#!/usr/bin/env python3
"""Command-line interface of the quantitative algebra workbench.

Exit codes: 0 the property holds or the computation succeeded, 1 the property
is refuted (the report carries a witness), 2 invalid input, 3 a budget or pass
limit was exceeded.
"""

import argparse
import json
import logging
import random
import sys
from typing import Any, NoReturn, Sequence

from quantitative_algebra_workbench.config import (
    DEFAULT_DEPTH,
    DEFAULT_MONAD_CAP,
    ENUMERATION_BUDGET,
    FILE_EXTENSION,
    LOG_LEVEL,
    TERM_UNIVERSE_BUDGET,
)
from quantitative_algebra_workbench.dsl import QalgDocument, load, parse_equation, presentation_document, print_document
from quantitative_algebra_workbench.equations import (
    HypothesisListEquation,
    Presentation,
    reflect_hypotheses,
    satisfies_equation,
    variety_membership,
)
from quantitative_algebra_workbench.errors import (
    BudgetExceeded,
    ConvergenceError,
    EvaluationError,
    InputError,
    ParseError,
)
from quantitative_algebra_workbench.free_algebra import (
    compare_with_oracle,
    free_algebra,
    free_algebra_report,
    stability_check,
    verify_fixed_point,
)
from quantitative_algebra_workbench.metric import (
    MetricSpace,
    NonexpandingMap,
    directed_colimit,
    format_dist,
    hausdorff_distance,
    parse_dist,
    verify_colimit,
)
from quantitative_algebra_workbench.monads import (
    check_directed_colimit_preservation,
    check_enriched,
    check_functor_laws,
    check_monad_laws,
    check_precongruence_preservation,
    check_preserves_surjections,
    dyadic_chain,
    get_monad,
    monad_names,
    random_space,
)
from quantitative_algebra_workbench.reports import (
    CheckReport,
    Envelope,
    MembershipResult,
    PresentationListing,
    ReflectionResult,
    TermListing,
    check_report,
    label,
    witness,
)
from quantitative_algebra_workbench.terms import enumerate_terms, format_term

logger = logging.getLogger(__name__)

# Positional meaning of the arguments of a `run COMMAND(...)` directive
DIRECTIVE_SLOTS = {
    "check-sat": ("algebra", "presentation"),
    "free": ("presentation", "space"),
    "reflect": ("presentation",),
    "monad-check": ("space",),
    "hausdorff": ("space",),
    "enumerate-terms": ("signature", "space"),
}

PROPERTIES = ("enriched", "surjections", "precongruence", "directed-colimit")


def _document(args: argparse.Namespace) -> QalgDocument:
    if args.file is None:
        raise InputError(f"{args.command} needs a {FILE_EXTENSION} file")
    return load(args.file)


def _apply_directive(args: argparse.Namespace, document: QalgDocument) -> None:
    """Fill selectors the command line left out from the first matching `run` directive."""
    slots = DIRECTIVE_SLOTS.get(args.command, ())
    for directive in document.directives:
        if directive.command != args.command:
            continue
        for slot, value in zip(slots, directive.args):
            if getattr(args, slot, None) is None:
                setattr(args, slot, value)
        break


def _required(args: argparse.Namespace, name: str) -> str:
    value = getattr(args, name, None)
    if value is None:
        raise InputError(f"{args.command} needs --{name.replace('_', '-')}")
    return value


def _split(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _chain(text: str, document: QalgDocument | None) -> tuple[list, list]:
    """``dyadic:N`` or a comma-separated list of spaces joined by label inclusions."""
    if text.startswith("dyadic"):
        _, _, count = text.partition(":")
        return dyadic_chain(int(count) if count else 4)
    if document is None:
        raise InputError("a chain of named spaces needs a file")
    chain = [document.space(name) for name in _split(text)]
    if not chain:
        raise InputError("empty chain")
    maps = [NonexpandingMap(chain[k], chain[k + 1], lambda x: x) for k in range(len(chain) - 1)]
    return chain, maps


def check_sat_command(args: argparse.Namespace) -> MembershipResult:
    """Decide whether an algebra satisfies a presentation (or one of its equations)."""
    document = _document(args)
    _apply_directive(args, document)
    algebra = document.algebra(_required(args, "algebra"))
    presentation = document.presentation(_required(args, "presentation"))
    if args.equation is not None:
        e = parse_equation(args.equation, document)
        result = satisfies_equation(algebra, e)
        return MembershipResult(
            presentation=str(e), holds=result.holds,
            failing_equation=None if result.holds else str(e), results=[result],
        )
    return variety_membership(algebra, presentation)


def free_command(args: argparse.Namespace) -> Any:
    """Approximate the free algebra and optionally certify it against an oracle monad."""
    document = _document(args)
    _apply_directive(args, document)
    presentation = document.presentation(_required(args, "presentation"))
    generators = document.space(_required(args, "space"))
    depth = args.depth if args.depth is not None else DEFAULT_DEPTH
    approx = free_algebra(presentation, generators, depth)
    checks = [verify_fixed_point(approx)]
    if args.oracle:
        checks.append(compare_with_oracle(approx, get_monad(args.oracle, cap=max(len(generators), DEFAULT_MONAD_CAP))))
    if args.stability:
        checks.append(stability_check(approx))
    report = free_algebra_report(approx)
    report.metadata = {**report.metadata, "checks": [c.model_dump() for c in checks]}
    holds = all(c.holds for c in checks)
    return report, holds


def reflect_command(args: argparse.Namespace) -> list[ReflectionResult]:
    """Reflect hypothesis lists onto basic equations over metric contexts."""
    document = load(args.file) if args.file else None
    if document is not None:
        _apply_directive(args, document)
    if args.equation is not None:
        equations = [parse_equation(args.equation, document)]
    elif document is not None:
        equations = document.presentation(_required(args, "presentation")).equations
    else:
        raise InputError("reflect needs --equation or a file with --presentation")
    results = []
    for e in equations:
        if not isinstance(e, HypothesisListEquation):
            continue
        basic = reflect_hypotheses(e)
        context = basic.context
        results.append(ReflectionResult(
            source=str(e),
            reflected=f"{format_term(basic.left)} =[{format_dist(basic.eps)}] {format_term(basic.right)}",
            context=[label(p) for p in context.points],
            distances={f"{label(x)},{label(y)}": format_dist(context.d(x, y)) for x, y in context.pairs()},
        ))
    if not results:
        raise InputError("no hypothesis-list equation to reflect")
    return results


def _sample_spaces(args: argparse.Namespace) -> list[MetricSpace]:
    rng = random.Random(args.seed)
    return [random_space(rng, args.max_points) for _ in range(args.samples)]


def monad_laws_command(args: argparse.Namespace) -> CheckReport:
    """Functor and monad laws of a named instance on seeded random spaces."""
    monad = get_monad(_required(args, "monad"), cap=args.cap)
    spaces = _sample_spaces(args)
    reports = [check_functor_laws(monad, spaces)]
    if monad.is_monad:
        reports.append(check_monad_laws(monad, spaces, seed=args.seed))
    witnesses = [w for r in reports for w in r.witnesses]
    return check_report(
        "monad-laws", witnesses, monad=monad.name, seed=args.seed, spaces=len(spaces),
        checks={r.check: r.holds for r in reports},
    )


def _default_spaces(prop: str) -> tuple[MetricSpace, MetricSpace]:
    if prop == "enriched":
        return MetricSpace.discrete(["*"]), MetricSpace.from_pairs(["a", "b"], {("a", "b"): 1})
    return MetricSpace.discrete(["x", "y"]), MetricSpace.from_pairs(["x", "y"], {("x", "y"): parse_dist("1/2")})


def monad_check_command(args: argparse.Namespace) -> CheckReport:
    """One property of a named monad: enriched, surjections, precongruence or directed-colimit."""
    monad = get_monad(_required(args, "monad"), cap=args.cap)
    prop = _required(args, "property")
    document = load(args.file) if args.file else None
    if document is not None:
        _apply_directive(args, document)
    if prop == "directed-colimit":
        chain, maps = _chain(args.chain or "dyadic:4", document)
        return check_directed_colimit_preservation(monad, chain, maps)
    if prop == "precongruence":
        if args.space is not None:
            if document is None:
                raise InputError("--space needs a file")
            space = document.space(args.space)
        else:
            space = MetricSpace.from_pairs(["a", "b", "c"], {("a", "b"): 1, ("b", "c"): 1, ("a", "c"): 2})
        budget = args.budget if args.budget is not None else ENUMERATION_BUDGET
        return check_precongruence_preservation(monad, space, budget=budget)
    if args.left is not None and args.right is not None:
        if document is None:
            raise InputError("--left/--right name spaces and need a file")
        left, right = document.space(args.left), document.space(args.right)
    else:
        left, right = _default_spaces(prop)
    if prop == "enriched":
        return check_enriched(monad, left, right)
    if prop == "surjections":
        return check_preserves_surjections(monad, NonexpandingMap(left, right, lambda x: x))
    raise InputError(f"unknown property {prop!r}; known: {', '.join(PROPERTIES)}")


def hausdorff_command(args: argparse.Namespace) -> CheckReport:
    """Hausdorff distance of two subsets; with ``--bound`` the report holds iff it is within it."""
    document = _document(args)
    _apply_directive(args, document)
    space = document.space(_required(args, "space"))
    left, right = _split(_required(args, "left")), _split(_required(args, "right"))
    distance = hausdorff_distance(space, left, right)
    witnesses = []
    if args.bound is not None and distance > parse_dist(args.bound):
        witnesses.append(witness("exceeds-bound", f"d_H = {format_dist(distance)} exceeds {args.bound}"))
    return check_report("hausdorff", witnesses, distance=distance, left=left, right=right)


def colimit_command(args: argparse.Namespace) -> CheckReport:
    """Colimit of a finite chain with the distance trajectories of the first stage's pairs."""
    document = load(args.file) if args.file else None
    chain, maps = _chain(_required(args, "chain"), document)
    colimit, cocone = directed_colimit(chain, maps)
    witnesses = [witness("colimit", p) for p in verify_colimit(chain, maps, colimit, cocone)]
    trajectories = {}
    for x, y in chain[0].pairs():
        path = [chain[0].d(x, y)]
        a, b = x, y
        for f in maps:
            a, b = f(a), f(b)
            path.append(f.cod.d(a, b))
        trajectories[f"{label(x)},{label(y)}"] = [format_dist(d) for d in path]
    return check_report(
        "colimit", witnesses,
        points=list(colimit.points),
        distances={f"{label(x)},{label(y)}": colimit.d(x, y) for x, y in colimit.pairs()},
        trajectories=trajectories,
    )


def enumerate_terms_command(args: argparse.Namespace) -> TermListing:
    """Every term up to the depth bound over a named signature and space."""
    document = _document(args)
    _apply_directive(args, document)
    signature = document.signature(_required(args, "signature"))
    space = document.space(_required(args, "space"))
    depth = args.depth if args.depth is not None else DEFAULT_DEPTH
    budget = args.budget if args.budget is not None else TERM_UNIVERSE_BUDGET
    universe = enumerate_terms(signature, space, depth, budget)
    return TermListing(
        signature=[f"{s.name}/{s.width}" for s in signature],
        generators=[label(p) for p in space.points],
        depth=depth,
        count=len(universe),
        terms=[format_term(t) for t in universe],
    )


def presentation_from_monad_command(args: argparse.Namespace) -> PresentationListing:
    """The presentation of a monad's finite fragment, printed as ``.qalg`` text."""
    from quantitative_algebra_workbench.equations import presentation_from_monad

    monad = get_monad(_required(args, "monad"), cap=args.cap)
    presentation: Presentation = presentation_from_monad(monad, args.n_max, args.size_cap, truncate=not args.no_truncate)
    return PresentationListing(
        name=presentation.name,
        symbols=len(presentation.signature),
        equations=len(presentation.equations),
        text=print_document(presentation_document(presentation)),
        metadata=presentation.metadata,
    )


def _exit_code(report: Any) -> int:
    if isinstance(report, tuple):
        return 0 if report[1] else 1
    if isinstance(report, (list, TermListing, PresentationListing)):
        return 0
    return report.exit_code


def _payload(report: Any) -> Any:
    if isinstance(report, tuple):
        report = report[0]
    if isinstance(report, list):
        return [r.model_dump() for r in report]
    return report.model_dump()


def _render(command: str, report: Any) -> str:
    """Plain-text summary for the terminal."""
    if isinstance(report, tuple):
        free, holds = report
        lines = [f"{free.classes} classes at depth {free.depth} ({free.rounds} rounds)"]
        width = max((len(r) for r in free.representatives), default=0)
        for rep, row in zip(free.representatives, free.distances):
            lines.append(f"  {rep.ljust(width)}  " + " ".join(d.rjust(5) for d in row))
        for check in free.metadata.get("checks", []):
            lines.append(f"{check['check']}: {'holds' if check['holds'] else 'fails'}")
            lines.extend(f"  - {w['kind']}: {w['message']}" for w in check["witnesses"])
        return "\n".join(lines)
    if isinstance(report, list):
        return "\n".join(
            f"{r.source}\n  reflects to {r.reflected} over "
            + "{" + ", ".join(f"d({k}) = {v}" for k, v in r.distances.items()) + "}"
            for r in report
        )
    if isinstance(report, CheckReport):
        lines = [f"{report.check}: {'holds' if report.holds else 'refuted'}"]
        lines.extend(f"  - {w.kind}: {w.message}" for w in report.witnesses)
        if "distance" in report.metadata:
            lines.append(f"  distance = {report.metadata['distance']}")
        return "\n".join(lines)
    if isinstance(report, MembershipResult):
        lines = [f"{report.presentation}: {'satisfied' if report.holds else 'refuted'}"]
        for result in report.results:
            if not result.holds:
                lines.append(f"  {result.equation} fails at {result.assignment}: "
                             f"{result.left_value} and {result.right_value} are at distance {result.distance}")
        return "\n".join(lines)
    if isinstance(report, TermListing):
        return "\n".join([f"{report.count} terms of height <= {report.depth}", *report.terms])
    if isinstance(report, PresentationListing):
        return report.text
    return json.dumps(_payload(report), indent=2)


HANDLERS = {
    "check-sat": check_sat_command,
    "free": free_command,
    "reflect": reflect_command,
    "monad-laws": monad_laws_command,
    "monad-check": monad_check_command,
    "hausdorff": hausdorff_command,
    "colimit": colimit_command,
    "enumerate-terms": enumerate_terms_command,
    "presentation-from-monad": presentation_from_monad_command,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='qalg',
        description='Quantitative algebra workbench: finite metric spaces, quantitative equations and monads'
    )
    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('file', nargs='?', help=f'A {FILE_EXTENSION} document')
    common.add_argument('--json', action='store_true', help='Print the report as a JSON envelope')
    common.add_argument('--depth', type=int, help=f'Term depth bound (default: {DEFAULT_DEPTH})')
    common.add_argument('--budget', type=int, help='Enumeration budget for commands that take one')
    common.add_argument('--seed', type=int, default=0, help='Seed for sampled property suites')

    check_sat = subparsers.add_parser('check-sat', parents=[common], help='Decide A |= P')
    check_sat.add_argument('--algebra', help='Algebra block name')
    check_sat.add_argument('--presentation', help='Presentation block name')
    check_sat.add_argument('--equation', help='Check this single equation instead')

    free = subparsers.add_parser('free', parents=[common], help='Free algebra approximation')
    free.add_argument('--presentation', help='Presentation block name')
    free.add_argument('--space', help='Generator space block name')
    free.add_argument('--oracle', help=f'Monad whose elements should match the classes ({", ".join(monad_names())})')
    free.add_argument('--stability', action='store_true', help='Recompute at depth + 1 and tag stable pairs')

    reflect = subparsers.add_parser('reflect', parents=[common], help='Reflect hypothesis lists onto basic equations')
    reflect.add_argument('--presentation', help='Presentation block name')
    reflect.add_argument('--equation', help='A hypothesis-list equation, e.g. "x ~[1] y |- x =[1] y"')

    for name, help_text in (('monad-laws', 'Functor and monad laws on random spaces'),
                            ('monad-check', 'One property of a monad instance')):
        sub = subparsers.add_parser(name, parents=[common], help=help_text)
        sub.add_argument('--monad', help=f'Instance name ({", ".join(monad_names())}); NAME:EPS passes eps')
        sub.add_argument('--cap', type=int, default=DEFAULT_MONAD_CAP, help='Word length / subset size cap')
        if name == 'monad-laws':
            sub.add_argument('--samples', type=int, default=20, help='Number of random spaces')
            sub.add_argument('--max-points', type=int, default=3, help='Largest random space')
        else:
            sub.add_argument('--property', choices=PROPERTIES, help='Property to check')
            sub.add_argument('--space', help='Space block name (precongruence)')
            sub.add_argument('--left', help='Domain space block name (enriched, surjections)')
            sub.add_argument('--right', help='Codomain space block name (enriched, surjections)')
            sub.add_argument('--chain', help='dyadic:N or comma-separated space names (directed-colimit)')

    hausdorff = subparsers.add_parser('hausdorff', parents=[common], help='Hausdorff distance of two subsets')
    hausdorff.add_argument('--space', help='Space block name')
    hausdorff.add_argument('--left', help='Comma-separated points')
    hausdorff.add_argument('--right', help='Comma-separated points')
    hausdorff.add_argument('--bound', help='Refute when the distance exceeds this bound')

    colimit = subparsers.add_parser('colimit', parents=[common], help='Colimit of a finite chain')
    colimit.add_argument('--chain', help='dyadic:N or comma-separated space names')

    terms = subparsers.add_parser('enumerate-terms', parents=[common], help='List the depth-bounded term universe')
    terms.add_argument('--signature', help='Signature block name')
    terms.add_argument('--space', help='Generator space block name')

    from_monad = subparsers.add_parser('presentation-from-monad', parents=[common], help='Presentation of a monad')
    from_monad.add_argument('--monad', help='Instance name')
    from_monad.add_argument('--cap', type=int, default=DEFAULT_MONAD_CAP, help='Word length / subset size cap')
    from_monad.add_argument('--n-max', type=int, default=2, help='Largest arity n of the V_n')
    from_monad.add_argument('--size-cap', type=int, default=8, help='Elements kept per T V_n')
    from_monad.add_argument('--no-truncate', action='store_true', help='Fail instead of truncating')
    return parser


def _emit(args: argparse.Namespace, exit_code: int, payload: Any, text: str | None) -> None:
    if args.json:
        envelope = Envelope(command=args.command, exit_code=exit_code, report=payload)
        print(envelope.model_dump_json(indent=2))
    elif text:
        print(text)


def run(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv``, run the command and print its report; returns the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command not in HANDLERS:
        parser.print_help()
        return 2
    try:
        report = HANDLERS[args.command](args)
    except ParseError as e:
        print(f"Error: {args.file or '<equation>'}:{e}", file=sys.stderr)
        _emit(args, 2, {"error": e.message, "diagnostic": e.to_dict()}, None)
        return 2
    except (InputError, EvaluationError) as e:
        print(f"Error: {e}", file=sys.stderr)
        _emit(args, 2, {"error": str(e)}, None)
        return 2
    except (BudgetExceeded, ConvergenceError) as e:
        print(f"Budget exceeded: {e}", file=sys.stderr)
        _emit(args, 3, {"error": str(e)}, None)
        return 3
    code = _exit_code(report)
    logger.info(f"{args.command} finished with exit code {code}")
    _emit(args, code, _payload(report), _render(args.command, report))
    return code


def main() -> NoReturn:
    """Main CLI entry point."""
    logging.basicConfig(
        level=LOG_LEVEL,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    sys.exit(run())


if __name__ == "__main__":
    main()
