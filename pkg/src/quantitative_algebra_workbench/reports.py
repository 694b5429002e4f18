"""Report records returned by every checker, and their JSON form."""

from __future__ import annotations

from fractions import Fraction
from typing import Any, Optional

from pydantic import BaseModel, Field

from quantitative_algebra_workbench.config import SCHEMA_VERSION
from quantitative_algebra_workbench.metric import INF, NonexpandingMap, canonical_key, format_dist
from quantitative_algebra_workbench.terms import Term, format_term


def jsonable(value: Any) -> Any:
    """Convert points, distances, terms and maps to plain JSON values."""
    if value is INF or isinstance(value, Fraction):
        return format_dist(value)
    if isinstance(value, Term):
        return format_term(value)
    if isinstance(value, NonexpandingMap):
        return {jsonable_key(x): jsonable(y) for x, y in zip(value.dom.points, value.images)}
    if isinstance(value, (tuple, list)):
        return [jsonable(v) for v in value]
    if isinstance(value, frozenset):
        return [jsonable(v) for v in sorted(value, key=canonical_key)]
    if isinstance(value, dict):
        return {jsonable_key(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)


def jsonable_key(value: Any) -> str:
    if isinstance(value, str):
        return value
    converted = jsonable(value)
    return converted if isinstance(converted, str) else repr(converted)


def label(value: Any) -> str:
    """Compact human-readable rendering of a point."""
    if isinstance(value, Term):
        return format_term(value)
    if isinstance(value, tuple):
        return "(" + ", ".join(label(v) for v in value) + ")"
    if isinstance(value, frozenset):
        return "{" + ", ".join(label(v) for v in sorted(value, key=canonical_key)) + "}"
    if value is INF or isinstance(value, Fraction):
        return format_dist(value)
    return str(value)


class Witness(BaseModel):
    """One violation or one piece of evidence."""

    kind: str
    message: str
    data: dict[str, Any] = Field(default_factory=dict)


class CheckReport(BaseModel):
    """Outcome of a property check: ``holds`` plus the witnesses that decide it."""

    check: str
    holds: bool
    witnesses: list[Witness] = Field(default_factory=list)
    metadata: dict[str, Any] = Field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return 0 if self.holds else 1

    def witness_kinds(self) -> list[str]:
        return [w.kind for w in self.witnesses]


def check_report(check: str, witnesses: list[Witness], **metadata: Any) -> CheckReport:
    """A report that holds iff there are no violation witnesses."""
    return CheckReport(check=check, holds=not witnesses, witnesses=witnesses, metadata=jsonable(metadata))


def witness(kind: str, message: str, **data: Any) -> Witness:
    return Witness(kind=kind, message=message, data=jsonable(data))


class SatisfactionResult(BaseModel):
    """Decision of ``A |= e``; on failure the lexicographically first violating assignment."""

    equation: str
    holds: bool
    assignment: Optional[dict[str, Any]] = None
    left_value: Any = None
    right_value: Any = None
    distance: Optional[str] = None
    checked: int = 0
    skipped: int = 0

    @property
    def exit_code(self) -> int:
        return 0 if self.holds else 1


class MembershipResult(BaseModel):
    presentation: str
    holds: bool
    failing_equation: Optional[str] = None
    results: list[SatisfactionResult] = Field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 0 if self.holds else 1


class FreeAlgebraReport(BaseModel):
    """Serialized free-algebra approximation."""

    presentation: str
    generators: list[str]
    depth: int
    representatives: list[str]
    distances: list[list[str]]
    exact: list[list[bool]]
    unit: dict[str, str]
    exactness_flag: bool
    partial: bool
    classes: int
    rounds: int
    metadata: dict[str, Any] = Field(default_factory=dict)


class Envelope(BaseModel):
    """Top-level JSON document written by ``qalg --json``."""

    schema_version: str = SCHEMA_VERSION
    command: str
    exit_code: int
    report: Any


class ReflectionResult(BaseModel):
    """A hypothesis list and the basic equation it reflects to."""

    source: str
    reflected: str
    context: list[str]
    distances: dict[str, str]


class TermListing(BaseModel):
    signature: list[str]
    generators: list[str]
    depth: int
    count: int
    terms: list[str]


class PresentationListing(BaseModel):
    """A presentation rendered as ``.qalg`` text, with its bookkeeping."""

    name: str
    symbols: int
    equations: int
    text: str
    metadata: dict[str, Any] = Field(default_factory=dict)
