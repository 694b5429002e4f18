"""The ``.qalg`` text format: spaces, signatures, algebras, presentations and run directives.

Example::

    # two points at distance 1/2
    space M { a b  d(a, b) = 1/2 }
    signature Mon { mul: 2  unit: 0 }
    presentation AlmostComm : Mon {
        mul(x, y) =[1/4] mul(y, x);
        M |- mul(a, b) =[1] mul(b, a)
        x ~[1] y |- x =[0] y
    }
    run free(AlmostComm, M)

Bare identifiers in terms are variables and ``NAME()`` is a constant. Space
entries not listed are at distance ``inf``. ``parse`` returns a
``QalgDocument``; every diagnostic is a ``ParseError`` carrying its line,
column and the set of tokens that would have been accepted.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from quantitative_algebra_workbench.algebras import QuantAlgebra
from quantitative_algebra_workbench.equations import (
    BasicEquation,
    HypothesisListEquation,
    Presentation,
    QuantEquation,
)
from quantitative_algebra_workbench.errors import InputError, ParseError
from quantitative_algebra_workbench.metric import INF, MetricSpace, PseudometricSpace, format_dist, parse_dist
from quantitative_algebra_workbench.terms import App, OperationSymbol, Signature, Term, Var

logger = logging.getLogger(__name__)

_TOKEN = re.compile(
    r"""
    (?P<newline>\n)
  | (?P<space>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>\d+(?:\.\d+)?(?:/\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*(?:-[A-Za-z0-9_]+)*)
  | (?P<op>=\[|~\[|\|-|[{}():,=@\];])
    """,
    re.VERBOSE,
)

KEYWORDS = ("space", "signature", "algebra", "presentation", "run")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    """Split ``text`` into tokens, ending with an ``eof`` token.

    Raises:
        ParseError: On a character no token starts with.
    """
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        column = pos - line_start + 1
        if match is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, column)
        kind = match.lastgroup
        if kind == "newline":
            line += 1
            line_start = match.end()
        elif kind not in ("space", "comment"):
            tokens.append(Token(kind, match.group(), line, column))
        pos = match.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


@dataclass
class SpaceBlock:
    name: str
    space: PseudometricSpace


@dataclass
class SignatureBlock:
    name: str
    signature: Signature
    arity_names: dict[str, str] = field(default_factory=dict)


@dataclass
class AlgebraBlock:
    name: str
    signature: str
    space: str
    tables: dict[str, dict[tuple, Any]]
    algebra: QuantAlgebra = field(compare=False, repr=False, default=None)


@dataclass
class PresentationBlock:
    name: str
    signature: str
    equations: tuple
    presentation: Presentation = field(compare=False, repr=False, default=None)


@dataclass
class Directive:
    command: str
    args: tuple[str, ...]


Block = SpaceBlock | SignatureBlock | AlgebraBlock | PresentationBlock | Directive


@dataclass
class QalgDocument:
    """The blocks of a ``.qalg`` file in source order."""

    blocks: list = field(default_factory=list)

    def _named(self, kind: type, name: str, what: str) -> Any:
        for block in self.blocks:
            if isinstance(block, kind) and block.name == name:
                return block
        known = [b.name for b in self.blocks if isinstance(b, kind)]
        raise InputError(f"no {what} named {name!r}; defined: {', '.join(known) or 'none'}")

    def space(self, name: str) -> PseudometricSpace:
        return self._named(SpaceBlock, name, "space").space

    def signature(self, name: str) -> Signature:
        return self._named(SignatureBlock, name, "signature").signature

    def algebra(self, name: str) -> QuantAlgebra:
        return self._named(AlgebraBlock, name, "algebra").algebra

    def presentation(self, name: str) -> Presentation:
        return self._named(PresentationBlock, name, "presentation").presentation

    def names(self, kind: type) -> list[str]:
        return [b.name for b in self.blocks if isinstance(b, kind)]

    @property
    def directives(self) -> list[Directive]:
        return [b for b in self.blocks if isinstance(b, Directive)]


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.document = QalgDocument()

    # token helpers

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        token = self.peek()
        self.pos += 1
        return token

    def at(self, text: str) -> bool:
        token = self.peek()
        return token.kind == "op" and token.text == text

    def error(self, message: str, expected: set[str] | None = None, token: Token | None = None) -> ParseError:
        token = token or self.peek()
        return ParseError(message, token.line, token.column, expected)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.peek().text or "end of input"
            raise self.error(f"unexpected {found!r}", {repr(text)})
        return self.advance()

    def expect_name(self, what: str = "NAME") -> Token:
        token = self.peek()
        if token.kind != "name":
            raise self.error(f"unexpected {token.text or 'end of input'!r}", {what})
        return self.advance()

    def expect_keyword(self, word: str) -> Token:
        token = self.peek()
        if token.kind != "name" or token.text != word:
            raise self.error(f"unexpected {token.text or 'end of input'!r}", {repr(word)})
        return self.advance()

    def skip_separator(self) -> None:
        while self.at(";") or self.at(","):
            self.advance()

    def dist(self):
        token = self.peek()
        if token.kind not in ("number", "name"):
            raise self.error(f"unexpected {token.text or 'end of input'!r}", {"DIST"})
        self.advance()
        try:
            return parse_dist(token.text)
        except InputError as exc:
            raise self.error(str(exc), {"DIST"}, token) from None

    def resolved(self, token: Token, call, *args, **kwargs):
        """Run a model constructor, reporting its InputError at ``token``."""
        try:
            return call(*args, **kwargs)
        except InputError as exc:
            raise self.error(str(exc), token=token) from None

    def unique(self, kind: type, token: Token) -> None:
        if token.text in self.document.names(kind):
            raise self.error(f"{token.text!r} is defined twice", token=token)

    # grammar

    def parse(self) -> QalgDocument:
        while self.peek().kind != "eof":
            token = self.peek()
            if token.kind == "name" and token.text in KEYWORDS:
                block = getattr(self, f"parse_{token.text}")()
                self.document.blocks.append(block)
            else:
                raise self.error(f"unexpected {token.text!r}", set(KEYWORDS))
        logger.debug(f"parsed {len(self.document.blocks)} blocks")
        return self.document

    def parse_space(self) -> SpaceBlock:
        self.expect_keyword("space")
        name = self.expect_name()
        self.unique(SpaceBlock, name)
        self.expect("{")
        points: list[str] = []
        entries: dict[tuple[str, str], Any] = {}
        while self.peek().kind == "name" and not (self.peek().text == "d" and self.peek(1).text == "("):
            points.append(self.advance().text)
            self.skip_separator()
        while not self.at("}"):
            entry = self.expect_keyword("d")
            self.expect("(")
            x = self.expect_name("POINT").text
            self.expect(",")
            y = self.expect_name("POINT").text
            self.expect(")")
            self.expect("=")
            value = self.dist()
            if (x, y) in entries or (y, x) in entries:
                raise self.error(f"distance d({x}, {y}) is given twice", token=entry)
            entries[(x, y)] = value
            self.skip_separator()
        self.expect("}")
        space = self.resolved(name, MetricSpace.from_pairs, points, entries)
        return SpaceBlock(name.text, space)

    def parse_signature(self) -> SignatureBlock:
        self.expect_keyword("signature")
        name = self.expect_name()
        self.unique(SignatureBlock, name)
        self.expect("{")
        symbols = []
        arity_names = {}
        while not self.at("}"):
            symbol = self.expect_name("SYMBOL")
            self.expect(":")
            if self.at("@"):
                self.advance()
                space_token = self.expect_name("SPACE")
                arity = self.resolved(space_token, self.document.space, space_token.text)
                arity_names[symbol.text] = space_token.text
            else:
                token = self.peek()
                if token.kind != "number" or not token.text.isdigit():
                    raise self.error(f"unexpected {token.text or 'end of input'!r}", {"INT", "'@'"})
                arity = int(self.advance().text)
            symbols.append(self.resolved(symbol, OperationSymbol, symbol.text, arity))
            self.skip_separator()
        self.expect("}")
        signature = self.resolved(name, Signature, symbols)
        return SignatureBlock(name.text, signature, arity_names)

    def parse_algebra(self) -> AlgebraBlock:
        self.expect_keyword("algebra")
        name = self.expect_name()
        self.unique(AlgebraBlock, name)
        self.expect(":")
        sig_token = self.expect_name("SIGNATURE")
        signature = self.resolved(sig_token, self.document.signature, sig_token.text)
        self.expect_keyword("on")
        space_token = self.expect_name("SPACE")
        carrier = self.resolved(space_token, self.document.space, space_token.text)
        self.expect("{")
        tables: dict[str, dict[tuple, Any]] = {s.name: {} for s in signature}
        while not self.at("}"):
            symbol = self.expect_name("SYMBOL")
            if symbol.text not in tables:
                raise self.error(f"{symbol.text!r} is not an operation of {sig_token.text}", token=symbol)
            self.expect("(")
            args = []
            while not self.at(")"):
                args.append(self.expect_name("POINT").text)
                if not self.at(")"):
                    self.expect(",")
            self.expect(")")
            self.expect("=")
            value = self.expect_name("POINT").text
            key = tuple(args)
            if key in tables[symbol.text]:
                raise self.error(f"{symbol.text}({', '.join(key)}) is given twice", token=symbol)
            tables[symbol.text][key] = value
            self.skip_separator()
        self.expect("}")
        algebra = self.resolved(name, QuantAlgebra, signature, carrier, tables, name=name.text)
        return AlgebraBlock(name.text, sig_token.text, space_token.text, tables, algebra)

    def parse_presentation(self) -> PresentationBlock:
        self.expect_keyword("presentation")
        name = self.expect_name()
        self.unique(PresentationBlock, name)
        self.expect(":")
        sig_token = self.expect_name("SIGNATURE")
        signature = self.resolved(sig_token, self.document.signature, sig_token.text)
        self.expect("{")
        equations = []
        while not self.at("}"):
            equations.append(self.equation())
            self.skip_separator()
        self.expect("}")
        presentation = Presentation(signature, list(equations), name=name.text)
        self.resolved(name, presentation.validate)
        return PresentationBlock(name.text, sig_token.text, tuple(equations), presentation)

    def parse_run(self) -> Directive:
        self.expect_keyword("run")
        command = self.expect_name("COMMAND").text
        self.expect("(")
        args = []
        while not self.at(")"):
            args.append(self.expect_name().text)
            if not self.at(")"):
                self.expect(",")
        self.expect(")")
        self.skip_separator()
        return Directive(command, tuple(args))

    def equation(self):
        start = self.peek()
        nxt = self.peek(1)
        if start.kind == "name" and nxt.kind == "op" and nxt.text == "|-":
            self.advance()
            self.advance()
            context = self.resolved(start, self.document.space, start.text)
            left, eps, right = self.conclusion()
            return self.resolved(start, BasicEquation, context, left, right, eps, start.text)
        if start.kind == "name" and nxt.kind == "op" and nxt.text == "~[":
            hypotheses = [self.hypothesis()]
            while self.at(","):
                self.advance()
                hypotheses.append(self.hypothesis())
            self.expect("|-")
            left, eps, right = self.conclusion()
            return self.resolved(start, HypothesisListEquation, tuple(hypotheses), left, right, eps)
        left, eps, right = self.conclusion()
        return self.resolved(start, QuantEquation, left, right, eps)

    def hypothesis(self) -> tuple:
        x = self.expect_name("VARIABLE").text
        self.expect("~[")
        delta = self.dist()
        self.expect("]")
        y = self.expect_name("VARIABLE").text
        return (x, y, delta)

    def conclusion(self) -> tuple:
        left = self.term()
        self.expect("=[")
        eps = self.dist()
        self.expect("]")
        right = self.term()
        return left, eps, right

    def term(self) -> Term:
        head = self.expect_name("TERM")
        if not self.at("("):
            return Var(head.text)
        self.advance()
        children = []
        while not self.at(")"):
            children.append(self.term())
            if not self.at(")"):
                self.expect(",")
        self.expect(")")
        return App(head.text, tuple(children))


def parse(text: str) -> QalgDocument:
    """Parse a ``.qalg`` document.

    Raises:
        ParseError: With the position and the expected-token set.
    """
    return _Parser(tokenize(text)).parse()


def load(path: str | Path) -> QalgDocument:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    return parse(text)


def format_space(name: str, space: PseudometricSpace) -> str:
    lines = [f"space {name} {{", "    " + " ".join(str(p) for p in space.points)]
    for x, y in space.pairs():
        d = space.d(x, y)
        if d is not INF:
            lines.append(f"    d({x}, {y}) = {format_dist(d)}")
    lines.append("}")
    return "\n".join(lines)


def _print_block(block: Block) -> str:
    if isinstance(block, SpaceBlock):
        return format_space(block.name, block.space)
    if isinstance(block, SignatureBlock):
        arities = [
            f"    {s.name}: @{block.arity_names[s.name]}" if s.generalized else f"    {s.name}: {s.arity}"
            for s in block.signature
        ]
        return "\n".join([f"signature {block.name} {{", *arities, "}"])
    if isinstance(block, AlgebraBlock):
        rows = [
            f"    {symbol}({', '.join(str(a) for a in args)}) = {value}"
            for symbol, table in block.tables.items()
            for args, value in table.items()
        ]
        return "\n".join([f"algebra {block.name} : {block.signature} on {block.space} {{", *rows, "}"])
    if isinstance(block, PresentationBlock):
        rows = [f"    {e};" for e in block.equations]
        return "\n".join([f"presentation {block.name} : {block.signature} {{", *rows, "}"])
    return f"run {block.command}({', '.join(block.args)})"


def print_document(document: QalgDocument) -> str:
    """Render a document back to ``.qalg`` text; ``parse`` of the result gives an equal document."""
    return "\n\n".join(_print_block(b) for b in document.blocks) + "\n"


def parse_equation(text: str, document: QalgDocument | None = None):
    """Parse one equation; basic equations name their context among ``document``'s spaces."""
    parser = _Parser(tokenize(text))
    if document is not None:
        parser.document = document
    equation = parser.equation()
    parser.skip_separator()
    if parser.peek().kind != "eof":
        raise parser.error(f"unexpected {parser.peek().text!r}", {"end of input"})
    return equation


def presentation_document(presentation: Presentation, signature_name: str = "Sigma") -> QalgDocument:
    """A two-block document holding a finitary presentation and its signature."""
    name = presentation.name or "P"
    return QalgDocument([
        SignatureBlock(signature_name, presentation.signature),
        PresentationBlock(name, signature_name, tuple(presentation.equations), presentation),
    ])
