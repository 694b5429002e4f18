"""Tests for the .qalg text format."""

import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from quantitative_algebra_workbench.dsl import (
    AlgebraBlock,
    Directive,
    PresentationBlock,
    SignatureBlock,
    SpaceBlock,
    load,
    parse,
    parse_equation,
    presentation_document,
    print_document,
    tokenize,
)
from quantitative_algebra_workbench.equations import (
    BasicEquation,
    HypothesisListEquation,
    QuantEquation,
    monoid_presentation,
    semilattice_presentation,
)
from quantitative_algebra_workbench.errors import InputError, ParseError
from quantitative_algebra_workbench.metric import INF
from quantitative_algebra_workbench.terms import App, Var

DATA = Path(__file__).parent / "data"
GOOD_FILES = sorted(DATA.glob("*.qalg"))
BAD_FILES = sorted((DATA / "bad").glob("*.qalg"))


class TestTokenizer:
    """Tests for splitting text into tokens."""

    def test_token_kinds(self):
        """Test operators, numbers and hyphenated names."""
        tokens = tokenize("run check-sat(A, B)\nx =[1/2] y")
        assert [t.kind for t in tokens] == [
            "name", "name", "op", "name", "op", "name", "op", "name", "op", "number", "op", "name", "eof",
        ]
        assert tokens[1].text == "check-sat"
        assert (tokens[7].line, tokens[7].column) == (2, 1)
        assert tokens[9].text == "1/2"

    def test_comments_are_skipped(self):
        """Test that comments run to the end of the line."""
        tokens = tokenize("# nothing here\nspace # still nothing\n")
        assert [t.text for t in tokens] == ["space", ""]

    def test_unexpected_character(self):
        """Test that unknown characters report their position."""
        with pytest.raises(ParseError) as exc_info:
            tokenize("space M {\n  a $ b }")
        assert (exc_info.value.line, exc_info.value.column) == (2, 5)


class TestParse:
    """Tests for parsing whole documents."""

    def test_blocks(self):
        """Test that every block kind is parsed in order."""
        doc = load(DATA / "binary_partial.qalg")
        assert [type(b) for b in doc.blocks] == [SpaceBlock, SpaceBlock, SignatureBlock, AlgebraBlock, Directive]
        assert doc.space("M").d("a", "b") == Fraction(1, 2)
        assert doc.signature("Bin").symbol("bin").generalized
        assert doc.algebra("First").apply("bin", ("a", "b")) == "a"
        assert doc.directives == [Directive("enumerate-terms", ("Bin", "M"))]

    def test_unlisted_pairs_are_infinite(self):
        """Test the default distance of unlisted pairs."""
        doc = parse("space S { a b c  d(a, b) = 1 }")
        assert doc.space("S").d("a", "c") is INF

    def test_equation_kinds(self):
        """Test that the three equation forms are recognised."""
        doc = parse(
            "space P { x y d(x, y) = 1 }\n"
            "signature S { f: 1 }\n"
            "presentation E : S {\n"
            "    f(x) =[1/4] x;\n"
            "    P |- f(x) =[0] f(y);\n"
            "    x ~[1] y |- x =[inf] y\n"
            "}\n"
        )
        block = doc.blocks[-1]
        assert isinstance(block, PresentationBlock)
        kinds = [type(e) for e in block.equations]
        assert kinds == [QuantEquation, BasicEquation, HypothesisListEquation]
        assert block.equations[0].eps == Fraction(1, 4)
        assert block.equations[2].eps is INF
        assert doc.presentation("E").name == "E"

    def test_lookup_of_unknown_name(self):
        """Test that lookups name the defined blocks."""
        doc = load(DATA / "chain.qalg")
        with pytest.raises(InputError) as exc_info:
            doc.signature("Missing")
        assert "no signature named 'Missing'" in str(exc_info.value)

    def test_duplicate_names(self):
        """Test that a name is defined at most once per kind."""
        with pytest.raises(ParseError) as exc_info:
            parse("space A { a }\nspace A { b }")
        assert "defined twice" in exc_info.value.message
        assert exc_info.value.line == 2

    def test_duplicate_distance(self):
        """Test that a pair gets at most one distance."""
        with pytest.raises(ParseError) as exc_info:
            parse("space A { a b d(a, b) = 1 d(b, a) = 1 }")
        assert "given twice" in exc_info.value.message

    def test_unknown_keyword(self):
        """Test the expected-token set at the top level."""
        with pytest.raises(ParseError) as exc_info:
            parse("graph G { }")
        assert exc_info.value.expected == ["algebra", "presentation", "run", "signature", "space"]


class TestDiagnostics:
    """Tests for the error positions reported on malformed files."""

    @pytest.mark.parametrize("path", BAD_FILES, ids=lambda p: p.stem)
    def test_bad_files_raise_parse_errors(self, path):
        """Test that every malformed file is rejected with a position."""
        with pytest.raises(ParseError) as exc_info:
            load(path)
        assert exc_info.value.line >= 1
        assert exc_info.value.column >= 1

    def test_decimal_distance(self):
        """Test that decimals are refused where a rational is expected."""
        with pytest.raises(ParseError) as exc_info:
            load(DATA / "bad" / "decimal.qalg")
        error = exc_info.value
        assert "rational p/q expected" in error.message
        assert (error.line, error.column) == (4, 12)
        assert error.expected == ["DIST"]

    def test_missing_bracket(self):
        """Test that an equation needs =[eps]."""
        with pytest.raises(ParseError) as exc_info:
            load(DATA / "bad" / "missing_bracket.qalg")
        assert (exc_info.value.line, exc_info.value.column) == (4, 10)
        assert exc_info.value.expected == ["'=['"]

    def test_unknown_space(self):
        """Test that names resolve against earlier blocks."""
        with pytest.raises(ParseError) as exc_info:
            load(DATA / "bad" / "unknown_space.qalg")
        assert (exc_info.value.line, exc_info.value.column) == (2, 18)
        assert "Nowhere" in exc_info.value.message

    def test_triangle_inequality(self):
        """Test that invalid spaces are reported at their name."""
        with pytest.raises(ParseError) as exc_info:
            load(DATA / "bad" / "triangle.qalg")
        assert "triangle inequality" in exc_info.value.message
        assert (exc_info.value.line, exc_info.value.column) == (1, 7)

    def test_partial_table(self):
        """Test that algebra tables must be total."""
        with pytest.raises(ParseError) as exc_info:
            load(DATA / "bad" / "partial_table.qalg")
        assert "undefined at" in exc_info.value.message

    def test_to_dict(self):
        """Test the serialized diagnostic."""
        with pytest.raises(ParseError) as exc_info:
            parse("space")
        assert exc_info.value.to_dict() == {
            "message": "unexpected 'end of input'",
            "line": 1,
            "column": 6,
            "expected": ["NAME"],
        }

    def test_missing_file(self, tmp_path):
        """Test that unreadable files are input errors."""
        with pytest.raises(InputError) as exc_info:
            load(tmp_path / "absent.qalg")
        assert "cannot read" in str(exc_info.value)


class TestPrinter:
    """Tests for printing documents back to text."""

    @pytest.mark.parametrize("path", GOOD_FILES, ids=lambda p: p.stem)
    def test_round_trip(self, path):
        """Test that printing and reparsing gives an equal document."""
        doc = load(path)
        text = print_document(doc)
        again = parse(text)
        assert again == doc
        assert print_document(again) == text

    def test_printed_space(self):
        """Test the printed form of a space."""
        doc = parse("space Pair { u v w  d(u, v) = 1/2 }")
        assert print_document(doc) == "space Pair {\n    u v w\n    d(u, v) = 1/2\n}\n"

    def test_presentation_document(self):
        """Test that built-in presentations print as parseable text."""
        for presentation in (monoid_presentation(), semilattice_presentation()):
            doc = presentation_document(presentation)
            again = parse(print_document(doc))
            assert again == doc
            assert again.presentation(presentation.name).equations == presentation.equations


class TestParseEquation:
    """Tests for parsing a single equation."""

    def test_quant_equation(self):
        """Test a plain equation with a constant."""
        e = parse_equation("mul(x, unit()) =[0] x")
        assert e == QuantEquation(App("mul", (Var("x"), App("unit"))), Var("x"))

    def test_basic_equation_needs_document(self):
        """Test that contexts are looked up in the given document."""
        doc = parse("space P { x y d(x, y) = 1 }")
        e = parse_equation("P |- x =[0] y", doc)
        assert isinstance(e, BasicEquation)
        assert e.context_name == "P"
        with pytest.raises(ParseError):
            parse_equation("P |- x =[0] y")

    def test_trailing_input(self):
        """Test that only one equation is accepted."""
        with pytest.raises(ParseError) as exc_info:
            parse_equation("x =[0] y z")
        assert exc_info.value.expected == ["end of input"]
