"""Tests for the qalg command line."""

import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from quantitative_algebra_workbench.cli import build_parser, run
from quantitative_algebra_workbench.dsl import parse
from quantitative_algebra_workbench.reports import Envelope

DATA = Path(__file__).parent / "data"


def data(name: str) -> str:
    return str(DATA / name)


def run_json(capsys, *argv: str) -> Envelope:
    """Run a command with --json and parse the envelope it prints."""
    code = run([*argv, "--json"])
    envelope = Envelope.model_validate(json.loads(capsys.readouterr().out))
    assert envelope.exit_code == code
    return envelope


class TestParser:
    """Tests for argument parsing."""

    def test_defaults(self):
        """Test the shared options of a subcommand."""
        args = build_parser().parse_args(["free", "x.qalg"])
        assert args.file == "x.qalg"
        assert args.depth is None
        assert args.seed == 0
        assert not args.json

    def test_monad_check_properties(self):
        """Test that unknown properties are rejected by argparse."""
        with pytest.raises(SystemExit):
            build_parser().parse_args(["monad-check", "--property", "cartesian"])

    def test_no_command(self, capsys):
        """Test that running without a command prints help."""
        assert run([]) == 2
        assert "qalg" in capsys.readouterr().out


class TestCheckSat:
    """Tests for deciding satisfaction from .qalg files."""

    @pytest.mark.parametrize(
        ("name", "expected"),
        [
            ("z2_monoid.qalg", 0),
            ("two_element_semilattice.qalg", 0),
            ("left_projection.qalg", 1),
            ("xor.qalg", 1),
            ("hypotheses.qalg", 1),
            ("quasi_discrete.qalg", 1),
        ],
    )
    def test_run_directive(self, name, expected, capsys):
        """Test the exit code of each file's own check-sat directive."""
        assert run(["check-sat", data(name)]) == expected

    def test_selectors_override_directive(self, capsys):
        """Test that --presentation wins over the run directive."""
        assert run(["check-sat", data("left_projection.qalg"), "--presentation", "AlmostCommutative"]) == 0
        assert run(["check-sat", data("hypotheses.qalg"), "--presentation", "Far"]) == 0
        assert run(["check-sat", data("z2_monoid.qalg"), "--presentation", "Monoid"]) == 0

    def test_single_equation(self, capsys):
        """Test --equation against an algebra."""
        code = run(["check-sat", data("left_projection.qalg"), "--equation", "mul(x, y) =[1] mul(y, x)"])
        assert code == 0
        code = run(["check-sat", data("left_projection.qalg"), "--equation", "mul(x, y) =[0] x"])
        assert code == 0
        code = run(["check-sat", data("left_projection.qalg"), "--equation", "mul(x, y) =[0] y"])
        assert code == 1

    def test_failure_report(self, capsys):
        """Test the witness in the JSON envelope."""
        envelope = run_json(capsys, "check-sat", data("left_projection.qalg"))
        assert envelope.schema_version == "1"
        assert envelope.command == "check-sat"
        assert envelope.exit_code == 1
        result = envelope.report["results"][0]
        assert result["assignment"] == {"x": "a", "y": "b"}
        assert result["distance"] == "1"

    def test_failing_equation(self, capsys):
        """Test that membership names the first failing equation."""
        envelope = run_json(capsys, "check-sat", data("xor.qalg"))
        assert envelope.report["failing_equation"] == "join(x, x) =[0] x"

    def test_text_output(self, capsys):
        """Test the terminal rendering of a refutation."""
        run(["check-sat", data("left_projection.qalg")])
        out = capsys.readouterr().out
        assert "refuted" in out
        assert "distance 1" in out


class TestFree:
    """Tests for the free command."""

    def test_dyadic_stage(self, capsys):
        """Test that the quasi-discrete reflection leaves two classes at 5/4."""
        envelope = run_json(capsys, "free", data("dyadic.qalg"))
        assert envelope.exit_code == 0
        assert envelope.report["classes"] == 2
        assert envelope.report["distances"][0][1] == "5/4"

    def test_oracle(self, capsys):
        """Test the Hausdorff oracle on the free semilattice."""
        envelope = run_json(capsys, "free", data("semilattice.qalg"), "--depth", "3", "--oracle", "finite_hausdorff")
        assert envelope.exit_code == 0
        assert envelope.report["classes"] == 8
        checks = [c["check"] for c in envelope.report["metadata"]["checks"]]
        assert checks == ["fixed-point", "oracle"]

    def test_almost_commutative_text(self, capsys):
        """Test the plain-text table of class distances."""
        assert run(["free", data("almost_commutative.qalg"), "--depth", "1", "--stability"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("7 classes at depth 1")
        assert "fixed-point: holds" in out


class TestReflect:
    """Tests for reflecting hypothesis lists."""

    def test_presentation(self, capsys):
        """Test the reflected contexts of a presentation."""
        envelope = run_json(capsys, "reflect", data("reflect.qalg"))
        assert envelope.exit_code == 0
        first, second = envelope.report
        assert first["distances"]["x,z"] == "2"
        assert first["reflected"] == "x =[3] z"
        assert second["context"] == ["x"]

    def test_equation_without_file(self, capsys):
        """Test --equation on its own."""
        assert run(["reflect", "--equation", "x ~[1/2] y |- x =[1] y"]) == 0
        assert "reflects to x =[1] y" in capsys.readouterr().out

    def test_nothing_to_reflect(self, capsys):
        """Test that a presentation without hypotheses is an input error."""
        assert run(["reflect", data("semilattice.qalg"), "--presentation", "Semilattice"]) == 2


class TestMonadCommands:
    """Tests for monad-laws and monad-check."""

    def test_monad_laws(self, capsys):
        """Test a seeded law run."""
        envelope = run_json(capsys, "monad-laws", "--monad", "word", "--cap", "2", "--samples", "3", "--max-points", "2")
        assert envelope.exit_code == 0
        assert envelope.report["metadata"]["checks"] == {"functor-laws": True, "monad-laws": True}

    def test_functor_laws_only(self, capsys):
        """Test that functor instances skip the monad laws."""
        envelope = run_json(capsys, "monad-laws", "--monad", "tensor_word", "--cap", "2", "--samples", "2")
        assert envelope.report["metadata"]["checks"] == {"functor-laws": True}

    @pytest.mark.parametrize(
        ("monad", "prop", "expected"),
        [
            ("tensor_word", "enriched", 1),
            ("word", "enriched", 0),
            ("binary_partial_terms", "surjections", 1),
            ("quasi_discrete_reflection", "surjections", 0),
        ],
    )
    def test_default_spaces(self, monad, prop, expected, capsys):
        """Test the built-in example spaces of each property."""
        assert run(["monad-check", "--monad", monad, "--cap", "2", "--property", prop]) == expected

    def test_directed_colimit(self, capsys):
        """Test the dyadic chain for the quasi-discrete reflection and for words."""
        args = ["monad-check", "--property", "directed-colimit", "--chain", "dyadic:3"]
        assert run([*args, "--monad", "quasi_discrete_reflection"]) == 1
        assert run([*args, "--monad", "word", "--cap", "2"]) == 0

    def test_precongruence_from_file(self, capsys):
        """Test that the run directive selects the space."""
        args = ["monad-check", data("precongruence.qalg"), "--property", "precongruence"]
        assert run([*args, "--monad", "quasi_discrete_reflection"]) == 1
        assert run([*args, "--monad", "finite_hausdorff", "--cap", "2"]) == 0

    def test_enriched_from_file(self, capsys):
        """Test --left and --right naming spaces of a file."""
        args = ["monad-check", data("enrichment.qalg"), "--property", "enriched", "--left", "One", "--right", "Two"]
        envelope = run_json(capsys, *args, "--monad", "tensor_word", "--cap", "4")
        assert envelope.exit_code == 1
        assert envelope.report["witnesses"][0]["data"]["lifted_distance"] == "4"

    def test_unknown_monad(self, capsys):
        """Test that unknown instances are input errors."""
        assert run(["monad-check", "--monad", "powerset", "--property", "enriched"]) == 2
        assert "unknown monad" in capsys.readouterr().err


class TestSpaceCommands:
    """Tests for hausdorff, colimit and enumerate-terms."""

    def test_hausdorff(self, capsys):
        """Test the distance and the bound."""
        envelope = run_json(capsys, "hausdorff", data("hausdorff.qalg"), "--left", "a", "--right", "b,c")
        assert envelope.exit_code == 0
        assert envelope.report["metadata"]["distance"] == "3"
        assert run(["hausdorff", data("hausdorff.qalg"), "--left", "a", "--right", "b,c", "--bound", "2"]) == 1

    def test_colimit_of_named_chain(self, capsys):
        """Test a chain of isometric inclusions."""
        envelope = run_json(capsys, "colimit", data("chain.qalg"), "--chain", "C0,C1,C2")
        assert envelope.exit_code == 0
        metadata = envelope.report["metadata"]
        assert metadata["points"] == ["p", "q", "r", "s"]
        assert metadata["distances"]["q,s"] == "3/4"
        assert metadata["trajectories"]["p,q"] == ["2", "2", "2"]

    def test_colimit_of_dyadic_chain(self, capsys):
        """Test the built-in chain without a file."""
        envelope = run_json(capsys, "colimit", "--chain", "dyadic:2")
        assert envelope.report["metadata"]["trajectories"]["-1,1"] == ["2", "2", "2"]

    def test_enumerate_terms(self, capsys):
        """Test the term listing of the binary partial signature."""
        envelope = run_json(capsys, "enumerate-terms", data("binary_partial.qalg"), "--depth", "1")
        assert envelope.exit_code == 0
        assert envelope.report["count"] == 7
        assert envelope.report["signature"] == ["bin/2", "s/0"]

    def test_budget_exceeded(self, capsys):
        """Test exit code 3 when an enumeration budget is hit."""
        assert run(["enumerate-terms", data("binary_partial.qalg"), "--depth", "3", "--budget", "10"]) == 3
        assert "Budget exceeded" in capsys.readouterr().err


class TestPresentationFromMonad:
    """Tests for printing a monad's presentation."""

    def test_listing_parses(self, capsys):
        """Test that the printed presentation is a valid document."""
        envelope = run_json(
            capsys, "presentation-from-monad", "--monad", "word", "--cap", "2", "--n-max", "1", "--size-cap", "8"
        )
        assert envelope.exit_code == 0
        assert envelope.report["symbols"] == 4
        doc = parse(envelope.report["text"])
        assert doc.presentation("from-word").equations


class TestErrors:
    """Tests for exit code 2."""

    @pytest.mark.parametrize("path", sorted((DATA / "bad").glob("*.qalg")), ids=lambda p: p.stem)
    def test_bad_files(self, path, capsys):
        """Test that malformed files exit with 2 and a position."""
        assert run(["check-sat", str(path), "--algebra", "A", "--presentation", "P"]) == 2
        assert "Error:" in capsys.readouterr().err

    def test_diagnostic_in_envelope(self, capsys):
        """Test the parse diagnostic in JSON mode."""
        envelope = run_json(capsys, "check-sat", data("bad/decimal.qalg"))
        assert envelope.exit_code == 2
        assert envelope.report["diagnostic"]["line"] == 4
        assert envelope.report["diagnostic"]["expected"] == ["DIST"]

    def test_missing_file_argument(self, capsys):
        """Test that file-based commands need a file."""
        assert run(["check-sat"]) == 2
        assert "needs a .qalg file" in capsys.readouterr().err

    def test_missing_selector(self, capsys):
        """Test that a file without a matching directive needs explicit names."""
        assert run(["check-sat", data("chain.qalg")]) == 2
        assert "needs --algebra" in capsys.readouterr().err


def dig(report, path):
    for key in path:
        report = report[key]
    return report


GOLDEN = [
    (("check-sat", data("z2_monoid.qalg")), 0, ("holds",), True),
    (("check-sat", data("left_projection.qalg")), 1, ("results", 0, "distance"), "1"),
    (("check-sat", data("bad/decimal.qalg")), 2, ("diagnostic", "line"), 4),
    (("free", data("dyadic.qalg")), 0, ("distances", 0, 1), "5/4"),
    (("free", data("almost_commutative.qalg"), "--depth", "1", "--oracle", "word"), 1,
     ("metadata", "checks", 1, "witnesses", 0, "kind"), "distance"),
    (("free", data("almost_commutative.qalg"), "--presentation", "Nope"), 2,
     ("error",), "no presentation named 'Nope'; defined: AlmostComm"),
    (("reflect", data("reflect.qalg")), 0, (0, "reflected"), "x =[3] z"),
    (("reflect", data("semilattice.qalg"), "--presentation", "Semilattice"), 2,
     ("error",), "no hypothesis-list equation to reflect"),
    (("monad-laws", "--monad", "word", "--cap", "2", "--samples", "2", "--max-points", "2"), 0,
     ("metadata", "checks", "monad-laws"), True),
    (("monad-laws", "--monad", "powerset"), 2, ("error",), None),
    (("monad-check", "--monad", "word", "--cap", "2", "--property", "enriched"), 0, ("check",), "enriched"),
    (("monad-check", "--monad", "tensor_word", "--cap", "2", "--property", "enriched"), 1,
     ("witnesses", 0, "data", "lifted_distance"), "2"),
    (("monad-check", "--monad", "powerset", "--property", "enriched"), 2, ("error",), None),
    (("hausdorff", data("hausdorff.qalg"), "--left", "a", "--right", "b,c"), 0, ("metadata", "distance"), "3"),
    (("hausdorff", data("hausdorff.qalg"), "--left", "a", "--right", "b,c", "--bound", "2"), 1,
     ("witnesses", 0, "kind"), "exceeds-bound"),
    (("hausdorff", data("hausdorff.qalg"), "--left", "a", "--right", "z"), 2, ("error",), "unknown point 'z'"),
    (("colimit", "--chain", "dyadic:1"), 0, ("metadata", "trajectories", "-1,1"), ["2", "2"]),
    (("colimit", "--chain", "C0,C1"), 2, ("error",), "a chain of named spaces needs a file"),
    (("enumerate-terms", data("binary_partial.qalg"), "--depth", "1"), 0, ("count",), 7),
    (("enumerate-terms",), 2, ("error",), "enumerate-terms needs a .qalg file"),
    (("presentation-from-monad", "--monad", "word", "--cap", "2", "--n-max", "1", "--size-cap", "8"), 0,
     ("symbols",), 4),
    (("presentation-from-monad", "--monad", "powerset"), 2, ("error",), None),
]


class TestGoldenEnvelopes:
    """Tests pinning the JSON envelope of every command for each exit code it can produce."""

    @pytest.mark.parametrize(("argv", "code", "path", "expected"), GOLDEN)
    def test_envelope(self, argv, code, path, expected, capsys):
        """Test the exit code and one key field of the printed envelope."""
        envelope = run_json(capsys, *argv)
        assert envelope.schema_version == "1"
        assert envelope.command == argv[0]
        assert envelope.exit_code == code
        value = dig(envelope.report, path)
        if expected is None:
            assert value.startswith("unknown monad 'powerset'")
        else:
            assert value == expected
