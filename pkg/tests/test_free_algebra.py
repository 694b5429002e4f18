"""Tests for depth-bounded free algebras and their certification checks."""

import itertools
import random
import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from quantitative_algebra_workbench.algebras import QuantAlgebra, word_algebra
from quantitative_algebra_workbench.equations import (
    BasicEquation,
    Presentation,
    almost_commutative_presentation,
    almost_small_presentation,
    commutative_monoid_presentation,
    monoid_presentation,
    quasi_discrete_presentation,
    semilattice_presentation,
)
from quantitative_algebra_workbench.errors import InputError
from quantitative_algebra_workbench.free_algebra import (
    compare_with_oracle,
    free_algebra,
    free_algebra_report,
    stability_check,
    universal_property_check,
    verify_fixed_point,
)
from quantitative_algebra_workbench.metric import INF, MetricSpace, PseudometricSpace, check_metric_axioms
from quantitative_algebra_workbench.monads import dyadic_chain, get_monad, random_space
from quantitative_algebra_workbench.terms import App, Signature, Var, binary_partial_signature, monoid_signature

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)


def mul(a, b):
    return App("mul", (a, b))


def join(a, b):
    return App("join", (a, b))


X, Y = Var("x"), Var("y")


def doubled(d):
    return d if d is INF else 2 * d


def generator_pair(delta):
    """Generators x, y at distance ``delta`` (0 gives a pseudometric)."""
    return PseudometricSpace.from_pairs(["x", "y"], {("x", "y"): delta})


class TestAlmostCommutative:
    """Tests for the free almost commutative monoid."""

    @pytest.mark.parametrize("delta", [0, QUARTER, HALF, 1, 2, INF])
    @pytest.mark.parametrize("eps", [0, QUARTER, HALF, 1, 2])
    def test_swap_distance_is_min_of_delta_and_eps(self, delta, eps):
        """Test d(xy, yx) = min(d(x, y), eps)."""
        approx = free_algebra(almost_commutative_presentation(eps), generator_pair(delta), 1)
        assert approx.distance(mul(X, Y), mul(Y, X)) == min(delta, eps)

    def test_commutative_case_merges_classes(self):
        """Test that eps = 0 identifies xy and yx."""
        approx = free_algebra(almost_commutative_presentation(0), generator_pair(1), 2)
        assert approx.class_of(mul(X, Y)) == approx.class_of(mul(Y, X))
        assert approx.class_of(mul(X, App("unit"))) == X

    def test_fixed_point_holds(self):
        """Test that the computed distances pass the closure re-check."""
        approx = free_algebra(almost_commutative_presentation(HALF), generator_pair(1), 1)
        report = verify_fixed_point(approx)
        assert report.holds, report.witnesses

    def test_proposed_distances_checked(self):
        """Test that shrinking a distance below a generator bound is caught."""
        approx = free_algebra(almost_commutative_presentation(HALF), generator_pair(1), 1)
        reps = approx.representatives
        bad = MetricSpace.from_function(
            reps, lambda p, q: doubled(approx.pseudo.d(p, q)), validate=False
        )
        report = verify_fixed_point(approx, bad)
        assert not report.holds
        assert "generator-bound" in report.witness_kinds()

    def test_unit_and_report(self):
        """Test the unit map and the serialized report."""
        approx = free_algebra(almost_commutative_presentation(HALF), generator_pair(1), 1)
        assert approx.unit("x") == X
        report = free_algebra_report(approx)
        assert report.generators == ["x", "y"]
        assert report.representatives[:2] == ["x", "y"]
        assert report.partial is True
        assert report.classes == len(approx)
        i = report.representatives.index("mul(x, y)")
        j = report.representatives.index("mul(y, x)")
        assert report.distances[i][j] == "1/2"

    def test_unrepresented_term(self):
        """Test that terms deeper than the bound have no class."""
        approx = free_algebra(almost_commutative_presentation(HALF), generator_pair(1), 1)
        with pytest.raises(InputError) as exc_info:
            approx.class_of(mul(mul(X, Y), X))
        assert "not represented" in str(exc_info.value)

    def test_stability(self):
        """Test that one more level leaves the depth-1 distances unchanged."""
        approx = free_algebra(almost_commutative_presentation(HALF), generator_pair(1), 1)
        report = stability_check(approx)
        assert report.holds
        assert report.metadata["stable_pairs"] == report.metadata["pairs"]
        assert all(all(row) for row in approx.exact)


class TestUniversalProperty:
    """Tests for the universal property check."""

    def test_commutative_target(self):
        """Test extension into Z2, which is commutative."""
        approx = free_algebra(almost_commutative_presentation(HALF), generator_pair(1), 1)
        carrier = MetricSpace.from_pairs(["e", "g"], {("e", "g"): 1})
        z2 = QuantAlgebra.from_operations(
            monoid_signature(), carrier, {"mul": lambda a, b: "e" if a == b else "g", "unit": lambda: "e"}
        )
        report = universal_property_check(approx, z2, {"x": "e", "y": "g"})
        assert report.holds, report.witnesses
        assert report.metadata["extension"]["mul(x, y)"] == "g"

    def test_target_outside_variety(self):
        """Test that words with distinct letters at distance 1 are not almost commutative at 1/2."""
        approx = free_algebra(almost_commutative_presentation(HALF), generator_pair(1), 1)
        words = word_algebra(MetricSpace.from_pairs(["a", "b"], {("a", "b"): 1}), 2)
        report = universal_property_check(approx, words, {"x": ("a",), "y": ("b",)})
        assert not report.holds
        assert report.witness_kinds() == ["precondition"]


class TestQuasiDiscrete:
    """Tests for the free quasi-discrete space on the dyadic chain stages."""

    @pytest.mark.parametrize("n", range(7))
    def test_two_classes(self, n):
        """Test that {-1} u {2^-i : i <= n} collapses to two points at 1 + 2^-n."""
        chain, _ = dyadic_chain(n)
        approx = free_algebra(quasi_discrete_presentation(), chain[-1], 0)
        assert len(approx) == 2
        assert approx.distance(Var("-1"), Var("1")) == 1 + Fraction(1, 2 ** n)
        assert approx.class_of(Var(chain[-1].points[-1])) == Var("1")


class TestConvergence:
    """Tests for the distance fixed point on basic equations."""

    @pytest.mark.parametrize("eps, expected", [(0, 0), (HALF, HALF), (1, 1), (2, 1)])
    def test_two_generators_almost_small(self, eps, expected):
        """Test that x =[eps] y pulls two generators at distance 1 down to min(1, eps)."""
        approx = free_algebra(almost_small_presentation(eps), generator_pair(1), 0)
        assert approx.distance(X, Y) == expected
        assert verify_fixed_point(approx).holds

    def test_chained_bounds_need_two_passes(self):
        """Test that a bound enabled by an earlier lowering is applied on a later pass."""
        near = MetricSpace.from_pairs(["x", "y"], {("x", "y"): HALF})
        far = MetricSpace.from_pairs(["x", "y"], {("x", "y"): 1})
        presentation = Presentation(Signature(), [
            BasicEquation(near, X, Y, QUARTER),
            BasicEquation(far, X, Y, HALF),
        ])
        approx = free_algebra(presentation, generator_pair(1), 0)
        assert approx.distance(X, Y) == QUARTER
        assert approx.metadata["passes"] == 2


class TestSemilattice:
    """Tests for free semilattices against the finite Hausdorff monad."""

    @pytest.fixture
    def path(self):
        return MetricSpace.from_pairs(
            ["a", "b", "c"], {("a", "b"): 1, ("b", "c"): HALF, ("a", "c"): 1}
        )

    def test_classes_are_subsets(self, path):
        """Test that there is one class per finite subset."""
        approx = free_algebra(semilattice_presentation(), path, 3)
        assert len(approx) == 8
        assert approx.distance(join(Var("a"), Var("b")), join(Var("b"), Var("a"))) == 0
        assert approx.distance(Var("a"), App("zero")) is INF

    def test_matches_hausdorff_oracle(self, path):
        """Test the computed distances against the Hausdorff metric."""
        approx = free_algebra(semilattice_presentation(), path, 3)
        report = compare_with_oracle(approx, get_monad("finite_hausdorff", cap=3))
        assert report.holds, report.witnesses
        assert approx.exactness_flag

    def test_wrong_oracle_reported(self, path):
        """Test that comparing against an unrelated oracle fails."""
        approx = free_algebra(commutative_monoid_presentation(), path, 1)
        report = compare_with_oracle(approx, get_monad("finite_hausdorff", cap=3))
        assert not report.holds
        assert not approx.exactness_flag


class TestOracleSurjectivity:
    """Tests that oracle comparison covers every reachable oracle element."""

    def test_monoid_matches_words(self):
        """Test that the free monoid at depth 1 hits every word of length at most 2."""
        approx = free_algebra(monoid_presentation(), generator_pair(1), 1)
        report = compare_with_oracle(approx, get_monad("word", cap=2))
        assert report.holds, report.witnesses
        assert report.metadata["reachable"] == 7
        assert report.metadata["classes"] == 7

    def test_collapsed_classes_miss_words(self):
        """Test that merging xy with yx leaves the word yx without a class."""
        approx = free_algebra(commutative_monoid_presentation(), generator_pair(1), 1)
        report = compare_with_oracle(approx, get_monad("word", cap=2))
        assert not report.holds
        assert "not-surjective" in report.witness_kinds()
        assert not approx.exactness_flag

    def test_reachable_subsets_counted(self):
        """Test that all eight subsets of three points are reachable within depth 3."""
        space = MetricSpace.from_pairs(["a", "b", "c"], {("a", "b"): 1, ("b", "c"): HALF, ("a", "c"): 1})
        approx = free_algebra(semilattice_presentation(), space, 3)
        report = compare_with_oracle(approx, get_monad("finite_hausdorff", cap=3))
        assert report.metadata["reachable"] == 8


class TestArguments:
    """Tests for argument validation."""

    def test_generalized_signature(self):
        """Test that metric arities are refused."""
        presentation = Presentation(binary_partial_signature(), [])
        with pytest.raises(InputError):
            free_algebra(presentation, generator_pair(1), 1)

    def test_negative_depth(self):
        """Test that the depth must be non-negative."""
        with pytest.raises(InputError):
            free_algebra(almost_commutative_presentation(HALF), generator_pair(1), -1)


@pytest.mark.slow
class TestAcceptance:
    """Exhaustive sweeps over small generator spaces."""

    @pytest.mark.parametrize("delta", [0, QUARTER, HALF, 1, 2])
    @pytest.mark.parametrize("eps", [0, QUARTER, HALF, 1, 2])
    def test_swap_distance_at_depth_three(self, delta, eps):
        """Test the closed form for the swap distance at depth 3."""
        approx = free_algebra(almost_commutative_presentation(eps), generator_pair(delta), 3)
        assert approx.distance(mul(X, Y), mul(Y, X)) == min(delta, eps)

    @pytest.mark.parametrize("size", [1, 2, 3, 4])
    def test_semilattice_matches_hausdorff(self, size):
        """Test free semilattices on up to four points at depth 4."""
        points = [f"p{i}" for i in range(size)]
        space = MetricSpace.from_function(
            points, lambda p, q: Fraction(abs(int(p[1:]) - int(q[1:])), 2), validate=False
        )
        approx = free_algebra(semilattice_presentation(), space, 4)
        assert len(approx) == 2 ** size
        assert compare_with_oracle(approx, get_monad("finite_hausdorff", cap=size)).holds

    @staticmethod
    def small_metric_spaces():
        """Every metric space on at most three points with distances in {1/4, 1/2, 1, 2}."""
        values = (QUARTER, HALF, 1, 2)
        for size in (1, 2, 3):
            points = [f"p{i}" for i in range(size)]
            pairs = list(itertools.combinations(points, 2))
            for choice in itertools.product(values, repeat=len(pairs)):
                space = MetricSpace.from_pairs(points, dict(zip(pairs, choice)), validate=False)
                if not check_metric_axioms(space):
                    yield space

    def test_semilattice_matches_hausdorff_on_all_small_spaces(self):
        """Test the free semilattice against the Hausdorff metric on every small space."""
        checked = 0
        for space in self.small_metric_spaces():
            approx = free_algebra(semilattice_presentation(), space, 4)
            assert len(approx) == 2 ** len(space.points)
            report = compare_with_oracle(approx, get_monad("finite_hausdorff", cap=len(space.points)))
            assert report.holds, (space.rows, report.witnesses)
            checked += 1
        assert checked == 36

    @pytest.mark.parametrize("seed", range(10))
    def test_semilattice_matches_hausdorff_on_random_spaces(self, seed):
        """Test the free semilattice against the Hausdorff metric on seeded spaces of up to four points."""
        space = random_space(random.Random(seed), max_points=4, distances=(QUARTER, HALF, 1, 2))
        approx = free_algebra(semilattice_presentation(), space, 4)
        assert len(approx) == 2 ** len(space.points)
        assert compare_with_oracle(approx, get_monad("finite_hausdorff", cap=len(space.points))).holds
