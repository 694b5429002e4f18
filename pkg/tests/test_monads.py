"""Tests for the monad instances and their property checkers."""

import itertools
import random
import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from quantitative_algebra_workbench.errors import EvaluationError, InputError
from quantitative_algebra_workbench.metric import INF, MetricSpace, NonexpandingMap, check_metric_axioms
from quantitative_algebra_workbench.monads import (
    AlmostCommutativeMonad,
    WordMonad,
    check_directed_colimit_preservation,
    check_enriched,
    check_functor_laws,
    check_monad_laws,
    check_precongruence_preservation,
    check_preserves_surjections,
    dyadic_chain,
    get_monad,
    lifted_distances,
    monad_names,
    quasi_discrete_classes,
    random_space,
)
from quantitative_algebra_workbench.terms import App, Var

HALF = Fraction(1, 2)


def pair(distance, points=("a", "b")) -> MetricSpace:
    return MetricSpace.from_pairs(points, {points: distance})


@pytest.fixture
def path3():
    """a - b - c with unit steps."""
    return MetricSpace.from_pairs(["a", "b", "c"], {("a", "b"): 1, ("b", "c"): 1, ("a", "c"): 2})


@pytest.fixture
def small_spaces():
    rng = random.Random(7)
    return [random_space(rng, max_points=3) for _ in range(4)]


class LossyWordMonad(WordMonad):
    """Words whose multiplication drops the last letter."""

    def join(self, element, space):
        flat = tuple(itertools.chain.from_iterable(element))
        return flat[:-1]


class TestRegistry:
    """Tests for looking instances up by name."""

    def test_names(self):
        """Test that every instance is registered."""
        assert monad_names() == [
            "almost_commutative",
            "binary_partial_terms",
            "commutative_word",
            "finite_hausdorff",
            "quasi_discrete_reflection",
            "tensor_word",
            "word",
        ]

    def test_parameter_in_name(self):
        """Test that name:param passes eps."""
        monad = get_monad("almost_commutative:1/4", cap=2)
        assert isinstance(monad, AlmostCommutativeMonad)
        assert monad.eps == Fraction(1, 4)

    def test_unknown_name(self):
        """Test that unknown names list the known ones."""
        with pytest.raises(InputError) as exc_info:
            get_monad("powerset")
        assert "finite_hausdorff" in str(exc_info.value)

    def test_almost_commutative_needs_positive_eps(self):
        """Test that eps = 0 is refused."""
        with pytest.raises(InputError):
            get_monad("almost_commutative:0")


class TestInstances:
    """Tests for the elementwise operations of each instance."""

    def test_word_metric(self):
        """Test letterwise distances and length mismatch."""
        words = get_monad("word", cap=2)
        space = pair(HALF)
        assert len(words.elements(space)) == 7
        assert words.distance(space, ("a", "b"), ("b", "b")) == HALF
        assert words.distance(space, ("a",), ("a", "a")) is INF
        assert words.join((("a",), (), ("b", "a")), space) == ("a", "b", "a")

    def test_commutative_word_metric(self):
        """Test that multisets take the best pairing."""
        bags = get_monad("commutative_word", cap=2)
        space = MetricSpace.from_pairs(["a", "b", "c"], {("a", "b"): 1, ("b", "c"): HALF, ("a", "c"): 1})
        assert bags.distance(space, ("a", "b"), ("a", "c")) == HALF
        assert bags.join((("b",), ("a",)), space) == ("a", "b")
        assert len(bags.elements(space)) == 10

    def test_hausdorff_elements(self):
        """Test finite subsets including the empty set."""
        subsets = get_monad("finite_hausdorff", cap=2)
        space = pair(1)
        assert len(subsets.elements(space)) == 4
        assert subsets.distance(space, frozenset(), frozenset({"a"})) is INF
        assert subsets.join(frozenset({frozenset({"a"}), frozenset({"b"})}), space) == frozenset({"a", "b"})

    def test_quasi_discrete_classes(self, path3):
        """Test the collapse of points within distance 1."""
        classes, collapsed = quasi_discrete_classes(path3)
        assert classes == [frozenset({"a", "b", "c"})]
        spread = MetricSpace.from_pairs(["a", "b"], {("a", "b"): 2})
        classes, collapsed = quasi_discrete_classes(spread)
        assert len(classes) == 2
        assert collapsed.d("a", "b") == 2

    def test_almost_commutative_swap(self):
        """Test d(xy, yx) = min(d(x, y), eps) read off the free algebra."""
        monad = get_monad("almost_commutative:1/2", cap=2)
        assert monad.distance(pair(1), ("a", "b"), ("b", "a")) == HALF
        assert monad.distance(pair(Fraction(1, 4)), ("a", "b"), ("b", "a")) == Fraction(1, 4)
        assert monad.distance(pair(1), ("a",), ("a", "b")) is INF

    def test_evaluate(self):
        """Test reading terms through the instance's operations."""
        words = get_monad("word")
        term = App("mul", (Var("a"), App("mul", (App("unit"), Var("b")))))
        assert words.evaluate(term, pair(1)) == ("a", "b")
        with pytest.raises(EvaluationError):
            words.evaluate(App("join", (Var("a"), Var("b"))), pair(1))

    def test_functor_has_no_unit(self):
        """Test that functor instances refuse unit and multiplication."""
        tensor = get_monad("tensor_word")
        assert not tensor.is_monad
        with pytest.raises(EvaluationError):
            tensor.unit_element("a", pair(1))

    def test_on_space_is_a_metric_space(self):
        """Test that T M is a valid metric space for every monad."""
        space = pair(HALF)
        for name in ("word", "commutative_word", "finite_hausdorff", "quasi_discrete_reflection"):
            tm = get_monad(name, cap=2).on_space(space)
            assert check_metric_axioms(tm) == [], name

    def test_random_space(self):
        """Test that random spaces are seeded metric spaces."""
        first = random_space(random.Random(3))
        again = random_space(random.Random(3))
        assert first == again
        assert check_metric_axioms(first) == []


class TestLaws:
    """Tests for the functor and monad law checkers."""

    @pytest.mark.parametrize("name", ["word", "commutative_word", "finite_hausdorff", "quasi_discrete_reflection"])
    def test_monad_laws_hold(self, name, small_spaces):
        """Test the laws on small random spaces."""
        report = check_monad_laws(get_monad(name, cap=2), small_spaces, law_cap=2, limit=300)
        assert report.holds, report.witnesses[:3]
        assert report.metadata["law_cap"] == 2

    @pytest.mark.parametrize("name", ["word", "tensor_word", "binary_partial_terms", "finite_hausdorff"])
    def test_functor_laws_hold(self, name, small_spaces):
        """Test identity and composition on every instance."""
        report = check_functor_laws(get_monad(name, cap=2), small_spaces[:3], map_limit=4)
        assert report.holds

    def test_broken_multiplication_detected(self):
        """Test that a lossy multiplication breaks associativity."""
        report = check_monad_laws(LossyWordMonad(cap=2), [MetricSpace.discrete(["p"])], law_cap=2, limit=300)
        assert not report.holds
        assert "associativity" in report.witness_kinds()
        assert "left-unit" in report.witness_kinds()

    def test_functor_rejected(self, small_spaces):
        """Test that monad laws need a monad."""
        with pytest.raises(InputError):
            check_monad_laws(get_monad("tensor_word"), small_spaces)


class TestEnrichment:
    """Tests for the enrichment check."""

    def test_tensor_word_is_not_enriched(self):
        """Test that summing letter distances makes d(Tf, Tg) grow with word length."""
        tensor = get_monad("tensor_word", cap=8)
        one, two = MetricSpace.discrete(["o"]), pair(1)
        f = NonexpandingMap(one, two, {"o": "a"})
        g = NonexpandingMap(one, two, {"o": "b"})
        for word, d in lifted_distances(tensor, f, g):
            assert d == len(word)
        report = check_enriched(tensor, one, two)
        assert not report.holds
        assert report.witnesses[0].data["lifted_distance"] == "8"
        assert report.witnesses[0].data["map_distance"] == "1"

    @pytest.mark.parametrize("name", ["word", "commutative_word", "finite_hausdorff"])
    def test_enriched_monads(self, name):
        """Test that the max-metric instances are enriched."""
        report = check_enriched(get_monad(name, cap=3), MetricSpace.discrete(["o"]), pair(1))
        assert report.holds


class TestSurjections:
    """Tests for surjection preservation."""

    def test_binary_partial_terms_miss_new_pairs(self):
        """Test that bin(x, y) has no preimage once x and y come within 1."""
        dom = MetricSpace.discrete(["x", "y"])
        cod = pair(HALF, ("x", "y"))
        e = NonexpandingMap(dom, cod, {"x": "x", "y": "y"})
        report = check_preserves_surjections(get_monad("binary_partial_terms"), e)
        assert not report.holds
        assert "bin(x, y)" in [w.data["element"] for w in report.witnesses]

    def test_quasi_discrete_preserves_surjections(self):
        """Test the reflection on the same map."""
        dom = MetricSpace.discrete(["x", "y"])
        e = NonexpandingMap(dom, pair(HALF, ("x", "y")), {"x": "x", "y": "y"})
        assert check_preserves_surjections(get_monad("quasi_discrete_reflection"), e).holds

    def test_non_surjective_input(self):
        """Test that the map itself must be onto."""
        e = NonexpandingMap(MetricSpace.discrete(["x"]), pair(1), {"x": "a"})
        with pytest.raises(InputError):
            check_preserves_surjections(get_monad("word"), e)


class TestColimits:
    """Tests for precongruence and directed-colimit preservation."""

    def test_dyadic_chain(self):
        """Test the stages of the dyadic chain."""
        chain, maps = dyadic_chain(2)
        assert chain[2].points == ("-1", "1", "1/2", "1/4")
        assert chain[2].d("-1", "1/4") == Fraction(5, 4)
        assert all(f.is_isometric() for f in maps)

    def test_quasi_discrete_diverges(self):
        """Test that the reflection keeps shrinking the two-point images."""
        chain, maps = dyadic_chain(2)
        report = check_directed_colimit_preservation(get_monad("quasi_discrete_reflection"), chain, maps)
        assert not report.holds
        assert report.witness_kinds() == ["diverges", "diverges"]
        assert report.metadata["trajectories"]["{-1} ~ {1}"] == ["2", "3/2", "5/4"]

    def test_word_monad_keeps_distances(self):
        """Test that words along isometric inclusions stay isometric."""
        chain, maps = dyadic_chain(2)
        report = check_directed_colimit_preservation(get_monad("word", cap=2), chain, maps)
        assert report.holds
        assert report.metadata["stages"] == 3

    def test_precongruence_quasi_discrete_fails(self, path3):
        """Test that collapsed points have no witness over the diagonal."""
        report = check_precongruence_preservation(get_monad("quasi_discrete_reflection"), path3)
        assert not report.holds
        assert report.witness_kinds()[0] == "no-witness"
        assert report.metadata["criterion"] == "sufficient"

    @pytest.mark.parametrize("name", ["word", "commutative_word", "finite_hausdorff"])
    def test_precongruence_constructive(self, name, path3):
        """Test that pairing elements letter by letter gives witnesses."""
        report = check_precongruence_preservation(get_monad(name, cap=2), path3)
        assert report.holds
        assert report.metadata["constructive"] == report.metadata["pairs"]


@pytest.mark.slow
class TestAcceptance:
    """Seeded random sweeps of the law checkers."""

    @pytest.mark.parametrize("name", ["word", "commutative_word", "finite_hausdorff", "quasi_discrete_reflection"])
    def test_laws_on_random_spaces(self, name):
        """Test the monad laws on a hundred random spaces."""
        rng = random.Random(0)
        spaces = [random_space(rng, max_points=4) for _ in range(100)]
        assert check_monad_laws(get_monad(name, cap=3), spaces).holds


    @pytest.mark.parametrize("name", ["word", "commutative_word", "finite_hausdorff"])
    def test_enriched_on_a_grid_of_spaces(self, name):
        """Test enrichment for every pair from a grid of spaces with up to four points."""
        rng = random.Random(1)
        sources = [MetricSpace.discrete(["o"]), pair(HALF), pair(1), pair(INF)]
        sources += [random_space(rng, max_points=3) for _ in range(4)]
        targets = sources + [random_space(rng, max_points=4) for _ in range(4)]
        monad = get_monad(name, cap=2)
        for a in sources:
            for b in targets:
                if len(a) > 2 and len(b) > 3:
                    continue
                report = check_enriched(monad, a, b)
                assert report.holds, (a.rows, b.rows, report.witnesses[:1])

    @pytest.mark.parametrize("name", ["word", "commutative_word", "finite_hausdorff", "quasi_discrete_reflection"])
    @pytest.mark.parametrize("seed", range(10))
    def test_random_surjections_preserved(self, name, seed):
        """Test that random surjections onto random spaces stay surjective after lifting."""
        rng = random.Random(seed)
        cod = random_space(rng, max_points=3)
        extra = [f"q{i}" for i in range(rng.randint(0, 2))]
        dom = MetricSpace.discrete(list(cod.points) + extra)
        assignment = {p: p for p in cod.points}
        assignment.update({q: rng.choice(cod.points) for q in extra})
        monad = get_monad(name, cap=2)
        assert check_preserves_surjections(monad, NonexpandingMap(dom, cod, assignment)).holds
        stretched = MetricSpace.from_function(
            cod.points, lambda p, q: cod.d(p, q) if cod.d(p, q) is INF else 2 * cod.d(p, q), validate=False
        )
        identity = NonexpandingMap(stretched, cod, {p: p for p in cod.points})
        assert check_preserves_surjections(monad, identity).holds
