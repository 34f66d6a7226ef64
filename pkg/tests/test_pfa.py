import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import rand_stochastic
from pfakit.diophantine import build_base_matrix
from pfakit.fixtures import quadratic_example, exponential_example
from pfakit.linalg import QMatrix, QVector, identity
from pfakit.pfa import (
    PFA,
    Evaluator,
    LanguageSpec,
    UnknownLetter,
    accept_prob,
    collision_search,
    complement,
    cutpoint_search,
    enumerate_words,
    format_word,
    is_commutative_pfa,
    normalize_relation,
    parse_word,
    state_distribution,
    validate_pfa,
)

H = Fraction(1, 2)


def unary(rows, x, y):
    return PFA(("a",), QVector(x), {"a": QMatrix.from_rows(rows)}, QVector(y))


def test_exponential_example_values():
    p = exponential_example()
    assert validate_pfa(p) == []
    assert accept_prob(p, ("a",)) == H
    assert accept_prob(p, ("a", "a")) == Fraction(1, 4)
    assert accept_prob(p, ()) == 0


def test_validation_failures():
    p = unary([[H, H], [1, 0]], [H, Fraction(1, 4)], [0, 1])
    assert any("3/4" in d for d in validate_pfa(p))
    q = PFA(("a",), [1, 0, 0], {"a": QMatrix.from_rows([[Fraction(2, 3), Fraction(2, 3), Fraction(-1, 3)], [0, 1, 0], [0, 0, 1]])}, [0, 0, 1])
    assert any("negative" in d for d in validate_pfa(q))
    r = unary([[1]], [1], [2])
    assert validate_pfa(r)


def test_shape_errors():
    with pytest.raises(ValueError):
        PFA(("a",), [1, 0], {"a": identity(3)}, [0, 1])
    with pytest.raises(ValueError):
        PFA(("a", "a"), [1], {"a": identity(1)}, [1])


def test_unknown_letter():
    with pytest.raises(UnknownLetter):
        accept_prob(exponential_example(), ("b",))


def test_complement():
    p = exponential_example()
    c = complement(p)
    assert complement(c) == p
    assert accept_prob(c, ("a",)) == 1 - accept_prob(p, ("a",))
    allfinal = unary([[1]], [1], [1])
    assert accept_prob(complement(allfinal), ("a", "a")) == 0


def test_commutativity():
    assert is_commutative_pfa(exponential_example())
    assert not is_commutative_pfa(quadratic_example())
    half = lambda m: m.scale(H)
    a0, a1 = half(build_base_matrix(2, 0, False)), half(build_base_matrix(2, 1, False))
    n = a0.rows
    p = PFA(("0", "1"), QVector.basis(n, 0), {"0": a0, "1": a1}, QVector.basis(n, n - 1))
    assert validate_pfa(p) == [] and not is_commutative_pfa(p)


def test_language_enumeration_order():
    as_text = lambda ws: ["".join(w) or "ε" for w in ws]
    assert as_text(enumerate_words(LanguageSpec.monotonic(["1", "2"]), 2)) == ["ε", "1", "2", "11", "12", "22"]
    assert as_text(enumerate_words(LanguageSpec.bounded([("a", "b"), ("c",)]), 3)) == ["ε", "c", "ab", "cc", "abc", "ccc"]
    assert as_text(enumerate_words(LanguageSpec.full(["a"]), 2)) == ["ε", "a", "aa"]


def test_choice_language():
    lang = LanguageSpec.choices([("b1", "a1"), ("b2", "a2")])
    words = list(enumerate_words(lang, 10))
    assert words == [("b1", "b2"), ("b1", "a2"), ("a1", "b2"), ("a1", "a2")]
    assert lang.contains(("a1", "b2")) and not lang.contains(("a1",))
    assert lang.max_fixed_length() == 2


def test_language_invariants():
    with pytest.raises(ValueError):
        LanguageSpec("letter-monotonic", ((("a", "b"),),), (True,))
    with pytest.raises(ValueError):
        LanguageSpec("bounded", ((("a",), ("b",)),), (True,))
    with pytest.raises(ValueError):
        LanguageSpec("nonsense", (), ())


@pytest.mark.parametrize(
    "lang",
    [
        LanguageSpec.monotonic(["1", "2", "3"]),
        LanguageSpec.bounded([("a", "b"), ("b",), ("a", "a", "c")]),
        LanguageSpec.bounded([("a", "b"), ("a",)]),
        LanguageSpec.full(["a", "b"]),
        LanguageSpec.choices([("b1", "a1"), ("b2", "a2"), ("b3", "a3")]),
        LanguageSpec("bounded", ((("a",),), (("b",), ("c", "c")), (("a",),)), (True, False, True)),
    ],
)
def test_enumeration_matches_membership(lang):
    # Exactly the members up to the bound, once each, shortest first.
    letters = lang.letters()
    words = list(enumerate_words(lang, 5))
    assert len(words) == len(set(words))
    assert [len(w) for w in words] == sorted(len(w) for w in words)
    assert all(lang.contains(w) for w in words)
    brute = set()
    frontier = [()]
    for _ in range(5):
        frontier = [w + (a,) for w in frontier for a in letters]
        brute |= {w for w in frontier if len(w) <= 5 and lang.contains(w)}
    if lang.contains(()):
        brute.add(())
    assert brute == set(words)


def test_cutpoint_search_examples():
    p = exponential_example()
    assert cutpoint_search(p, 0, "ge", LanguageSpec.full(["a"]), 3) == ()
    assert cutpoint_search(p, Fraction(1, 4), "gt", LanguageSpec.bounded([("a", "a")]), 6) == ("a",) * 4
    assert cutpoint_search(p, 1, "gt", LanguageSpec.full(["a"]), 6) is None
    with pytest.raises(ValueError):
        cutpoint_search(p, 0, "eq", LanguageSpec.full(["a"]), 3)


def test_collision_search_constant_pfa():
    p = unary([[1]], [1], [1])
    assert collision_search(p, LanguageSpec.full(["a"]), 1) == ((), ("a",))
    assert collision_search(p, LanguageSpec.full(["a"]), 0) is None


def test_relation_aliases():
    assert [normalize_relation(r) for r in ("lt", "le", "gt", "ge")] == ["<", "<=", ">", ">="]


def test_word_text_round_trip():
    assert format_word(()) == "ε"
    assert format_word(("1", "1", "1")) == "1^3"
    assert format_word(("a1", "a2", "b3")) == "a1 a2 b3"
    assert parse_word("1^3 2", ["1", "2"]) == ("1", "1", "1", "2")
    assert parse_word("h1 g12", ["h1", "g1", "g12"]) == ("h1", "g12")
    with pytest.raises(UnknownLetter):
        parse_word("x", ["a"])
    for w in [("a1",) * 3 + ("b2",), ("z", "y", "y")]:
        assert parse_word(format_word(w), sorted(set(w))) == w


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.lists(st.sampled_from("ab"), max_size=7))
def test_evaluator_matches_direct_products(seed, w):
    rng = random.Random(seed)
    n = rng.randint(1, 4)
    p = PFA(
        ("a", "b"),
        rand_stochastic(rng, n).row(0),
        {"a": rand_stochastic(rng, n), "b": rand_stochastic(rng, n)},
        QVector([rng.randint(0, 1) for _ in range(n)]),
    )
    assert validate_pfa(p) == []
    ev = Evaluator(p)
    assert ev(tuple(w)) == accept_prob(p, w)
    assert state_distribution(p, w).total() == 1
    assert 0 <= ev(tuple(w)) <= 1
