import itertools
import random
from fractions import Fraction

import pytest

from pfakit.ambiguity import classify
from pfakit.diophantine import (
    PolySyntaxError,
    binary_blocks,
    binary_encode,
    binary_word,
    build_base_matrix,
    build_term_wfa,
    closed_form_value,
    compile_pfa,
    eval_poly,
    exponent_tuples,
    exponent_word,
    geq_transform,
    homogenize,
    parse_poly,
    separation_report,
    square_poly,
    strict_epsilon,
    strict_transform,
    superdiagonal_position,
    z_power_is_identity,
)
from pfakit.linalg import QMatrix, commutes, is_upper_triangular, kron, matmul, matpow, row_sums
from pfakit.pfa import Evaluator, accept_prob, cutpoint_search, is_commutative_pfa, validate_pfa


def terms(text):
    return list(parse_poly(text).terms)


def test_parse_examples():
    assert terms("x1 - 3") == [(1, (0, 1)), (-3, (0, 0))]
    assert terms("x1*x2 - 6") == [(1, (0, 1, 1)), (-6, (0, 0, 0))]
    assert terms("2*x1^2 + x1^2") == [(3, (0, 2))]
    assert terms(" 2 * x1 ^ 2 * x2 - 7*x2 + 1 ") == [(2, (0, 2, 1)), (-7, (0, 0, 1)), (1, (0, 0, 0))]
    assert terms("-x2 + x2") == []
    assert parse_poly("x3").t == 3


@pytest.mark.parametrize("text,pos", [("x1 +", 4), ("x1 ** 2", 4), ("3 $ x1", 2), ("x1^-1", 3)])
def test_syntax_errors_carry_positions(text, pos):
    with pytest.raises(PolySyntaxError) as e:
        parse_poly(text)
    assert e.value.pos == pos


def test_x0_is_reserved():
    with pytest.raises(PolySyntaxError):
        parse_poly("x0 + 1")


def test_str_round_trip():
    for text in ["x1 - 3", "2*x1^2*x2 - 7*x2 + 1", "-x1*x3 + 4"]:
        p = parse_poly(text)
        assert parse_poly(str(p)) == p


def test_homogenize_and_square():
    h = homogenize(parse_poly("x1 - 3"))
    assert h.terms == ((-3, (1, 0)), (1, (0, 1)))
    assert homogenize(parse_poly("x1*x2 - 6")).terms == ((-6, (2, 0, 0)), (1, (0, 1, 1)))
    hom = parse_poly("x1*x2 + x2^2")
    assert homogenize(hom) == hom and hom.is_homogeneous
    sq = square_poly(h)
    assert sq.terms == ((9, (2, 0)), (-6, (1, 1)), (1, (0, 2)))
    assert eval_poly(sq, (1, 3)) == 0 and eval_poly(sq, (1, 1)) == 4
    with pytest.raises(ValueError):
        eval_poly(sq, (1, -1))
    with pytest.raises(ValueError):
        square_poly(parse_poly("x1 + 1"))


def test_squaring_matches_evaluation():
    rng = random.Random(3)
    for text in ["x1 - 3", "x1*x2 - 6", "2*x1^2*x2 - 7*x2 + 1", "x1 - x2 + x3"]:
        h = homogenize(parse_poly(text))
        sq = square_poly(h)
        for _ in range(20):
            xs = [1] + [rng.randint(0, 5) for _ in range(h.t)]
            assert eval_poly(sq, xs) == eval_poly(h, xs) ** 2


def test_base_matrix_fixture():
    assert build_base_matrix(1, 0, False) == QMatrix.from_rows([[1, 1, 0, 0], [0, 1, 0, 1], [0, 0, 1, 1], [0, 0, 0, 2]])
    for t in range(4):
        J = build_base_matrix(t, t + 1, False)
        assert all(J[r, r + 1] == 0 for r in range(t + 1))
        assert all(s == 2 for s in row_sums(J))


def test_base_matrix_powers():
    for t in range(4):
        for i in range(t + 1):
            for k in range(5):
                M = matpow(build_base_matrix(t, i, False), k)
                assert M[i, i + 1] == k
                assert all(s == 2**k for s in row_sums(M))


def test_commutation_pattern():
    a = [build_base_matrix(2, i, False) for i in range(4)]
    assert commutes(a[0], a[2]) and not commutes(a[0], a[1])
    emb = [build_base_matrix(2, i, True) for i in range(4)]
    assert all(commutes(x, y) for x, y in itertools.combinations(emb, 2))
    assert emb[0].rows == 7 and superdiagonal_position(1) == (2, 3)


def test_term_automata():
    sq = square_poly(homogenize(parse_poly("x1 - 3")))
    t9 = build_term_wfa(sq, 0)
    A0, J = build_base_matrix(1, 0), build_base_matrix(1, 2)
    assert t9.X[0] == kron(A0, A0) and t9.X[1] == kron(J, J)
    assert t9.value((1, 0)) == 9
    assert build_term_wfa(sq, 2).value((1, 2)) == 4
    assert build_term_wfa(sq, 2).value((0, 0)) == 0
    for j in range(3):
        ta = build_term_wfa(sq, j)
        for X in ta.X.values():
            assert is_upper_triangular(X)
            assert all(s == 4 for s in row_sums(X))


def test_term_automata_match_monomials():
    rng = random.Random(5)
    sq = square_poly(homogenize(parse_poly("x1*x2 - 2*x2")))
    for j, (c, e) in enumerate(sq.terms):
        ta = build_term_wfa(sq, j)
        for _ in range(5):
            xs = [rng.randint(0, 3) for _ in range(sq.t + 1)]
            mono = abs(c)
            for x, r in zip(xs, e):
                mono *= x**r
            assert ta.value(xs) == mono


def test_x1_minus_3_bundle():
    b = compile_pfa(parse_poly("x1 - 3"))
    m = b.meta
    assert (m["g"], m["gprime"], m["d"], m["t"], m["r"]) == (16, 6, 2, 1, 3)
    assert b.cutpoint == Fraction(3, 8) and b.pfa.n == 75 and b.relation == "<="
    assert validate_pfa(b.pfa) == [] and is_commutative_pfa(b.pfa)
    assert all(is_upper_triangular(M) for M in b.pfa.transitions.values())
    assert accept_prob(b.pfa, ("1",) * 3) == Fraction(3, 8)
    assert accept_prob(b.pfa, ("1",)) == Fraction(25, 64)
    for x in range(9):
        assert accept_prob(b.pfa, ("1",) * x) == closed_form_value(b, (x,))


@pytest.mark.parametrize("text", ["x1 - x2", "2*x1 + 1", "x1 - x2 + 1", "x1^2 - 2"])
def test_closed_form_on_other_polynomials(text):
    b = compile_pfa(parse_poly(text))
    assert validate_pfa(b.pfa) == []
    ev = Evaluator(b.pfa)
    for xs in exponent_tuples(b.meta["t"], 3):
        assert ev(exponent_word(xs)) == closed_form_value(b, xs)
    assert classify(b.pfa).kind == "polynomial"


def test_unfolded_bundle_agrees_with_folded():
    f = compile_pfa(parse_poly("x1 - x2"))
    u = compile_pfa(parse_poly("x1 - x2"), fold_x0=False)
    assert u.pfa.alphabet == ("0", "1", "2")
    ev_f, ev_u = Evaluator(f.pfa), Evaluator(u.pfa)
    for xs in exponent_tuples(2, 3):
        assert ev_u(("0",) + exponent_word(xs)) == ev_f(exponent_word(xs))
    assert u.lang.contains(("0", "1", "2")) and not u.lang.contains(("1",))


def test_non_commutative_embedding_option():
    b = compile_pfa(parse_poly("x1 - x2"), commutative=False)
    assert validate_pfa(b.pfa) == []
    assert b.pfa.n == 3 * 5**2
    ev = Evaluator(b.pfa)
    for xs in exponent_tuples(2, 3):
        assert ev(exponent_word(xs)) == closed_form_value(b, xs)


def test_cutpoint_search_finds_root_and_nothing_below():
    b = compile_pfa(parse_poly("x1 - 3"))
    assert cutpoint_search(b.pfa, b.cutpoint, "le", b.lang, 8) == ("1",) * 3
    assert cutpoint_search(b.pfa, b.cutpoint, "lt", b.lang, 10) is None


def test_constant_and_zero_polynomials_rejected():
    with pytest.raises(ValueError):
        compile_pfa(parse_poly("0"))
    with pytest.raises(ValueError):
        compile_pfa(parse_poly("5"))


def test_strict_transform():
    b = compile_pfa(parse_poly("x1 - 3"))
    s = strict_transform(b)
    assert s.cutpoint == Fraction(11, 16) and s.relation == "<"
    assert validate_pfa(s.pfa) == [] and s.pfa.n == 78
    assert all(is_upper_triangular(M) for M in s.pfa.transitions.values())
    eps = strict_epsilon(b)
    assert eps == Fraction(1, 64)
    for k in range(7):
        w = ("1",) * k
        assert accept_prob(s.pfa, ("1",) + w) == accept_prob(b.pfa, w) / 2 + (1 - eps) ** k / 2
    assert classify(s.pfa).kind == "polynomial"
    rep = separation_report(s, 8)
    assert rep["threshold"] == "11/16" and isinstance(rep["separated"], bool)
    assert s.lang.contains(("1", "1")) and not s.lang.contains(())
    with pytest.raises(ValueError):
        strict_transform(s)


def test_strict_transform_is_not_commutative_with_two_variables():
    # The fresh first state sees the old initial row before the first letter,
    # so letter order matters as soon as there are two letters.
    b = compile_pfa(parse_poly("x1 - 2*x2"))
    assert is_commutative_pfa(b.pfa)
    s = strict_transform(b)
    assert not is_commutative_pfa(s.pfa)
    assert accept_prob(s.pfa, ("1", "2")) != accept_prob(s.pfa, ("2", "1"))
    assert strict_transform(compile_pfa(parse_poly("x1 - 3"))).pfa.alphabet == ("1",)


def test_geq_transform():
    b = compile_pfa(parse_poly("x1 - 3"))
    g = geq_transform(b)
    assert g.relation == ">=" and g.cutpoint == Fraction(5, 8)
    assert accept_prob(g.pfa, ("1",) * 3) == Fraction(5, 8)
    gg = geq_transform(g)
    for k in range(6):
        w = ("1",) * k
        assert accept_prob(b.pfa, w) + accept_prob(g.pfa, w) == 1
        assert accept_prob(gg.pfa, w) == accept_prob(b.pfa, w)
    assert is_commutative_pfa(g.pfa)
    assert cutpoint_search(g.pfa, g.cutpoint, g.relation, g.lang, 8) == ("1",) * 3


def test_binary_encoding():
    u = compile_pfa(parse_poly("x1 - 3"), fold_x0=False)
    bb = binary_encode(u)
    assert bb.pfa.alphabet == ("y", "z") and validate_pfa(bb.pfa) == []
    assert z_power_is_identity(bb)
    t = 1
    Y, Z = bb.pfa.transitions["y"], bb.pfa.transitions["z"]
    sigma = bb.meta["sigma"]
    top = matmul(Y, matpow(Z, t + 1)).submatrix(0, sigma, 0, sigma)
    assert top == u.pfa.transitions["0"]
    _, blocks, _ = binary_blocks(bb)
    assert blocks[1] == u.pfa.transitions["1"]
    ev_b, ev_u = Evaluator(bb.pfa), Evaluator(u.pfa)
    for length in range(5):
        for idx in itertools.product(range(t + 1), repeat=length):
            assert ev_b(binary_word(idx, t)) == ev_u(tuple(str(i) for i in idx))
    assert bb.lang.contains(binary_word((0, 1, 1), t))
    assert not bb.lang.contains(binary_word((1, 0), t))
    with pytest.raises(ValueError):
        binary_encode(compile_pfa(parse_poly("x1 - 3")))


def test_dimension_formula():
    for text in ["x1 - 3", "x1 - x2", "x1*x2 - 6"]:
        b = compile_pfa(parse_poly(text))
        m = b.meta
        assert b.pfa.n == m["r"] * (2 * m["t"] + 3) ** m["d"]
