from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import rand_matrix, rand_stochastic
from pfakit.linalg import (
    DimensionError,
    Q,
    QMatrix,
    QVector,
    check_kron_index,
    commutes,
    dsum,
    dsum_list,
    identity,
    is_row_stochastic,
    is_upper_triangular,
    kron,
    kron_index,
    kron_list,
    kron_power,
    matmul,
    matpow,
    matvec,
    row_sums,
    vecmat,
    zeros,
)

A11 = QMatrix.from_rows([[1, 1], [0, 1]])


def test_q_is_canonical_and_refuses_floats():
    assert Q("6/8") == Fraction(3, 4)
    assert Q(Fraction(-2, -4)).denominator == 2
    with pytest.raises(TypeError):
        Q(0.5)


def test_kron_small_cases():
    assert kron(identity(2), identity(2)) == identity(4)
    assert kron(A11, QMatrix.from_rows([[2]])) == QMatrix.from_rows([[2, 2], [0, 2]])


def test_dsum_small_cases():
    assert dsum(QMatrix.from_rows([[1]]), QMatrix.from_rows([[2]])) == QMatrix.from_rows([[1, 0], [0, 2]])
    m = dsum_list([QMatrix.from_rows([[x]]) for x in (3, 5, 7)])
    assert m == QMatrix.from_rows([[3, 0, 0], [0, 5, 0], [0, 0, 7]])


def test_kron_power():
    assert kron_power(A11, 0) == QMatrix.from_rows([[1]])
    k2 = kron_power(A11, 2)
    assert k2.shape == (4, 4) and k2[0, 3] == 1
    assert kron_power(A11, 3) == kron_list([A11] * 3)


def test_matpow():
    assert matpow(A11, 3) == QMatrix.from_rows([[1, 3], [0, 1]])
    assert matpow(A11, 0) == identity(2)
    with pytest.raises(ValueError):
        matpow(A11, -1)


def test_predicates():
    assert is_row_stochastic(identity(3)) and is_upper_triangular(identity(3))
    assert not is_row_stochastic(A11)
    assert not is_upper_triangular(A11.transpose())
    assert not is_row_stochastic(QMatrix.from_rows([[Fraction(3, 2), Fraction(-1, 2)], [0, 1]]))


def test_kron_index_examples():
    assert kron_index([(1, 0)], 3) == (1, 0)
    assert kron_index([(0, 1), (1, 2)], 3) == (1, 5)
    with pytest.raises(IndexError):
        kron_index([(3, 0)], 3)


def test_dense_and_sparse_agree(rng):
    for _ in range(50):
        a = rand_matrix(rng, 3, 4, 0.5)
        b = rand_matrix(rng, 4, 2, 0.5)
        ad, as_ = a.to_dense(), a.to_sparse()
        bd, bs = b.to_dense(), b.to_sparse()
        assert ad == as_ and hash(ad) == hash(as_)
        assert matmul(ad, bd) == matmul(as_, bs) == matmul(ad, bs)
        assert kron(ad, bd) == kron(as_, bs)
        assert dsum(ad, bd) == dsum(as_, bs)
        assert (ad + ad) == (as_ + as_) and (ad - as_) == zeros(3, 4)
        assert ad.transpose() == as_.transpose()


def test_sparse_result_when_any_operand_sparse(rng):
    a = rand_matrix(rng, 2, 2).to_sparse()
    b = rand_matrix(rng, 2, 2).to_dense()
    assert kron(a, b).storage == "sparse"
    assert matmul(b, a).storage == "sparse"


def test_large_sparse_is_auto_selected():
    assert identity(100).storage == "sparse"
    assert identity(10).storage == "dense"


def test_dimension_errors():
    with pytest.raises(DimensionError):
        matmul(identity(2), identity(3))
    with pytest.raises(DimensionError):
        identity(2) + identity(3)
    with pytest.raises(DimensionError):
        QVector([1, 2]).dot(QVector([1]))


def test_vector_ops():
    x = QVector([Fraction(1, 2), Fraction(1, 2)])
    assert vecmat(x, A11) == QVector([Fraction(1, 2), 1])
    assert matvec(A11, QVector([0, 1])) == QVector([1, 1])
    assert row_sums(A11) == QVector([2, 1])
    assert QVector.basis(3, 1, 5) == QVector([0, 5, 0])
    assert QVector([1]).concat(QVector([2])).pad(4) == QVector([1, 2, 0, 0])
    assert list(QVector([0, 3, 0, 4]).items()) == [(1, 3), (3, 4)]


def test_from_entries_adds_duplicates_and_checks_bounds():
    m = QMatrix.from_entries(2, 2, [(0, 0, 1), (0, 0, 2), (1, 1, Fraction(1, 2))])
    assert m[0, 0] == 3 and m.nnz == 2
    with pytest.raises(IndexError):
        QMatrix.from_entries(2, 2, [(2, 0, 1)])


def test_submatrix(rng):
    a = rand_matrix(rng, 4, 4)
    b = rand_matrix(rng, 2, 2)
    s = dsum(a, b)
    assert s.submatrix(4, 6, 4, 6) == b and s.submatrix(0, 4, 0, 4) == a


def test_commutes():
    assert commutes(A11, matpow(A11, 2))
    assert not commutes(A11, A11.transpose())


small = st.integers(min_value=-3, max_value=3)


@st.composite
def qmats(draw, n=2, m=2):
    return QMatrix.from_rows([[Fraction(draw(small), draw(st.integers(1, 3))) for _ in range(m)] for _ in range(n)])


@settings(max_examples=60, deadline=None)
@given(qmats(), qmats(), qmats(), qmats())
def test_mixed_product_properties(a, b, c, d):
    assert matmul(kron(a, b), kron(c, d)) == kron(matmul(a, c), matmul(b, d))
    assert matmul(dsum(a, b), dsum(c, d)) == dsum(matmul(a, c), matmul(b, d))


@settings(max_examples=60, deadline=None)
@given(qmats(2, 3), qmats(3, 1), qmats(1, 2))
def test_associativity(a, b, c):
    assert kron(kron(a, b), c) == kron(a, kron(b, c))
    assert dsum(dsum(a, b), c) == dsum(a, dsum(b, c))


def test_closure_under_kron_and_dsum(rng):
    for _ in range(100):
        a = rand_stochastic(rng, rng.randint(1, 3), triangular=True)
        b = rand_stochastic(rng, rng.randint(1, 3), triangular=True)
        for m in (kron(a, b), dsum(a, b)):
            assert is_row_stochastic(m) and is_upper_triangular(m)


def test_kron_index_brute_force(rng):
    for _ in range(200):
        n = rng.randint(1, 3)
        ms = [rand_matrix(rng, n, n) for _ in range(rng.randint(1, 3))]
        pairs = [(rng.randrange(n), rng.randrange(n)) for _ in ms]
        assert check_kron_index(ms, pairs)
