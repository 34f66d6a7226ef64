"""Exact rational matrices and vectors with Kronecker and direct-sum algebra.

Every entry is a :class:`fractions.Fraction`.  A :class:`QMatrix` is stored
either densely (a tuple of row tuples) or sparsely (a tuple of per-row
``{col: value}`` dicts holding only nonzeros).  The storage is picked at
construction and has no effect on equality or on any operation's result.
"""

from __future__ import annotations

from fractions import Fraction
from functools import reduce
from typing import Iterable, Iterator, Mapping, Sequence

__all__ = [
    "Q",
    "QMatrix",
    "QVector",
    "DimensionError",
    "SPARSE_THRESHOLD",
    "SPARSE_DENSITY",
    "choose_storage",
    "identity",
    "zeros",
    "kron",
    "dsum",
    "kron_power",
    "kron_list",
    "dsum_list",
    "matmul",
    "matpow",
    "vecmat",
    "matvec",
    "row_sums",
    "is_row_stochastic",
    "is_upper_triangular",
    "commutes",
    "kron_index",
    "check_kron_index",
]

# Matrices with a side longer than this and density below SPARSE_DENSITY
# are stored sparsely unless a storage is requested explicitly.
SPARSE_THRESHOLD = 64
SPARSE_DENSITY = 0.25

ZERO = Fraction(0)
ONE = Fraction(1)


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


def Q(value) -> Fraction:
    """Coerce ``value`` (int, Fraction or ``"p/q"`` string) to a Fraction.

    Floats are refused: a binary float is almost never the rational the
    caller had in mind.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        return Fraction(int(value))
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        raise TypeError("floating point values are not accepted; use a Fraction or 'p/q' string")
    return Fraction(value)


def choose_storage(rows: int, cols: int, nnz: int) -> str:
    if max(rows, cols) > SPARSE_THRESHOLD and rows and cols and nnz < SPARSE_DENSITY * rows * cols:
        return "sparse"
    return "dense"


class QVector:
    """Immutable exact vector."""

    __slots__ = ("_v",)

    def __init__(self, entries: Iterable = ()):
        self._v = tuple(Q(x) for x in entries)

    @classmethod
    def _raw(cls, entries: tuple) -> "QVector":
        obj = cls.__new__(cls)
        obj._v = entries
        return obj

    @classmethod
    def basis(cls, n: int, i: int, scale=ONE) -> "QVector":
        if not 0 <= i < n:
            raise IndexError(f"basis index {i} outside [0, {n})")
        v = [ZERO] * n
        v[i] = Q(scale)
        return cls._raw(tuple(v))

    @classmethod
    def ones(cls, n: int) -> "QVector":
        return cls._raw((ONE,) * n)

    @classmethod
    def zeros(cls, n: int) -> "QVector":
        return cls._raw((ZERO,) * n)

    def __len__(self) -> int:
        return len(self._v)

    def __iter__(self) -> Iterator[Fraction]:
        return iter(self._v)

    def __getitem__(self, i):
        return self._v[i]

    def __eq__(self, other) -> bool:
        if isinstance(other, QVector):
            return self._v == other._v
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._v)

    def __repr__(self) -> str:
        return f"QVector({[str(x) for x in self._v]})"

    def items(self) -> Iterator[tuple[int, Fraction]]:
        """Nonzero ``(index, value)`` pairs in index order."""
        return ((i, x) for i, x in enumerate(self._v) if x)

    def total(self) -> Fraction:
        return sum(self._v, ZERO)

    def dot(self, other: "QVector") -> Fraction:
        if len(self) != len(other):
            raise DimensionError(f"dot of lengths {len(self)} and {len(other)}")
        return sum((a * b for a, b in zip(self._v, other._v) if a and b), ZERO)

    def scale(self, c) -> "QVector":
        c = Q(c)
        return QVector._raw(tuple(c * x for x in self._v))

    def __add__(self, other: "QVector") -> "QVector":
        if len(self) != len(other):
            raise DimensionError(f"sum of lengths {len(self)} and {len(other)}")
        return QVector._raw(tuple(a + b for a, b in zip(self._v, other._v)))

    def __sub__(self, other: "QVector") -> "QVector":
        if len(self) != len(other):
            raise DimensionError(f"difference of lengths {len(self)} and {len(other)}")
        return QVector._raw(tuple(a - b for a, b in zip(self._v, other._v)))

    def concat(self, other: "QVector") -> "QVector":
        """Direct sum of two vectors."""
        return QVector._raw(self._v + other._v)

    def pad(self, n: int) -> "QVector":
        if n < len(self):
            raise DimensionError("cannot pad to a shorter length")
        return QVector._raw(self._v + (ZERO,) * (n - len(self)))


class QMatrix:
    """Immutable exact rational matrix with dense or sparse storage."""

    __slots__ = ("rows", "cols", "storage", "_data")

    def __init__(self, rows: int, cols: int, data, storage: str):
        # Internal constructor; use from_rows / from_entries.
        self.rows = rows
        self.cols = cols
        self.storage = storage
        self._data = data

    # -- construction -------------------------------------------------------

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], storage: str | None = None) -> "QMatrix":
        data = [tuple(Q(x) for x in row) for row in rows]
        n = len(data)
        m = len(data[0]) if n else 0
        if any(len(r) != m for r in data):
            raise DimensionError("ragged rows")
        sparse_rows = [{j: x for j, x in enumerate(r) if x} for r in data]
        return cls._build(n, m, sparse_rows, storage)

    @classmethod
    def from_entries(
        cls,
        rows: int,
        cols: int,
        entries: Mapping[tuple[int, int], object] | Iterable[tuple[int, int, object]],
        storage: str | None = None,
    ) -> "QMatrix":
        """Build from ``{(i, j): value}`` or ``(i, j, value)`` triples; duplicates add up."""
        it = entries.items() if isinstance(entries, Mapping) else (((i, j), x) for i, j, x in entries)
        sparse_rows: list[dict[int, Fraction]] = [{} for _ in range(rows)]
        for (i, j), x in it:
            if not (0 <= i < rows and 0 <= j < cols):
                raise IndexError(f"entry ({i}, {j}) outside {rows}x{cols}")
            x = Q(x)
            r = sparse_rows[i]
            r[j] = r.get(j, ZERO) + x
        for r in sparse_rows:
            for j in [j for j, x in r.items() if not x]:
                del r[j]
        return cls._build(rows, cols, [dict(sorted(r.items())) for r in sparse_rows], storage)

    @classmethod
    def _build(cls, rows: int, cols: int, sparse_rows: list[dict[int, Fraction]], storage: str | None) -> "QMatrix":
        if storage is None:
            storage = choose_storage(rows, cols, sum(len(r) for r in sparse_rows))
        if storage == "sparse":
            return cls(rows, cols, tuple(sparse_rows), "sparse")
        if storage == "dense":
            dense = []
            for r in sparse_rows:
                row = [ZERO] * cols
                for j, x in r.items():
                    row[j] = x
                dense.append(tuple(row))
            return cls(rows, cols, tuple(dense), "dense")
        raise ValueError(f"unknown storage {storage!r}")

    def with_storage(self, storage: str) -> "QMatrix":
        if storage == self.storage:
            return self
        return QMatrix._build(self.rows, self.cols, [dict(self.row_items(i)) for i in range(self.rows)], storage)

    def to_dense(self) -> "QMatrix":
        return self.with_storage("dense")

    def to_sparse(self) -> "QMatrix":
        return self.with_storage("sparse")

    # -- access -------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def row_items(self, i: int) -> Iterable[tuple[int, Fraction]]:
        """Nonzero ``(col, value)`` pairs of row ``i`` in column order."""
        if self.storage == "sparse":
            return self._data[i].items()
        return ((j, x) for j, x in enumerate(self._data[i]) if x)

    def items(self) -> Iterator[tuple[int, int, Fraction]]:
        for i in range(self.rows):
            for j, x in self.row_items(i):
                yield i, j, x

    @property
    def nnz(self) -> int:
        return sum(1 for _ in self.items())

    def __getitem__(self, ij: tuple[int, int]) -> Fraction:
        i, j = ij
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"({i}, {j}) outside {self.rows}x{self.cols}")
        if self.storage == "sparse":
            return self._data[i].get(j, ZERO)
        return self._data[i][j]

    def tolist(self) -> list[list[Fraction]]:
        return [[self[i, j] for j in range(self.cols)] for i in range(self.rows)]

    def row(self, i: int) -> QVector:
        return QVector._raw(tuple(self[i, j] for j in range(self.cols)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, QMatrix):
            return NotImplemented
        if self.shape != other.shape:
            return False
        return all(dict(self.row_items(i)) == dict(other.row_items(i)) for i in range(self.rows))

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, tuple(self.items())))

    def __repr__(self) -> str:
        if self.rows * self.cols <= 64:
            body = [[str(x) for x in r] for r in self.tolist()]
            return f"QMatrix({body})"
        return f"QMatrix<{self.rows}x{self.cols}, {self.storage}, nnz={self.nnz}>"

    # -- arithmetic ---------------------------------------------------------

    def scale(self, c) -> "QMatrix":
        c = Q(c)
        return QMatrix._build(
            self.rows, self.cols,
            [{j: c * x for j, x in self.row_items(i)} if c else {} for i in range(self.rows)],
            self.storage,
        )

    def __add__(self, other: "QMatrix") -> "QMatrix":
        if self.shape != other.shape:
            raise DimensionError(f"sum of {self.shape} and {other.shape}")
        out = []
        for i in range(self.rows):
            r = dict(self.row_items(i))
            for j, x in other.row_items(i):
                y = r.get(j, ZERO) + x
                if y:
                    r[j] = y
                else:
                    r.pop(j, None)
            out.append(dict(sorted(r.items())))
        return QMatrix._build(self.rows, self.cols, out, None)

    def __sub__(self, other: "QMatrix") -> "QMatrix":
        return self + other.scale(-1)

    def __matmul__(self, other: "QMatrix") -> "QMatrix":
        return matmul(self, other)

    def transpose(self) -> "QMatrix":
        return QMatrix.from_entries(self.cols, self.rows, ((j, i, x) for i, j, x in self.items()), self.storage)

    def submatrix(self, r0: int, r1: int, c0: int, c1: int) -> "QMatrix":
        """Block ``[r0:r1, c0:c1]``."""
        out = [{j - c0: x for j, x in self.row_items(i) if c0 <= j < c1} for i in range(r0, r1)]
        return QMatrix._build(r1 - r0, c1 - c0, out, None)


def identity(n: int, storage: str | None = None) -> QMatrix:
    return QMatrix._build(n, n, [{i: ONE} for i in range(n)], storage)


def zeros(rows: int, cols: int, storage: str | None = None) -> QMatrix:
    return QMatrix._build(rows, cols, [{} for _ in range(rows)], storage)


def _result_storage(*ms: QMatrix) -> str | None:
    # Sparse operands stay sparse; otherwise let the size rule decide.
    return "sparse" if any(m.storage == "sparse" for m in ms) else None


def kron(A: QMatrix, B: QMatrix) -> QMatrix:
    """Kronecker product; entry ``(iA*B.rows + iB, jA*B.cols + jB)`` is ``A[iA,jA]*B[iB,jB]``."""
    br, bc = B.rows, B.cols
    brows = [list(B.row_items(i)) for i in range(br)]
    out: list[dict[int, Fraction]] = []
    for ia in range(A.rows):
        arow = list(A.row_items(ia))
        for ib in range(br):
            r = {}
            for ja, a in arow:
                base = ja * bc
                for jb, b in brows[ib]:
                    r[base + jb] = a * b
            out.append(r)
    rows, cols = A.rows * br, A.cols * bc
    storage = _result_storage(A, B) or choose_storage(rows, cols, sum(len(r) for r in out))
    return QMatrix._build(rows, cols, out, storage)


def dsum(A: QMatrix, B: QMatrix) -> QMatrix:
    """Block-diagonal direct sum."""
    out = [dict(A.row_items(i)) for i in range(A.rows)]
    out += [{j + A.cols: x for j, x in B.row_items(i)} for i in range(B.rows)]
    rows, cols = A.rows + B.rows, A.cols + B.cols
    storage = _result_storage(A, B) or choose_storage(rows, cols, sum(len(r) for r in out))
    return QMatrix._build(rows, cols, out, storage)


def kron_list(As: Sequence[QMatrix]) -> QMatrix:
    """Left fold of :func:`kron`; the empty product is ``[[1]]``."""
    return reduce(kron, As, identity(1))


def kron_power(A: QMatrix, k: int) -> QMatrix:
    if k < 0:
        raise ValueError("Kronecker power needs k >= 0")
    if not A.is_square:
        raise DimensionError("Kronecker power needs a square matrix")
    return kron_list([A] * k)


def dsum_list(As: Sequence[QMatrix]) -> QMatrix:
    """Left fold of :func:`dsum`; the empty sum is the 0x0 matrix."""
    if not As:
        return zeros(0, 0)
    if len(As) == 1:
        return As[0]
    out: list[dict[int, Fraction]] = []
    off = 0
    for A in As:
        out += [{j + off: x for j, x in A.row_items(i)} for i in range(A.rows)]
        off += A.cols
    rows = sum(A.rows for A in As)
    storage = _result_storage(*As) or choose_storage(rows, off, sum(len(r) for r in out))
    return QMatrix._build(rows, off, out, storage)


def matmul(A: QMatrix, B: QMatrix) -> QMatrix:
    if A.cols != B.rows:
        raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    brows = [list(B.row_items(k)) for k in range(B.rows)]
    out = []
    for i in range(A.rows):
        acc: dict[int, Fraction] = {}
        for k, a in A.row_items(i):
            for j, b in brows[k]:
                acc[j] = acc.get(j, ZERO) + a * b
        out.append({j: x for j, x in sorted(acc.items()) if x})
    storage = _result_storage(A, B) or choose_storage(A.rows, B.cols, sum(len(r) for r in out))
    return QMatrix._build(A.rows, B.cols, out, storage)


def matpow(A: QMatrix, k: int) -> QMatrix:
    """``A**k`` by repeated squaring; ``k = 0`` gives the identity."""
    if not A.is_square:
        raise DimensionError("matrix power needs a square matrix")
    if k < 0:
        raise ValueError("matrix power needs k >= 0")
    result = identity(A.rows, A.storage)
    base = A
    while k:
        if k & 1:
            result = matmul(result, base)
        k >>= 1
        if k:
            base = matmul(base, base)
    return result


def vecmat(x: QVector, A: QMatrix) -> QVector:
    """Row vector times matrix, ``x^T A``."""
    if len(x) != A.rows:
        raise DimensionError(f"vector of length {len(x)} against {A.shape}")
    acc = [ZERO] * A.cols
    for i, xi in x.items():
        for j, a in A.row_items(i):
            acc[j] += xi * a
    return QVector._raw(tuple(acc))


def matvec(A: QMatrix, y: QVector) -> QVector:
    """Matrix times column vector, ``A y``."""
    if len(y) != A.cols:
        raise DimensionError(f"{A.shape} against vector of length {len(y)}")
    yv = y._v
    return QVector._raw(tuple(sum((a * yv[j] for j, a in A.row_items(i) if yv[j]), ZERO) for i in range(A.rows)))


def row_sums(A: QMatrix) -> QVector:
    return QVector._raw(tuple(sum((x for _, x in A.row_items(i)), ZERO) for i in range(A.rows)))


def is_row_stochastic(A: QMatrix) -> bool:
    if not A.is_square:
        return False
    for i in range(A.rows):
        s = ZERO
        for _, x in A.row_items(i):
            if x < 0:
                return False
            s += x
        if s != ONE:
            return False
    return True


def is_upper_triangular(A: QMatrix) -> bool:
    if not A.is_square:
        raise DimensionError("triangularity needs a square matrix")
    return all(j >= i for i in range(A.rows) for j, _ in A.row_items(i))


def commutes(A: QMatrix, B: QMatrix) -> bool:
    if not (A.is_square and B.is_square and A.rows == B.rows):
        raise DimensionError(f"commutator of {A.shape} and {B.shape}")
    return matmul(A, B) == matmul(B, A)


def kron_index(index_pairs: Sequence[tuple[int, int]], n: int) -> tuple[int, int]:
    """Locate the entry of ``A_1 (x) ... (x) A_l`` (all ``n x n``) equal to ``prod (A_m)[i_m, j_m]``.

    Follows the induction ``(i, j) <- (n*i + i_m, n*j + j_m)`` with 0-based indices.
    """
    if not index_pairs:
        raise ValueError("kron_index needs at least one index pair")
    i = j = 0
    for im, jm in index_pairs:
        if not (0 <= im < n and 0 <= jm < n):
            raise IndexError(f"index pair ({im}, {jm}) outside [0, {n})")
        i, j = n * i + im, n * j + jm
    return i, j


def check_kron_index(matrices: Sequence[QMatrix], index_pairs: Sequence[tuple[int, int]]) -> bool:
    """Compare :func:`kron_index` against an explicitly built Kronecker product."""
    n = matrices[0].rows
    i, j = kron_index(index_pairs, n)
    prod = ONE
    for M, (im, jm) in zip(matrices, index_pairs):
        prod *= M[im, jm]
    return kron_list(matrices)[i, j] == prod
