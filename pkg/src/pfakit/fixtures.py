"""Small reference automata used in tests, docs and CLI examples."""

from fractions import Fraction

from .linalg import QMatrix, QVector
from .pfa import PFA

h = Fraction(1, 2)


def quadratic_example() -> PFA:
    """Binary three-state PFA with quadratic ambiguity (upper-triangular)."""
    third, two_thirds = Fraction(1, 3), Fraction(2, 3)
    M0 = QMatrix.from_rows([[h, h, 0], [0, third, two_thirds], [0, 0, 1]])
    M1 = QMatrix.from_rows([[h, 0, h], [0, third, two_thirds], [0, 0, 1]])
    return PFA(("0", "1"), QVector([1, 0, 0]), {"0": M0, "1": M1}, QVector([0, 0, 1]))


def exponential_example() -> PFA:
    """Unary two-state PFA with exponential ambiguity."""
    Ma = QMatrix.from_rows([[h, h], [1, 0]])
    return PFA(("a",), QVector([1, 0]), {"a": Ma}, QVector([0, 1]))
