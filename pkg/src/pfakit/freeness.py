"""PFA whose injectivity encodes MMPCP (four states) or equal subset sum (three states)."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from math import prod
from typing import Mapping, Sequence

from .linalg import QMatrix, QVector
from .pfa import PFA, LanguageSpec, Word

# -- word encodings ---------------------------------------------------------


def _check_letters(w: Sequence[int], n: int) -> None:
    for i in w:
        if not 1 <= i <= n:
            raise ValueError(f"letter x{i} outside x1..x{n}")


def alpha_encode(w: Sequence[int], n: int) -> int:
    """``x_{i1} ... x_{im}`` read as the reversed base-``(n+1)`` number ``i_m ... i_1``."""
    _check_letters(w, n)
    return sum(i * (n + 1) ** j for j, i in enumerate(w))


def beta_encode(w: Sequence[int], n: int) -> Fraction:
    """``x_{i1} ... x_{im}`` read as the base-``(n+1)`` fraction ``0.i_1 ... i_m``."""
    _check_letters(w, n)
    return sum((Fraction(i, (n + 1) ** (j + 1)) for j, i in enumerate(w)), Fraction(0))


_XWORD = re.compile(r"x(\d+)")


def parse_xword(text: str) -> tuple[int, ...]:
    """``"x3x4"`` -> ``(3, 4)``."""
    text = text.replace(" ", "")
    out = []
    pos = 0
    while pos < len(text):
        m = _XWORD.match(text, pos)
        if not m:
            raise ValueError(f"cannot read {text!r} as a word over x1, x2, ...")
        out.append(int(m.group(1)))
        pos = m.end()
    return tuple(out)


def format_xword(w: Sequence[int]) -> str:
    return "".join(f"x{i}" for i in w)


def gamma_pp(u: Sequence[int], v: Sequence[int], n: int) -> QMatrix:
    """3x3 rational matrix; a monoid morphism from word pairs under concatenation."""
    b = n + 1
    return QMatrix.from_rows([
        [Fraction(b) ** len(u), 0, alpha_encode(u, n)],
        [0, Fraction(1, b ** len(v)), beta_encode(v, n)],
        [0, 0, 1],
    ])


def gamma_p(u: Sequence[int], v: Sequence[int], n: int) -> QMatrix:
    """``(n+1)^{|v|}`` times :func:`gamma_pp`: a nonnegative integer matrix."""
    return gamma_pp(u, v, n).scale((n + 1) ** len(v))


def gamma_row_sums(u: Sequence[int], v: Sequence[int], n: int) -> list[int]:
    M = gamma_p(u, v, n)
    return [int(sum(M.row(i))) for i in range(3)]


def minimal_k(pairs: Sequence[tuple[Sequence[int], Sequence[int]]], n: int) -> int:
    """Smallest ``k`` with ``(n+1)^k`` at least every row sum of every ``gamma_p``."""
    top = max(max(gamma_row_sums(u, v, n)) for u, v in pairs)
    k = 0
    while (n + 1) ** k < top:
        k += 1
    return k


class KTooSmall(ValueError):
    pass


def gamma(u: Sequence[int], v: Sequence[int], n: int, k: int | None = None) -> QMatrix:
    """4x4 row-stochastic matrix: :func:`gamma_p` plus a slack column, all over ``(n+1)^k``."""
    if k is None:
        k = minimal_k([(u, v)], n)
    base = (n + 1) ** k
    G = gamma_p(u, v, n)
    sums = gamma_row_sums(u, v, n)
    if max(sums) > base:
        raise KTooSmall(f"k={k} too small: a row of gamma' sums to {max(sums)} > {base}")
    rows = [[G[i, j] for j in range(3)] + [base - sums[i]] for i in range(3)]
    rows.append([0, 0, 0, base])
    return QMatrix.from_rows(rows).scale(Fraction(1, base))


def gamma_pair(u, v, n: int, level: str = "stochastic", k: int | None = None) -> QMatrix:
    """Dispatch on ``level``: ``"pp"`` (γ''), ``"p"`` (γ') or ``"stochastic"`` (γ)."""
    if level == "pp":
        return gamma_pp(u, v, n)
    if level == "p":
        return gamma_p(u, v, n)
    if level == "stochastic":
        return gamma(u, v, n, k)
    raise ValueError(f"unknown gamma level {level!r}")


# -- instances and bundles --------------------------------------------------


@dataclass(frozen=True)
class MmpcpInstance:
    """Morphisms ``h, g`` from ``{x1..x_{n-2}}`` into words over ``{x_{n-1}, x_n}``."""

    n: int
    h: Mapping[int, tuple]
    g: Mapping[int, tuple]

    def __post_init__(self):
        n = self.n
        if n < 3:
            raise ValueError("MMPCP needs n >= 3")
        src = set(range(1, n - 1))
        for name, m in (("h", self.h), ("g", self.g)):
            if set(m) != src:
                raise ValueError(f"{name} must be defined exactly on x1..x{n - 2}")
            for i, img in m.items():
                if not img:
                    raise ValueError(f"{name}(x{i}) is empty")
                if any(c not in (n - 1, n) for c in img):
                    raise ValueError(f"{name}(x{i}) leaves the target alphabet {{x{n - 1}, x{n}}}")

    @classmethod
    def from_dict(cls, doc: Mapping) -> "MmpcpInstance":
        n = int(doc["n"])

        def conv(m):
            return {int(k.lstrip("x")): parse_xword(v) for k, v in m.items()}

        return cls(n, conv(doc["h"]), conv(doc["g"]))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "h": {f"x{i}": format_xword(self.h[i]) for i in sorted(self.h)},
            "g": {f"x{i}": format_xword(self.g[i]) for i in sorted(self.g)},
        }

    @property
    def sources(self) -> list[int]:
        return list(range(1, self.n - 1))


@dataclass(frozen=True)
class SubsetSumInstance:
    S: tuple

    def __post_init__(self):
        object.__setattr__(self, "S", tuple(int(x) for x in self.S))
        if not self.S:
            raise ValueError("empty instance")
        if any(x < 1 for x in self.S):
            raise ValueError("subset-sum entries must be positive integers")

    @classmethod
    def from_dict(cls, doc: Mapping) -> "SubsetSumInstance":
        return cls(tuple(doc["S"]))

    def to_dict(self) -> dict:
        return {"S": list(self.S)}


@dataclass(frozen=True)
class FreenessBundle:
    kind: str  # "mmpcp" | "subsetsum"
    pfa: PFA
    lang: LanguageSpec
    scale: Fraction  # factor applied to the initial vector
    instance: dict
    meta: dict = field(default_factory=dict)
    notes: tuple = ()


def mmpcp_letter(choice: str, i: int) -> str:
    return f"{choice}{i}"


def compile_mmpcp_pfa(inst: MmpcpInstance) -> FreenessBundle:
    """Four-state PFA over letters ``h_i``/``g_i`` (apply ``h`` or ``g`` to ``x_i``)."""
    n = inst.n
    pairs = [((i,), m[i]) for i in inst.sources for m in (inst.h, inst.g)]
    k = minimal_k(pairs, n)
    trans = {}
    alphabet = []
    for i in inst.sources:
        for choice, m in (("h", inst.h), ("g", inst.g)):
            a = mmpcp_letter(choice, i)
            alphabet.append(a)
            trans[a] = gamma((i,), m[i], n, k)
    half = Fraction(1, 2)
    pfa = PFA(tuple(alphabet), QVector([half, half, 0, 0]), trans, QVector([0, 0, 1, 0]))
    return FreenessBundle(
        kind="mmpcp",
        pfa=pfa,
        lang=LanguageSpec.full(alphabet),
        scale=half,
        instance=inst.to_dict(),
        meta={"k": k, "n": n},
        notes=("initial vector (1,1,0,0) scaled by 1/2 to a distribution; all value comparisons are unchanged",),
    )


def decode_mmpcp_word(inst: MmpcpInstance, w: Sequence[str]) -> tuple[tuple, tuple, tuple]:
    """Generator word -> (source word, per-position choices, concatenated image)."""
    src, choices, image = [], [], []
    for a in w:
        choice, i = a[0], int(a[1:])
        src.append(i)
        choices.append(choice)
        image.extend((inst.h if choice == "h" else inst.g)[i])
    return tuple(src), tuple(choices), tuple(image)


def is_mmpcp_solution(inst: MmpcpInstance, w1: Sequence[str], w2: Sequence[str]) -> bool:
    """Whether two generator words form a mixed-modification solution."""
    s1, c1, im1 = decode_mmpcp_word(inst, w1)
    s2, c2, im2 = decode_mmpcp_word(inst, w2)
    return bool(s1) and s1 == s2 and c1 != c2 and im1 == im2


def subset_letters(k: int) -> list[tuple[str, str]]:
    return [(f"b{i}", f"a{i}") for i in range(1, k + 1)]


def compile_subsetsum_pfa(inst: SubsetSumInstance) -> FreenessBundle:
    """Three-state PFA: reading ``a_i`` adds ``x_i`` to the value, ``b_i`` adds nothing.

    On ``w`` in ``(a1|b1)...(ak|bk)`` the value is
    ``sum(chosen x_i) / prod(x_j + 1)``.
    """
    trans = {}
    alphabet = []
    for i, x in enumerate(inst.S, 1):
        s = Fraction(1, x + 1)
        trans[f"a{i}"] = QMatrix.from_rows([[1, x, 0], [0, 1, x], [0, 0, x + 1]]).scale(s)
        trans[f"b{i}"] = QMatrix.from_rows([[1, 0, x], [0, 1, x], [0, 0, x + 1]]).scale(s)
        alphabet += [f"a{i}", f"b{i}"]
    pfa = PFA(tuple(alphabet), QVector([1, 0, 0]), trans, QVector([0, 1, 0]))
    scale = Fraction(1, prod(x + 1 for x in inst.S))
    return FreenessBundle(
        kind="subsetsum",
        pfa=pfa,
        lang=LanguageSpec.choices(subset_letters(len(inst.S))),
        scale=Fraction(1),
        instance=inst.to_dict(),
        meta={"value_denominator": str(1 / scale)},
        notes=(
            "word values are sum(chosen x_i) / prod(x_j + 1); the matrix product is taken as ground truth",
        ),
    )


def subset_of_word(w: Sequence[str]) -> frozenset:
    return frozenset(int(a[1:]) for a in w if a.startswith("a"))


def subset_value(inst: SubsetSumInstance, w: Sequence[str]) -> Fraction:
    """Closed-form value of a choice word."""
    chosen = sum(inst.S[i - 1] for i in subset_of_word(w))
    return Fraction(chosen, prod(x + 1 for x in inst.S))


def is_equal_sum_pair(inst: SubsetSumInstance, w1: Word, w2: Word) -> bool:
    s1, s2 = subset_of_word(w1), subset_of_word(w2)
    return (
        s1 != s2
        and bool(s1) and bool(s2)
        and sum(inst.S[i - 1] for i in s1) == sum(inst.S[i - 1] for i in s2)
    )
