"""Probabilistic finite automata: data model, exact evaluation and bounded search."""

from __future__ import annotations

import itertools
import operator
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Mapping, Sequence

from .linalg import (
    ONE,
    ZERO,
    DimensionError,
    QMatrix,
    QVector,
    commutes,
    is_row_stochastic,
    vecmat,
)

Word = tuple  # tuple[str, ...]

RELATIONS: dict[str, Callable[[Fraction, Fraction], bool]] = {
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}
_REL_ALIASES = {"lt": "<", "le": "<=", "gt": ">", "ge": ">=", "≤": "<=", "≥": ">="}


def normalize_relation(rel: str) -> str:
    rel = _REL_ALIASES.get(rel, rel)
    if rel not in RELATIONS:
        raise ValueError(f"unknown relation {rel!r}; expected one of lt, le, gt, ge")
    return rel


class UnknownLetter(KeyError):
    pass


@dataclass(frozen=True, eq=False)
class PFA:
    """``(initial, {letter: M_letter}, final)`` with row-stochastic ``M``.

    Construction only checks shapes; :func:`validate_pfa` reports the
    probabilistic invariants.
    """

    alphabet: tuple
    initial: QVector
    transitions: Mapping[str, QMatrix]
    final: QVector

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        if not isinstance(self.initial, QVector):
            object.__setattr__(self, "initial", QVector(self.initial))
        if not isinstance(self.final, QVector):
            object.__setattr__(self, "final", QVector(self.final))
        object.__setattr__(self, "transitions", {a: self.transitions[a] for a in self.alphabet})
        n = len(self.initial)
        if len(self.final) != n:
            raise DimensionError(f"initial has length {n} but final has length {len(self.final)}")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError("duplicate letters in alphabet")
        for a, M in self.transitions.items():
            if M.shape != (n, n):
                raise DimensionError(f"transition {a!r} has shape {M.shape}, expected {(n, n)}")

    @property
    def n(self) -> int:
        return len(self.initial)

    def __getitem__(self, letter: str) -> QMatrix:
        try:
            return self.transitions[letter]
        except KeyError:
            raise UnknownLetter(letter) from None

    def __eq__(self, other) -> bool:
        if not isinstance(other, PFA):
            return NotImplemented
        return (
            self.alphabet == other.alphabet
            and self.initial == other.initial
            and self.final == other.final
            and all(self.transitions[a] == other.transitions[a] for a in self.alphabet)
        )

    __hash__ = None

    def final_states(self) -> list[int]:
        return [i for i, y in enumerate(self.final) if y]


def validate_pfa(p: PFA) -> list[str]:
    """Violated PFA invariants, as human-readable strings; empty means valid."""
    problems = []
    if any(x < 0 for x in p.initial):
        problems.append("initial distribution has a negative entry")
    total = p.initial.total()
    if total != ONE:
        problems.append(f"initial distribution sums to {total}, not 1")
    bad_final = [i for i, y in enumerate(p.final) if y not in (ZERO, ONE)]
    if bad_final:
        problems.append(f"final vector entries not 0/1 at states {bad_final}")
    for a in p.alphabet:
        M = p.transitions[a]
        if is_row_stochastic(M):
            continue
        for i in range(M.rows):
            row = list(M.row_items(i))
            neg = [j for j, x in row if x < 0]
            if neg:
                problems.append(f"transition {a!r} row {i} has a negative entry at columns {neg}")
            s = sum((x for _, x in row), ZERO)
            if s != ONE:
                problems.append(f"transition {a!r} row {i} sums to {s}, not 1")
    return problems


def _check_word(p: PFA, w: Sequence[str]) -> Word:
    w = tuple(w)
    for a in w:
        if a not in p.transitions:
            raise UnknownLetter(a)
    return w


def state_distribution(p: PFA, w: Sequence[str]) -> QVector:
    """``x^T M_{w1} ... M_{wk}``."""
    x = p.initial
    for a in _check_word(p, w):
        x = vecmat(x, p.transitions[a])
    return x


def accept_prob(p: PFA, w: Sequence[str]) -> Fraction:
    return state_distribution(p, w).dot(p.final)


def complement(p: PFA) -> PFA:
    """Swap final and non-final states, so that ``f'(w) = 1 - f(w)``."""
    return PFA(p.alphabet, p.initial, p.transitions, QVector.ones(p.n) - p.final)


def is_commutative_pfa(p: PFA) -> bool:
    letters = p.alphabet
    return all(
        commutes(p.transitions[a], p.transitions[b])
        for i, a in enumerate(letters)
        for b in letters[i + 1:]
    )


class Evaluator:
    """Acceptance evaluation with a prefix cache of state distributions.

    Searches over bounded languages revisit the same prefixes many times;
    caching ``x^T M_{prefix}`` makes each new word cost one vector-matrix
    product in the common case.
    """

    def __init__(self, p: PFA, max_cache: int = 200_000):
        self.p = p
        self.max_cache = max_cache
        self._cache: dict[Word, QVector] = {(): p.initial}
        self._final = p.final_states()

    def distribution(self, w: Sequence[str]) -> QVector:
        w = tuple(w)
        cache = self._cache
        k = len(w)
        while w[:k] not in cache:
            k -= 1
        x = cache[w[:k]]
        for m in range(k, len(w)):
            x = vecmat(x, self.p[w[m]])
            if len(cache) >= self.max_cache:
                cache.clear()
                cache[()] = self.p.initial
            cache[w[: m + 1]] = x
        return x

    def __call__(self, w: Sequence[str]) -> Fraction:
        x = self.distribution(w)
        return sum((x[i] for i in self._final), ZERO)


# -- languages --------------------------------------------------------------

LANGUAGE_KINDS = ("letter-monotonic", "bounded", "full")


@dataclass(frozen=True)
class LanguageSpec:
    """A language ``F_1 F_2 ... F_m`` of factors, each starred or used once.

    Each factor is a tuple of alternative words (a word is a tuple of
    letters).  Ordinary factors have one alternative; a factor with several
    alternatives is a single choice among them and cannot be starred.  For
    ``kind="full"`` the factors are the single letters of the alphabet and
    the language is all of ``Sigma*``.
    """

    kind: str
    factors: tuple
    star: tuple
    _pattern: re.Pattern = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        factors = tuple(tuple(tuple(alt) for alt in f) for f in self.factors)
        star = tuple(bool(s) for s in self.star)
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "star", star)
        if self.kind not in LANGUAGE_KINDS:
            raise ValueError(f"unknown language kind {self.kind!r}")
        if len(star) != len(factors):
            raise ValueError("star flags and factors differ in length")
        for f, s in zip(factors, star):
            if not f:
                raise ValueError("empty factor")
            if any(len(alt) == 0 for alt in f):
                raise ValueError("factor words must be nonempty")
            if len(f) > 1 and s:
                raise ValueError("a choice factor cannot be starred")
            if self.kind == "letter-monotonic" and any(len(alt) != 1 for alt in f):
                raise ValueError("letter-monotonic factors must be single letters")
            if self.kind == "full" and (len(f) != 1 or len(f[0]) != 1 or not s):
                raise ValueError("full-language factors are starred single letters")
        object.__setattr__(self, "_pattern", self._compile())

    @classmethod
    def full(cls, alphabet: Sequence[str]) -> "LanguageSpec":
        return cls("full", tuple(((a,),) for a in alphabet), (True,) * len(alphabet))

    @classmethod
    def monotonic(cls, letters: Sequence[str], star: Sequence[bool] | None = None) -> "LanguageSpec":
        star = (True,) * len(letters) if star is None else star
        return cls("letter-monotonic", tuple(((a,),) for a in letters), tuple(star))

    @classmethod
    def bounded(cls, words: Sequence[Sequence[str]], star: Sequence[bool] | None = None) -> "LanguageSpec":
        star = (True,) * len(words) if star is None else star
        return cls("bounded", tuple((tuple(w),) for w in words), tuple(star))

    @classmethod
    def choices(cls, positions: Sequence[Sequence[str]]) -> "LanguageSpec":
        """Fixed-length ``(a_1|b_1)(a_2|b_2)...``: one letter from each position, in listed order."""
        return cls("bounded", tuple(tuple((a,) for a in pos) for pos in positions), (False,) * len(positions))

    def letters(self) -> list[str]:
        seen = {}
        for f in self.factors:
            for alt in f:
                for a in alt:
                    seen.setdefault(a, None)
        return list(seen)

    def _compile(self) -> re.Pattern:
        # Independent membership oracle: map letters to private-use code
        # points and match a regular expression.
        code = {a: chr(0xE000 + i) for i, a in enumerate(self.letters())}
        object.__setattr__(self, "_code", code)
        if self.kind == "full":
            return re.compile("[" + "".join(code.values()) + "]*")
        parts = []
        for f, s in zip(self.factors, self.star):
            alts = "|".join(re.escape("".join(code[a] for a in alt)) for alt in f)
            parts.append(f"(?:{alts})" + ("*" if s else ""))
        return re.compile("".join(parts))

    def contains(self, w: Sequence[str]) -> bool:
        code = self._code
        try:
            s = "".join(code[a] for a in w)
        except KeyError:
            return False
        return self._pattern.fullmatch(s) is not None

    def words_of_length(self, length: int) -> Iterator[Word]:
        """Member words of exactly ``length`` letters, in enumeration order."""
        if self.kind == "full":
            letters = [f[0][0] for f in self.factors]
            for w in itertools.product(letters, repeat=length):
                yield w
            return
        seen: set[Word] = set()
        m = len(self.factors)
        # Minimal remaining length after factor i, for pruning.
        tail_min = [0] * (m + 1)
        for i in range(m - 1, -1, -1):
            tail_min[i] = tail_min[i + 1] + (0 if self.star[i] else min(len(a) for a in self.factors[i]))

        def rec(i: int, remaining: int, acc: Word):
            if i == m:
                if remaining == 0:
                    yield acc
                return
            f = self.factors[i]
            if self.star[i]:
                word = f[0]
                for e in range((remaining - tail_min[i + 1]) // len(word), -1, -1):
                    yield from rec(i + 1, remaining - e * len(word), acc + word * e)
            else:
                for alt in f:
                    if len(alt) + tail_min[i + 1] <= remaining:
                        yield from rec(i + 1, remaining - len(alt), acc + alt)

        for w in rec(0, length, ()):
            if w not in seen:
                seen.add(w)
                yield w

    def max_fixed_length(self) -> int | None:
        """Length of the longest member if the language is finite, else None."""
        if any(self.star):
            return None
        return sum(max(len(a) for a in f) for f in self.factors)


def enumerate_words(lang: LanguageSpec, max_len: int) -> Iterator[Word]:
    """Every member of length ``<= max_len`` exactly once, shortest first.

    Within a length, starred factors are taken with the largest exponent
    first (factor 1 most significant) and choice factors in their listed
    order.
    """
    if max_len < 0:
        raise ValueError("max_len must be >= 0")
    fixed = lang.max_fixed_length()
    top = max_len if fixed is None else min(max_len, fixed)
    for length in range(top + 1):
        yield from lang.words_of_length(length)


def cutpoint_search(
    p: PFA,
    lam,
    rel: str,
    lang: LanguageSpec,
    max_len: int,
    evaluator: Evaluator | None = None,
) -> Word | None:
    """First member word ``w`` (enumeration order) with ``f(w) rel lam``.

    ``None`` only means no witness exists up to ``max_len``.
    """
    lam = Fraction(lam)
    cmp = RELATIONS[normalize_relation(rel)]
    ev = evaluator or Evaluator(p)
    for w in enumerate_words(lang, max_len):
        if cmp(ev(w), lam):
            return w
    return None


def collision_search(
    p: PFA,
    lang: LanguageSpec,
    max_len: int,
    evaluator: Evaluator | None = None,
) -> tuple[Word, Word] | None:
    """Earliest pair of distinct member words with equal acceptance value.

    Pairs are ordered by the position of the later word; the earlier word
    is the first one to reach that value.
    """
    ev = evaluator or Evaluator(p)
    first: dict[Fraction, Word] = {}
    for w in enumerate_words(lang, max_len):
        v = ev(w)
        if v in first:
            return first[v], w
        first[v] = w
    return None


# -- word text --------------------------------------------------------------

def format_word(w: Sequence[str]) -> str:
    """Run-length text such as ``1^3`` or ``a1 a2 b3``; the empty word is ``ε``."""
    if not w:
        return "ε"
    tokens = []
    for a, run in itertools.groupby(w):
        k = len(list(run))
        tokens.append(a if k == 1 else f"{a}^{k}")
    sep = "" if all(len(a) == 1 for a in w) else " "
    return sep.join(tokens)


_EXP = re.compile(r"\^(\d+)")


def parse_word(text: str, alphabet: Sequence[str]) -> Word:
    """Inverse of :func:`format_word`; letters are matched longest-first."""
    text = text.strip()
    if text in ("", "ε", "eps"):
        return ()
    letters = sorted(alphabet, key=len, reverse=True)
    out: list[str] = []
    i = 0
    while i < len(text):
        if text[i].isspace():
            i += 1
            continue
        for a in letters:
            if text.startswith(a, i):
                i += len(a)
                k = 1
                m = _EXP.match(text, i)
                if m:
                    k = int(m.group(1))
                    i = m.end()
                out.extend([a] * k)
                break
        else:
            raise UnknownLetter(f"cannot read a letter at position {i} of {text!r}")
    return tuple(out)
