"""Compile a Diophantine equation ``P(x_1..x_t) = 0`` into a commutative PFA.

Pipeline: homogenize with a dummy ``x0``, square, encode each term as a
Kronecker product of small integer matrices whose powers carry the variable
values on their superdiagonal, add the terms with direct sums, scale to
row-stochastic matrices and absorb negative coefficients by swapping final
states on their blocks.  For ``w = 1^{x1} 2^{x2} ... t^{xt}`` the result has

    f(w) = g'/g + P^h(1, x1, ..., xt) / (g * 2^(d * (1 + |w|)))

so ``f(w) <= g'/g`` exactly at the roots.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .linalg import (
    ONE,
    QMatrix,
    QVector,
    dsum_list,
    identity,
    kron_index,
    kron_list,
    matpow,
    vecmat,
)
from .pfa import PFA, LanguageSpec, complement

# -- polynomials ------------------------------------------------------------


class PolySyntaxError(ValueError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos


@dataclass(frozen=True)
class DioPolynomial:
    """Integer polynomial in ``x0..xt``; exponent tuples always have ``t + 1`` slots.

    ``x0`` is the homogenizing variable and never appears in parsed input.
    Terms are merged, zero-free and kept in graded-lexicographic order
    (higher total degree first, then ``x0 > x1 > ...``).
    """

    t: int
    terms: tuple  # of (coefficient, exponents)

    def __post_init__(self):
        merged: dict[tuple, int] = {}
        for c, e in self.terms:
            e = tuple(int(x) for x in e)
            if len(e) != self.t + 1:
                raise ValueError(f"exponent tuple {e} does not have {self.t + 1} slots")
            if any(x < 0 for x in e):
                raise ValueError("negative exponent")
            merged[e] = merged.get(e, 0) + int(c)
        terms = tuple((c, e) for e, c in sorted(merged.items(), key=lambda ce: _grlex_key(ce[0])) if c)
        object.__setattr__(self, "terms", terms)

    @property
    def degree(self) -> int:
        return max((sum(e) for _, e in self.terms), default=0)

    @property
    def is_homogeneous(self) -> bool:
        return len({sum(e) for _, e in self.terms}) <= 1

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        out = []
        for k, (c, e) in enumerate(self.terms):
            mono = "*".join(
                f"x{i}" if x == 1 else f"x{i}^{x}" for i, x in enumerate(e) if x
            )
            a = abs(c)
            body = mono if a == 1 and mono else (f"{a}*{mono}" if mono else str(a))
            sign = "-" if c < 0 else "+"
            out.append((("-" if c < 0 else "") if k == 0 else f" {sign} ") + body)
        return "".join(out)


def _grlex_key(e: tuple) -> tuple:
    return (-sum(e), tuple(-x for x in e))


_TOKEN = re.compile(r"\s*(?:(?P<int>\d+)|(?P<var>x\d+)|(?P<op>[-+*^]))")


def parse_poly(text: str) -> DioPolynomial:
    """Read ``2*x1^2*x2 - 7*x2 + 1``-style text; variables are ``x1, x2, ...``."""
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise PolySyntaxError(f"unexpected character {text[pos:].lstrip()[0]!r}", len(text) - len(text[pos:].lstrip()))
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))

    k = 0

    def peek():
        return tokens[k]

    def take(kind=None, value=None):
        nonlocal k
        tok = tokens[k]
        if (kind and tok[0] != kind) or (value and tok[1] != value):
            want = value or kind
            raise PolySyntaxError(f"expected {want}, found {tok[1] or 'end of input'!r}", tok[2])
        k += 1
        return tok

    raw_terms: list[tuple[int, dict[int, int]]] = []

    def factor(coef: int, exps: dict[int, int]) -> int:
        kind, val, p = peek()
        if kind == "int":
            take()
            base = int(val)
            if peek()[1] == "^":
                take()
                base = base ** int(take("int")[1])
            return coef * base
        if kind == "var":
            take()
            idx = int(val[1:])
            if idx == 0:
                raise PolySyntaxError("x0 is reserved for homogenization", p)
            power = 1
            if peek()[1] == "^":
                take()
                power = int(take("int")[1])
            exps[idx] = exps.get(idx, 0) + power
            return coef
        raise PolySyntaxError(f"expected a number or variable, found {val or 'end of input'!r}", p)

    def term(sign: int):
        exps: dict[int, int] = {}
        coef = factor(sign, exps)
        while peek()[1] == "*":
            take()
            coef = factor(coef, exps)
        raw_terms.append((coef, exps))

    sign = 1
    if peek()[1] in "+-" and peek()[0] == "op":
        sign = -1 if take()[1] == "-" else 1
    term(sign)
    while peek()[0] != "end":
        kind, val, p = peek()
        if val not in ("+", "-"):
            raise PolySyntaxError(f"expected + or -, found {val!r}", p)
        take()
        term(-1 if val == "-" else 1)

    t = max((max(e, default=0) for _, e in raw_terms), default=0)
    terms = [(c, tuple(e.get(i, 0) for i in range(t + 1))) for c, e in raw_terms]
    return DioPolynomial(t, tuple(terms))


def homogenize(p: DioPolynomial) -> DioPolynomial:
    """Raise every term to the top degree with powers of ``x0``."""
    if p.is_zero:
        raise ValueError("the zero polynomial cannot be compiled")
    d = p.degree
    return DioPolynomial(p.t, tuple((c, (e[0] + d - sum(e),) + e[1:]) for c, e in p.terms))


def poly_mul(p: DioPolynomial, q: DioPolynomial) -> DioPolynomial:
    if p.t != q.t:
        raise ValueError("variable counts differ")
    terms = [
        (c1 * c2, tuple(a + b for a, b in zip(e1, e2)))
        for (c1, e1), (c2, e2) in itertools.product(p.terms, q.terms)
    ]
    return DioPolynomial(p.t, tuple(terms))


def square_poly(p: DioPolynomial) -> DioPolynomial:
    if not p.is_homogeneous:
        raise ValueError("square_poly expects a homogeneous polynomial")
    return poly_mul(p, p)


def eval_poly(p: DioPolynomial, assignment) -> int:
    """Evaluate at natural numbers.

    ``assignment`` is a mapping ``{index: value}`` or a sequence over
    ``x0..xt``; ``x0`` may be omitted when no term uses it.
    """
    if isinstance(assignment, Mapping):
        values = dict(assignment)
    else:
        values = dict(enumerate(assignment))
    needed = set(range(1, p.t + 1))
    if any(e[0] for _, e in p.terms):
        needed.add(0)
    missing = sorted(needed - values.keys())
    if missing:
        raise KeyError(f"no value for {', '.join(f'x{i}' for i in missing)}")
    if any(values[i] < 0 for i in needed):
        raise ValueError("variables range over the natural numbers")
    total = 0
    for c, e in p.terms:
        m = c
        for i, x in enumerate(e):
            if x:
                m *= values[i] ** x
        total += m
    return total


# -- matrices ---------------------------------------------------------------


def _shift_family(T: int, i: int) -> QMatrix:
    # (T+3)x(T+3) matrix: rows 0..T carry 1 on the diagonal, delta_{l,i} on
    # the superdiagonal and 1 - delta_{l,i} in the last column; i > T gives J.
    n = T + 3
    entries = {}
    for l in range(T + 1):
        entries[(l, l)] = 1
        if l == i:
            entries[(l, l + 1)] = 1
        else:
            entries[(l, n - 1)] = 1
    entries[(T + 1, T + 1)] = 1
    entries[(T + 1, n - 1)] = 1
    entries[(n - 1, n - 1)] = 2
    return QMatrix.from_entries(n, n, entries)


def build_base_matrix(t: int, i: int, commutative: bool = True) -> QMatrix:
    """The integer matrix ``A_i`` (``i = t + 1`` gives ``J``); every row sums to 2.

    Without ``commutative`` the matrix is ``(t+3)``-square and ``A_i``,
    ``A_{i+1}`` do not commute.  With it, ``A_i`` is embedded as ``A_{2i}``
    of the ``(2t+3)``-square family, where all chosen matrices commute.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if not 0 <= i <= t + 1:
        raise IndexError(f"base matrix index {i} outside [0, {t + 1}]")
    if commutative:
        return _shift_family(2 * t, 2 * i)
    return _shift_family(t, i)


def superdiagonal_position(i: int, commutative: bool = True) -> tuple[int, int]:
    """Where ``x_i`` shows up in powers of the base matrix for variable ``i``."""
    r = 2 * i if commutative else i
    return r, r + 1


@dataclass(frozen=True)
class TermAutomaton:
    j: int
    coefficient: int
    selector: tuple  # s_j: variable index per Kronecker factor
    u: QVector  # |c_j| e_{i1}
    v: QVector  # e_{i2}
    X: dict  # variable index -> QMatrix
    position: tuple  # (i1, i2)

    def value(self, xs: Sequence[int]) -> Fraction:
        """``u^T X_0^{x0} ... X_t^{xt} v`` by straight matrix products."""
        x = self.u
        for i, k in enumerate(xs):
            for _ in range(k):
                x = vecmat(x, self.X[i])
        return x.dot(self.v)


def term_selector(exps: Sequence[int]) -> tuple:
    """``(0,)*r_0 + (1,)*r_1 + ...``: the variable attached to each Kronecker factor."""
    return tuple(itertools.chain.from_iterable([i] * r for i, r in enumerate(exps)))


def build_term_wfa(p: DioPolynomial, j: int, commutative: bool = True) -> TermAutomaton:
    """Weighted automaton with ``u^T prod_i X_i^{x_i} v = |c_j| * prod_i x_i^{r_{j,i}}``."""
    if not p.is_homogeneous:
        raise ValueError("term automata need a homogeneous polynomial")
    c, exps = p.terms[j]
    return _term_automaton(p.t, j, c, exps, commutative)


def _term_automaton(t: int, j: int, c: int, exps: tuple, commutative: bool) -> TermAutomaton:
    sel = term_selector(exps)
    bases = [build_base_matrix(t, i, commutative) for i in range(t + 2)]
    J = bases[t + 1]
    X = {i: kron_list([bases[i] if s == i else J for s in sel]) for i in range(t + 1)}
    n = bases[0].rows
    i1, i2 = kron_index([superdiagonal_position(s, commutative) for s in sel], n)
    size = n ** len(sel)
    return TermAutomaton(
        j=j,
        coefficient=c,
        selector=sel,
        u=QVector.basis(size, i1, abs(c)),
        v=QVector.basis(size, i2),
        X=X,
        position=(i1, i2),
    )


# -- bundles ----------------------------------------------------------------


@dataclass(frozen=True)
class ReductionBundle:
    """A compiled PFA with its cut-point, relation, input language and metadata."""

    pfa: PFA
    cutpoint: Fraction
    relation: str
    lang: LanguageSpec
    meta: dict = field(default_factory=dict)

    @property
    def transform(self) -> str:
        return self.meta.get("transform", "base")

    def polynomial(self) -> DioPolynomial:
        """The squared homogeneous polynomial the bundle encodes."""
        terms = self.meta["terms"]
        return DioPolynomial(self.meta["t"], tuple((int(c), tuple(e)) for c, e in terms))


def ordered_terms(p: DioPolynomial) -> list[tuple[int, tuple]]:
    """Positive terms first; each group keeps graded-lexicographic order."""
    return [te for te in p.terms if te[0] > 0] + [te for te in p.terms if te[0] < 0]


def compile_pfa(p_raw: DioPolynomial, fold_x0: bool = True, commutative: bool = True) -> ReductionBundle:
    """Build the PFA whose value on ``1^{x1}...t^{xt}`` encodes ``P(x1..xt)^2``.

    With ``fold_x0=False`` the letter ``0`` (for ``x0``) is kept and must be
    read once at the start; the language is then ``0 1* ... t*``.
    """
    if p_raw.is_zero:
        raise ValueError("the zero polynomial cannot be compiled")
    if p_raw.t == 0:
        raise ValueError("a nonzero constant has no roots; at least one variable is needed")
    ph = square_poly(homogenize(p_raw))
    t, d = ph.t, ph.degree
    terms = ordered_terms(ph)
    autos = [_term_automaton(t, j, c, e, commutative) for j, (c, e) in enumerate(terms)]

    g = sum(abs(c) for c, _ in terms)
    gprime = sum(-c for c, _ in terms if c < 0)
    rprime = sum(1 for c, _ in terms if c > 0)
    scale = Fraction(1, 2 ** d)
    Y = {i: dsum_list([a.X[i] for a in autos]).scale(scale) for i in range(t + 1)}

    u = QVector(())
    v = QVector(())
    for a in autos:
        u = u.concat(a.u)
        v = v.concat(a.v if a.coefficient > 0 else QVector.ones(len(a.v)) - a.v)
    u = u.scale(Fraction(1, g))

    meta = {
        "transform": "base",
        "source": str(p_raw),
        "terms": [[c, list(e)] for c, e in terms],
        "g": g,
        "gprime": gprime,
        "d": d,
        "t": t,
        "r": len(terms),
        "rprime": rprime,
        "dimension": len(u),
        "x0_folded": fold_x0,
        "commutative_embedding": commutative,
    }
    letters = [str(i) for i in range(1, t + 1)]
    if fold_x0:
        pfa = PFA(tuple(letters), vecmat(u, Y[0]), {str(i): Y[i] for i in range(1, t + 1)}, v)
        lang = LanguageSpec.monotonic(letters)
    else:
        pfa = PFA(("0", *letters), u, {str(i): Y[i] for i in range(t + 1)}, v)
        lang = LanguageSpec.monotonic(["0", *letters], [False] + [True] * t)
    return ReductionBundle(pfa, Fraction(gprime, g), "<=", lang, meta)


def exponent_word(xs: Sequence[int], with_x0: bool = False) -> tuple:
    """``(x1, ..., xt) -> 1^{x1} ... t^{xt}``; with ``with_x0`` the tuple starts at ``x0``."""
    start = 0 if with_x0 else 1
    return tuple(itertools.chain.from_iterable([str(i)] * k for i, k in enumerate(xs, start)))


def closed_form_value(b: ReductionBundle, xs: Sequence[int]) -> Fraction:
    """Predicted acceptance of the base bundle on ``1^{x1}...t^{xt}``.

    ``xs`` lists ``x1..xt`` for a folded bundle and ``x0..xt`` otherwise.
    """
    m = b.meta
    full = (1, *xs) if m["x0_folded"] else tuple(xs)
    ph = b.polynomial()
    return Fraction(m["gprime"], m["g"]) + Fraction(eval_poly(ph, full), m["g"] * 2 ** (m["d"] * sum(full)))


def strict_epsilon(b: ReductionBundle) -> Fraction:
    return Fraction(1, b.meta["g"] * 2 ** b.meta["d"])


def strict_transform(b: ReductionBundle) -> ReductionBundle:
    """Add a fresh initial state, a slowly leaking final state and a sink.

    State order is ``q0, <old states>, qF, q*`` so triangularity survives.
    On every letter ``q0`` sends half its mass to ``qF`` and half onto the
    old initial distribution; ``qF`` leaks ``1/(g 2^d)`` per step into
    ``q*``.  Hence ``f'(a w) = f(w)/2 + (1 - 1/(g 2^d))^|w| / 2`` and the
    threshold becomes ``(lambda + 1)/2`` with a strict relation.
    """
    if b.transform != "base":
        raise ValueError("strict_transform expects a base bundle from compile_pfa")
    p = b.pfa
    n = p.n
    eps = strict_epsilon(b)
    half = Fraction(1, 2)
    q0, qF, qs = 0, n + 1, n + 2
    trans = {}
    for a in p.alphabet:
        entries = {(q0, qF): half}
        for i, x in p.initial.items():
            entries[(q0, i + 1)] = half * x
        for i, j, x in p.transitions[a].items():
            entries[(i + 1, j + 1)] = x
        entries[(qF, qF)] = ONE - eps
        entries[(qF, qs)] = eps
        entries[(qs, qs)] = ONE
        trans[a] = QMatrix.from_entries(n + 3, n + 3, entries)
    initial = QVector.basis(n + 3, q0)
    final = QVector([0]).concat(p.final).concat(QVector([1, 0]))
    lead = p.alphabet[0]
    lang = LanguageSpec(
        b.lang.kind if b.lang.kind != "full" else "bounded",
        (((lead,),),) + b.lang.factors,
        (False,) + b.lang.star,
    )
    meta = dict(b.meta, transform="strict", epsilon=str(eps), base_lambda=str(b.cutpoint), dimension=n + 3)
    return ReductionBundle(PFA(p.alphabet, initial, trans, final), (b.cutpoint + 1) / 2, "<", lang, meta)


_FLIP = {"<=": ">=", "<": ">", ">=": "<=", ">": "<"}


def geq_transform(b: ReductionBundle) -> ReductionBundle:
    """Swap final states: values become ``1 - f``, the threshold ``1 - lambda``, the relation flips."""
    meta = dict(b.meta)
    meta["complemented"] = not meta.get("complemented", False)
    return ReductionBundle(complement(b.pfa), 1 - b.cutpoint, _FLIP[b.relation], b.lang, meta)


def binary_encode(b: ReductionBundle) -> ReductionBundle:
    """Two-letter PFA ``(u', {Y, Z}, v')`` with ``Y`` the direct sum of all letters and ``Z`` a block rotation.

    For index sequences ``i_1..i_p`` the word ``prod_k z^{i_k} y z^{t+1-i_k}``
    has the value of ``i_1 ... i_p`` in ``b``.
    """
    p = b.pfa
    t = len(p.alphabet) - 1
    if p.alphabet != tuple(str(i) for i in range(t + 1)):
        raise ValueError("binary_encode needs a bundle over letters 0..t (compile with fold_x0=False)")
    sigma = p.n
    N = (t + 1) * sigma
    Y = dsum_list([p.transitions[str(i)] for i in range(t + 1)])
    Z = QMatrix.from_entries(N, N, {(r, (r + sigma) % N): 1 for r in range(N)}, storage=Y.storage)
    u2 = p.initial.pad(N)
    v2 = p.final.pad(N)
    factors = [("z",) * i + ("y",) + ("z",) * (t + 1 - i) for i in range(t + 1)]
    lang = LanguageSpec.bounded(factors)
    meta = dict(b.meta, transform="binary", sigma=sigma, dimension=N, source_transform=b.transform)
    return ReductionBundle(PFA(("y", "z"), u2, {"y": Y, "z": Z}, v2), b.cutpoint, b.relation, lang, meta)


def binary_word(indices: Sequence[int], t: int) -> tuple:
    return tuple(itertools.chain.from_iterable(("z",) * i + ("y",) + ("z",) * (t + 1 - i) for i in indices))


def binary_blocks(b: ReductionBundle) -> tuple[QVector, dict, QVector]:
    """Recover ``(u, {i: Y_i}, v)`` from the diagonal blocks of a binary bundle."""
    sigma = b.meta["sigma"]
    Y = b.pfa.transitions["y"]
    t = Y.rows // sigma - 1
    blocks = {i: Y.submatrix(i * sigma, (i + 1) * sigma, i * sigma, (i + 1) * sigma) for i in range(t + 1)}
    return QVector(b.pfa.initial[:sigma]), blocks, QVector(b.pfa.final[:sigma])


def z_power_is_identity(b: ReductionBundle) -> bool:
    Z = b.pfa.transitions["z"]
    t = Z.rows // b.meta["sigma"] - 1
    return matpow(Z, t + 1) == identity(Z.rows)


def separation_report(b: ReductionBundle, max_total: int) -> dict:
    """Check empirically whether roots fall below and non-roots above ``(lambda+1)/2``.

    Only words ``lead . 1^{x1}...t^{xt}`` with ``sum(x) <= max_total`` are
    examined; the result is a report, not a proof.
    """
    from .pfa import Evaluator

    if b.transform != "strict":
        raise ValueError("separation is only defined for strict bundles")
    ev = Evaluator(b.pfa)
    t = b.meta["t"]
    ph = b.polynomial()
    lead = b.pfa.alphabet[0]
    thr = b.cutpoint
    violations = []
    checked = 0
    for xs in exponent_tuples(t, max_total):
        w = (lead,) + exponent_word(xs)
        val = ev(w)
        is_root = eval_poly(ph, (1, *xs)) == 0
        below = val < thr
        checked += 1
        if below != is_root:
            violations.append({"exponents": list(xs), "root": is_root, "value": str(val)})
    return {
        "threshold": str(thr),
        "checked": checked,
        "separated": not violations,
        "violations": violations,
    }


def exponent_tuples(t: int, max_total: int):
    """All ``(x1..xt)`` with ``sum <= max_total``, by total then descending lexicographic order."""
    for total in range(max_total + 1):
        for xs in _compositions(t, total):
            yield xs


def _compositions(t: int, total: int):
    if t == 0:
        if total == 0:
            yield ()
        return
    for first in range(total, -1, -1):
        for rest in _compositions(t - 1, total - first):
            yield (first,) + rest
