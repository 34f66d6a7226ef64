"""Degree of ambiguity of the support NFA of a PFA.

The automaton is classified with the two structural criteria:

* EDA: a useful state ``q`` and a word ``v`` with two distinct ``v``-labelled
  cycles ``q -> q`` (exponential ambiguity);
* IDA_d: a chain of ``d`` dumbbells ``(r, s, v)``, each with ``v``-paths
  ``r -> r``, ``r -> s`` and ``s -> s``, linked by paths ``s_k -> r_{k+1}``
  (ambiguity growing at least like ``|w|^d``).

States keep their PFA indices throughout, so witnesses can be read against
the original automaton.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .pfa import PFA, LanguageSpec, Word, format_word


class AmbiguityInconsistency(RuntimeError):
    """The dumbbell chain graph is cyclic although EDA does not hold."""


@dataclass(frozen=True)
class SupportNFA:
    states: frozenset
    alphabet: tuple
    delta: frozenset  # of (p, a, q)
    initial_states: frozenset
    final_states: frozenset
    _succ: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        succ: dict = {q: {a: [] for a in self.alphabet} for q in self.states}
        for p, a, q in sorted(self.delta):
            succ[p][a].append(q)
        object.__setattr__(self, "_succ", succ)

    def successors(self, p: int, a: str) -> list[int]:
        return self._succ[p][a]

    def out_edges(self, p: int) -> Iterable[tuple[str, int]]:
        for a in self.alphabet:
            for q in self._succ[p][a]:
                yield a, q

    def loop_letters(self, q: int) -> frozenset:
        return frozenset(a for a in self.alphabet if q in self._succ[q][a])

    def is_deterministic(self) -> bool:
        return len(self.initial_states) <= 1 and all(
            len(self._succ[p][a]) <= 1 for p in self.states for a in self.alphabet
        )

    def to_dict(self) -> dict:
        return {
            "states": sorted(self.states),
            "alphabet": list(self.alphabet),
            "delta": [[p, a, q] for p, a, q in sorted(self.delta)],
            "initial": sorted(self.initial_states),
            "final": sorted(self.final_states),
        }


@dataclass(frozen=True)
class Dumbbell:
    r: int
    s: int
    v: Word


@dataclass(frozen=True)
class Chain:
    dumbbells: tuple  # of Dumbbell
    links: tuple  # link words u_2..u_d; links[k] joins dumbbells[k].s to dumbbells[k+1].r

    def __len__(self) -> int:
        return len(self.dumbbells)


@dataclass(frozen=True)
class AmbiguityReport:
    kind: str  # unambiguous | finite | polynomial | exponential
    degree: int | None = None
    eda_witness: tuple | None = None  # (q, v)
    chain: Chain | None = None
    restricted_language: bool = False

    @property
    def label(self) -> str:
        return f"polynomial({self.degree})" if self.kind == "polynomial" else self.kind

    def to_dict(self) -> dict:
        d: dict = {"class": self.kind, "degree": self.degree}
        if self.eda_witness is not None:
            q, v = self.eda_witness
            d["eda_witness"] = {"state": q, "word": format_word(v), "letters": list(v)}
        else:
            d["eda_witness"] = None
        if self.chain is not None:
            d["chain"] = [
                {"r": b.r, "s": b.s, "word": format_word(b.v), "letters": list(b.v)} for b in self.chain.dumbbells
            ]
            d["links"] = [{"word": format_word(u), "letters": list(u)} for u in self.chain.links]
        else:
            d["chain"] = None
        d["restricted_language"] = self.restricted_language
        if self.restricted_language:
            d["note"] = "criteria applied over the full alphabet; ambiguity over the attached language may be lower"
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True, indent=2)


# -- construction -----------------------------------------------------------

def support_nfa(p: PFA) -> SupportNFA:
    delta = frozenset(
        (i, a, j) for a in p.alphabet for i, j, x in p.transitions[a].items() if x != 0
    )
    return SupportNFA(
        states=frozenset(range(p.n)),
        alphabet=p.alphabet,
        delta=delta,
        initial_states=frozenset(i for i, x in enumerate(p.initial) if x > 0),
        final_states=frozenset(p.final_states()),
    )


def _reach(start: Iterable[int], adj: dict) -> set[int]:
    seen = set(start)
    stack = list(seen)
    while stack:
        p = stack.pop()
        for q in adj.get(p, ()):
            if q not in seen:
                seen.add(q)
                stack.append(q)
    return seen


def trim(nfa: SupportNFA) -> SupportNFA:
    """Keep only useful states: reachable from an initial and co-reachable to a final state."""
    fwd: dict = {}
    bwd: dict = {}
    for p, _, q in nfa.delta:
        fwd.setdefault(p, set()).add(q)
        bwd.setdefault(q, set()).add(p)
    useful = _reach(nfa.initial_states, fwd) & _reach(nfa.final_states, bwd)
    return SupportNFA(
        states=frozenset(useful),
        alphabet=nfa.alphabet,
        delta=frozenset(t for t in nfa.delta if t[0] in useful and t[2] in useful),
        initial_states=nfa.initial_states & useful,
        final_states=nfa.final_states & useful,
    )


# -- graph helpers ----------------------------------------------------------

def strongly_connected_components(nfa: SupportNFA) -> dict[int, int]:
    """Map each state to a component id (iterative Tarjan)."""
    adj = {p: sorted({q for _, q in nfa.out_edges(p)}) for p in nfa.states}
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    comp: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    counter = 0
    ncomp = 0
    for root in sorted(nfa.states):
        if root in index:
            continue
        work = [(root, iter(adj[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(adj[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp[w] = ncomp
                    if w == v:
                        break
                ncomp += 1
    return comp


def _bfs_word(start, goal, step) -> Word | None:
    """Shortest, then lexicographically least, word from ``start`` to a goal node.

    ``step(node)`` yields ``(letter, next)`` pairs in a fixed order.
    """
    if goal(start):
        return ()
    parent = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        for a, nxt in step(node):
            if nxt in parent:
                continue
            parent[nxt] = (node, a)
            if goal(nxt):
                word = []
                cur = nxt
                while parent[cur] is not None:
                    cur, letter = parent[cur]
                    word.append(letter)
                return tuple(reversed(word))
            queue.append(nxt)
    return None


def path_word(nfa: SupportNFA, p: int, q: int, letters: frozenset | None = None) -> Word | None:
    """Shortest word labelling a path ``p -> q``, optionally using only ``letters``."""
    alphabet = [a for a in nfa.alphabet if letters is None or a in letters]

    def step(x):
        for a in alphabet:
            for y in nfa.successors(x, a):
                yield a, y

    return _bfs_word(p, lambda x: x == q, step)


def count_paths(nfa: SupportNFA, p: int, w: Sequence[str], q: int) -> int:
    """Number of distinct ``w``-labelled paths from ``p`` to ``q``."""
    counts = {p: 1}
    for a in w:
        nxt: dict[int, int] = {}
        for x, c in counts.items():
            for y in nfa.successors(x, a):
                nxt[y] = nxt.get(y, 0) + c
        counts = nxt
    return counts.get(q, 0)


def accepting_paths(nfa: SupportNFA, w: Sequence[str]) -> int:
    counts = {p: 1 for p in nfa.initial_states}
    for a in w:
        nxt: dict[int, int] = {}
        for x, c in counts.items():
            for y in nfa.successors(x, a):
                nxt[y] = nxt.get(y, 0) + c
        counts = nxt
    return sum(c for x, c in counts.items() if x in nfa.final_states)


# -- EDA --------------------------------------------------------------------

def has_eda(nfa: SupportNFA) -> tuple[int, Word] | None:
    """A useful state ``q`` and word ``v`` with two distinct ``v``-cycles at ``q``, if any.

    Both cycles stay inside the strongly connected component of ``q``, so
    the pair automaton is only explored within each component.
    """
    comp = strongly_connected_components(nfa)
    members: dict[int, list[int]] = {}
    for q, c in comp.items():
        members.setdefault(c, []).append(q)
    for q in sorted(nfa.states):
        if len(members[comp[q]]) < 2:
            # Single-state components carry at most one loop per letter.
            continue
        cq = comp[q]

        def step(node, cq=cq):
            (x, y), split = node
            for a in nfa.alphabet:
                for x2 in nfa.successors(x, a):
                    if comp[x2] != cq:
                        continue
                    for y2 in nfa.successors(y, a):
                        if comp[y2] != cq:
                            continue
                        yield a, ((x2, y2), split or x2 != y2)

        v = _bfs_word(((q, q), False), lambda n, q=q: n == ((q, q), True), step)
        if v is not None:
            return q, v
    return None


def eda_context(nfa: SupportNFA, q: int) -> tuple[Word, Word]:
    """Shortest words leading into ``q`` from an initial state and from ``q`` to a final state."""

    def step(x):
        for a, y in nfa.out_edges(x):
            yield a, y

    best_in = None
    for i in sorted(nfa.initial_states):
        w = path_word(nfa, i, q)
        if w is not None and (best_in is None or (len(w), w) < (len(best_in), best_in)):
            best_in = w
    out = _bfs_word(q, lambda x: x in nfa.final_states, step)
    if best_in is None or out is None:
        raise ValueError(f"state {q} is not useful")
    return best_in, out


# -- dumbbells and IDA ------------------------------------------------------

def _dumbbell_word(nfa: SupportNFA, comp: dict, r: int, s: int) -> Word | None:
    cr, cs = comp[r], comp[s]

    def step(node):
        x, y, z = node
        for a in nfa.alphabet:
            xs = [x2 for x2 in nfa.successors(x, a) if comp[x2] == cr]
            if not xs:
                continue
            zs = [z2 for z2 in nfa.successors(z, a) if comp[z2] == cs]
            if not zs:
                continue
            for x2 in xs:
                for y2 in nfa.successors(y, a):
                    for z2 in zs:
                        yield a, (x2, y2, z2)

    # v = ε would need r = s, so insist on at least one letter.
    start = (r, r, s)
    goal = (r, s, s)
    best = None
    for a, nxt in step(start):
        w = _bfs_word(nxt, lambda n: n == goal, step)
        if w is not None:
            cand = (a,) + w
            if best is None or (len(cand), cand) < (len(best), best):
                best = cand
    return best


def dumbbell_pairs(nfa: SupportNFA) -> dict[tuple[int, int], Dumbbell]:
    """All ordered pairs ``(r, s)``, ``r != s``, carrying a dumbbell, with one shortest word each.

    Found by exploring the three-fold product automaton from ``(r, r, s)``
    to ``(r, s, s)``.
    """
    comp = strongly_connected_components(nfa)
    fwd = {p: {q for _, q in nfa.out_edges(p)} for p in nfa.states}
    on_cycle = {q for q in nfa.states if q in _reach(fwd[q], fwd)}
    out = {}
    for r in sorted(on_cycle):
        reach_r = _reach(fwd[r], fwd)
        for s in sorted(reach_r & on_cycle):
            if s == r:
                continue
            v = _dumbbell_word(nfa, comp, r, s)
            if v is not None:
                out[(r, s)] = Dumbbell(r, s, v)
    return out


def _ida_explicit(nfa: SupportNFA) -> tuple[int, Chain]:
    pairs = dumbbell_pairs(nfa)
    if not pairs:
        return 0, Chain((), ())
    fwd = {p: {q for _, q in nfa.out_edges(p)} for p in nfa.states}
    reach = {p: _reach([p], fwd) for p in nfa.states}  # reflexive
    nodes = sorted(pairs)
    succ = {n: [m for m in nodes if m[0] in reach[n[1]]] for n in nodes}
    # Longest path in nodes, with cycle detection.
    best: dict = {}
    nxt: dict = {}
    state: dict = {}
    for root in nodes:
        if root in best:
            continue
        stack = [(root, iter(succ[root]))]
        state[root] = "open"
        while stack:
            node, it = stack[-1]
            pushed = False
            for m in it:
                st = state.get(m)
                if st == "open":
                    raise AmbiguityInconsistency(
                        f"dumbbell chain graph has a cycle through {node} -> {m} while EDA is absent"
                    )
                if st is None:
                    state[m] = "open"
                    stack.append((m, iter(succ[m])))
                    pushed = True
                    break
            if pushed:
                continue
            stack.pop()
            state[node] = "done"
            length, follow = 1, None
            for m in succ[node]:
                if best[m] + 1 > length:
                    length, follow = best[m] + 1, m
            best[node], nxt[node] = length, follow
    start = max(nodes, key=lambda n: (best[n], [-x for x in n]))
    chain_nodes = [start]
    while nxt[chain_nodes[-1]] is not None:
        chain_nodes.append(nxt[chain_nodes[-1]])
    links = tuple(path_word(nfa, a[1], b[0]) for a, b in zip(chain_nodes, chain_nodes[1:]))
    return best[start], Chain(tuple(pairs[n] for n in chain_nodes), links)


def _ida_acyclic(nfa: SupportNFA) -> tuple[int, Chain]:
    """IDA degree when every component is a single state.

    A dumbbell ``(r, s)`` then needs every letter of ``v`` to loop on both
    ``r`` and ``s``, so it exists iff ``s`` is reachable from ``r`` using only
    letters in ``loops(r) & loops(s)``.  A dynamic programme over reverse
    topological order finds the longest chain without listing all pairs.
    """
    states = sorted(nfa.states)
    loops = {q: nfa.loop_letters(q) for q in states}
    out = {q: [(a, y) for a, y in nfa.out_edges(q) if y != q] for q in states}
    indeg = {q: 0 for q in states}
    for q in states:
        for _, y in out[q]:
            indeg[y] += 1
    order = []
    queue = deque(q for q in states if indeg[q] == 0)
    while queue:
        q = queue.popleft()
        order.append(q)
        for _, y in out[q]:
            indeg[y] -= 1
            if indeg[y] == 0:
                queue.append(y)

    loop_sets = sorted({loops[q] for q in states}, key=lambda k: sorted(k))
    cand = {}
    for q in states:
        ks = {loops[q] & L for L in loop_sets}
        cand[q] = sorted((k for k in ks if k), key=lambda k: sorted(k))
    all_ks = sorted({k for q in states for k in cand[q]}, key=lambda k: sorted(k))

    NEG = -1
    F = {}  # longest chain starting with a dumbbell at r
    F_arg = {}
    G = {}  # longest chain starting at some r2 reachable from s (reflexive), 0 if none
    G_arg = {}
    H = {k: {} for k in all_ks}  # best G(s) over s reachable in E_k with k <= loops(s)
    H_arg = {k: {} for k in all_ks}
    for q in reversed(order):
        f, f_arg = NEG, None
        for k in cand[q]:
            hk = H[k]
            for a, y in out[q]:
                if a in k and hk[y] > NEG and hk[y] + 1 > f:
                    f, f_arg = hk[y] + 1, (k, H_arg[k][y])
        F[q], F_arg[q] = f, f_arg
        g, g_arg = max(f, 0), (q if f > 0 else None)
        for _, y in out[q]:
            if G[y] > g:
                g, g_arg = G[y], G_arg[y]
        G[q], G_arg[q] = g, g_arg
        for k in all_ks:
            h, h_arg = (G[q], q) if k <= loops[q] else (NEG, None)
            for a, y in out[q]:
                if a in k and H[k][y] > h:
                    h, h_arg = H[k][y], H_arg[k][y]
            H[k][q], H_arg[k][q] = h, h_arg

    best = max((F[q] for q in states), default=NEG)
    if best <= 0:
        return 0, Chain((), ())
    r = min(q for q in states if F[q] == best)
    dumbbells, links = [], []
    while True:
        _, s = F_arg[r]
        v = path_word(nfa, r, s, loops[r] & loops[s])
        dumbbells.append(Dumbbell(r, s, v))
        nxt_r = G_arg[s]
        if nxt_r is None:
            break
        links.append(path_word(nfa, s, nxt_r))
        r = nxt_r
    assert len(dumbbells) == best
    return best, Chain(tuple(dumbbells), tuple(links))


def ida_degree(nfa: SupportNFA, method: str = "auto") -> tuple[int, Chain]:
    """Largest ``d`` with IDA_d and a chain witnessing it (``nfa`` trimmed, EDA absent).

    ``method`` is ``"auto"``, ``"explicit"`` (list every dumbbell pair) or
    ``"acyclic"`` (requires single-state components).
    """
    comp = strongly_connected_components(nfa)
    acyclic = len(set(comp.values())) == len(nfa.states)
    if method == "auto":
        method = "acyclic" if acyclic else "explicit"
    if method == "acyclic":
        if not acyclic:
            raise ValueError("acyclic method needs every component to be a single state")
        return _ida_acyclic(nfa)
    if method == "explicit":
        return _ida_explicit(nfa)
    raise ValueError(f"unknown method {method!r}")


def is_ambiguous(nfa: SupportNFA) -> bool:
    """Some word has two accepting paths (pair automaton over useful states)."""
    init = [(p, q) for p in nfa.initial_states for q in nfa.initial_states]
    seen = set(init)
    stack = list(init)
    edges: dict = {}
    while stack:
        x, y = stack.pop()
        for a in nfa.alphabet:
            for x2 in nfa.successors(x, a):
                for y2 in nfa.successors(y, a):
                    edges.setdefault((x2, y2), set()).add((x, y))
                    if (x2, y2) not in seen:
                        seen.add((x2, y2))
                        stack.append((x2, y2))
    finals = [n for n in seen if n[0] in nfa.final_states and n[1] in nfa.final_states]
    co = _reach(finals, edges)
    return any(x != y for x, y in co)


def classify(p: PFA | SupportNFA, lang: LanguageSpec | None = None) -> AmbiguityReport:
    nfa = support_nfa(p) if isinstance(p, PFA) else p
    nfa = trim(nfa)
    restricted = lang is not None and lang.kind != "full"
    eda = has_eda(nfa)
    if eda is not None:
        return AmbiguityReport("exponential", None, eda_witness=eda, restricted_language=restricted)
    d, chain = ida_degree(nfa)
    if d >= 1:
        return AmbiguityReport("polynomial", d, chain=chain, restricted_language=restricted)
    kind = "finite" if is_ambiguous(nfa) else "unambiguous"
    return AmbiguityReport(kind, 0, restricted_language=restricted)


# -- witness replay ---------------------------------------------------------

def replay_eda(nfa: SupportNFA, witness: tuple[int, Word]) -> bool:
    q, v = witness
    return count_paths(nfa, q, v, q) >= 2


def replay_dumbbell(nfa: SupportNFA, b: Dumbbell) -> bool:
    return (
        b.r != b.s
        and count_paths(nfa, b.r, b.v, b.r) >= 1
        and count_paths(nfa, b.r, b.v, b.s) >= 1
        and count_paths(nfa, b.s, b.v, b.s) >= 1
    )


def replay_chain(nfa: SupportNFA, chain: Chain) -> bool:
    if len(chain.links) != max(len(chain.dumbbells) - 1, 0):
        return False
    if not all(b.r in nfa.states and b.s in nfa.states for b in chain.dumbbells):
        return False
    if not all(replay_dumbbell(nfa, b) for b in chain.dumbbells):
        return False
    return all(
        count_paths(nfa, a.s, u, b.r) >= 1
        for a, b, u in zip(chain.dumbbells, chain.dumbbells[1:], chain.links)
    )
