"""Extraction algorithms on ordered sequences.

Monotone runs (Erdos-Szekeres), doubling subsequences, h-growth checks, the
stepping-down prefix construction and the recursion built on it, strong
Erdos-Hajnal splits of bipartite relations and recursive linearization of
tournaments. Every extractor re-checks its certificate before returning.
"""

from __future__ import annotations

import random
import time
from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Sequence

from .errors import DomainError, PreconditionError, UndeterminedPattern
from .exactnum import eval_sign, exact, log2
from .relcore.relations import KRelation, Truth, is_indiscernible
from .relcore.report import ExtractionReport
from .relcore.search import max_indiscernible

EXHAUSTIVE_SPLIT_LIMIT = 16

# ---------------------------------------------------------------------------
# Erdos-Szekeres


def _longest_runs(s: Sequence):
    """Longest increasing / decreasing run ending at each index, with links."""
    n = len(s)
    inc = [1] * n
    dec = [1] * n
    inc_prev = [-1] * n
    dec_prev = [-1] * n
    for j in range(n):
        for i in range(j):
            if s[i] < s[j] and inc[i] + 1 > inc[j]:
                inc[j], inc_prev[j] = inc[i] + 1, i
            elif s[i] > s[j] and dec[i] + 1 > dec[j]:
                dec[j], dec_prev[j] = dec[i] + 1, i
    return inc, inc_prev, dec, dec_prev


def _walk(end: int, prev: list) -> list:
    out = []
    while end != -1:
        out.append(end)
        end = prev[end]
    return out[::-1]


def is_monotone_run(values: Sequence, direction: str) -> bool:
    pairs = list(zip(values, values[1:]))
    if direction == "increasing":
        return all(a < b for a, b in pairs)
    return all(a > b for a, b in pairs)


def erdos_szekeres(s: Sequence, r: int, s_len: int) -> ExtractionReport:
    """An increasing run of length >= r or a decreasing run of length >= s_len.

    The run is the longest of its kind (label-pair construction). Inputs
    shorter than (r-1)(s_len-1)+1 are accepted; the report then says
    whether the guarantee happened to be met.
    """
    t0 = time.perf_counter()
    if len(set(s)) != len(s):
        raise DomainError("erdos_szekeres needs pairwise distinct elements")
    if r < 1 or s_len < 1:
        raise DomainError("run lengths must be positive")
    n = len(s)
    if n == 0:
        return ExtractionReport({"length": 0, "r": r, "s": s_len}, [], "monotone", True, True, {"guarantee_met": False})
    inc, inc_prev, dec, dec_prev = _longest_runs(s)
    best_inc = max(range(n), key=lambda j: (inc[j], -j))
    best_dec = max(range(n), key=lambda j: (dec[j], -j))
    if inc[best_inc] >= r:
        idx, direction = _walk(best_inc, inc_prev), "increasing"
    elif dec[best_dec] >= s_len:
        idx, direction = _walk(best_dec, dec_prev), "decreasing"
    elif inc[best_inc] >= dec[best_dec]:
        idx, direction = _walk(best_inc, inc_prev), "increasing"
    else:
        idx, direction = _walk(best_dec, dec_prev), "decreasing"
    vals = [s[i] for i in idx]
    met = (direction == "increasing" and len(idx) >= r) or (direction == "decreasing" and len(idx) >= s_len)
    report = ExtractionReport(
        input={"length": n, "r": r, "s": s_len},
        positions=[i + 1 for i in idx],
        certificate="monotone",
        verified=is_monotone_run(vals, direction),
        measured={
            "direction": direction,
            "length": len(idx),
            "longest_increasing": inc[best_inc],
            "longest_decreasing": dec[best_dec],
            "guarantee_met": met,
            "guaranteed_input": n >= (r - 1) * (s_len - 1) + 1,
        },
    )
    report.wall_clock_s = time.perf_counter() - t0
    return report


# ---------------------------------------------------------------------------
# doubling subsequences


def is_doubling(values: Sequence, variant: str = "forward", strict: bool = False) -> bool:
    """Check the doubling condition on ``values`` (strictly increasing).

    forward:  b2 - b1 >= 2 and b_{i+1} - b1 >= 2(b_i - b1)
    mirrored: bn - b_{n-1} >= 2 and bn - b_{n-i-1} >= 2(bn - b_{n-i})
    ``strict`` asks for first gap >= 3 and each later distance >= 2*previous + 1.
    """
    b = list(values)
    if any(x >= y for x, y in zip(b, b[1:])):
        return False
    if len(b) < 2:
        return True
    if variant == "mirrored":
        b = [-x for x in reversed(b)]
    first, extra = (3, 1) if strict else (2, 0)
    if b[1] - b[0] < first:
        return False
    return all(b[i + 1] - b[0] >= 2 * (b[i] - b[0]) + extra for i in range(1, len(b) - 1))


def _greedy_chain(s: Sequence, anchor: int, first: int, extra: int) -> list:
    """Greedy-earliest forward chain from ``anchor``; maximal length for that anchor.

    Taking the smallest admissible next value never hurts: every later
    threshold is monotone in the current distance.
    """
    chain = [anchor]
    base = s[anchor]
    need = base + first
    while True:
        j = bisect_left(s, need, lo=chain[-1] + 1)
        if j >= len(s):
            return chain
        chain.append(j)
        need = base + 2 * (s[j] - base) + extra


def doubling_subsequence(s: Sequence, n: int, strict: bool = False) -> ExtractionReport:
    """A length-n doubling subsequence (forward or mirrored) of an increasing ``s``.

    For every anchor the greedy chain is the longest possible, so the
    search is exact: the report's ``max_length`` is the true optimum over
    both variants. Guaranteed to reach n when len(s) >= 4**n.
    """
    t0 = time.perf_counter()
    vals = [exact(x) for x in s]
    if any(x >= y for x, y in zip(vals, vals[1:])):
        raise DomainError("doubling_subsequence needs a strictly increasing sequence")
    first, extra = (3, 1) if strict else (2, 0)
    best: tuple = (0, "forward", [])
    L = len(vals)
    neg = [-x for x in reversed(vals)]
    for variant, seq in (("forward", vals), ("mirrored", neg)):
        for a in range(L):
            chain = _greedy_chain(seq, a, first, extra)
            if len(chain) > best[0]:
                if variant == "mirrored":
                    chain = sorted(L - 1 - i for i in chain)
                best = (len(chain), variant, chain)
    max_len, variant, chain = best
    if max_len > n:
        chain = chain[:n] if variant == "forward" else chain[-n:]
    out = [vals[i] for i in chain]
    ok = is_doubling(out, variant, strict)
    report = ExtractionReport(
        input={"length": L, "n": n, "strict": strict},
        positions=[i + 1 for i in chain],
        certificate="doubling",
        verified=ok and len(chain) >= n,
        measured={"variant": variant, "length": len(chain), "max_length": max_len, "guaranteed_input": L >= 4**n},
    )
    if len(chain) < n:
        report.notes.append(f"longest doubling subsequence has length {max_len} < {n}")
    report.wall_clock_s = time.perf_counter() - t0
    return report


# ---------------------------------------------------------------------------
# h-growth


def is_h_growing(s: Sequence, h) -> Truth:
    """a_1 >= h and a_{i+1} >= a_i**h, exactly; None if a comparison is unsettled."""
    h = exact(h)
    if h <= 2:
        raise DomainError("h must exceed 2")
    vals = [exact(x) for x in s]
    if any(x <= 0 for x in vals):
        raise DomainError("h-growth is defined for positive elements")
    if not vals:
        return True
    if vals[0] < h:
        return False
    out: Truth = True
    for a, b in zip(vals, vals[1:]):
        if isinstance(h, int):
            ok = b >= Fraction(a) ** h
        else:
            # b >= a^h  iff  log2(b) - h*log2(a) >= 0, an exact linear-log sign
            v = eval_sign(log2(b) - h * log2(a)).value
            ok = None if v is None else v >= 0
        if ok is False:
            return False
        if ok is None:
            out = None
    return out


# ---------------------------------------------------------------------------
# stepping down


@dataclass
class SteppingDownCertificate:
    positions: list  # 1-based positions of b_1..b_m in the input
    tail_sizes: list  # |c_r| after each round
    pool_sizes: list  # tail size before the pigeonhole, head removed
    probes_per_round: list  # number of probes containing the new head
    pattern_counts: list  # distinct truth patterns per round
    excluded: list = field(default_factory=list)  # positions dropped as undetermined
    verified: bool = False

    def contraction_ok(self) -> bool:
        """|c_{r+1}| * #patterns >= |pool| every round (pigeonhole)."""
        return all(
            t * max(c, 1) >= p for t, p, c in zip(self.tail_sizes, self.pool_sizes, self.pattern_counts)
        )

    def to_json(self) -> dict:
        return {
            "positions": self.positions,
            "tail_sizes": self.tail_sizes,
            "pool_sizes": self.pool_sizes,
            "probes_per_round": self.probes_per_round,
            "pattern_counts": self.pattern_counts,
            "excluded": self.excluded,
            "contraction_ok": self.contraction_ok(),
            "verified": self.verified,
        }


def prefix_constant(values: Sequence, E: KRelation) -> Truth:
    """For every (k-1)-subset P and later b, b': E(P, b) == E(P, b')."""
    k = E.arity
    n = len(values)
    out: Truth = True
    for P in combinations(range(n), k - 1):
        head = tuple(values[i] for i in P)
        seen = None
        for j in range(P[-1] + 1, n):
            v = E(*head, values[j])
            if v is None:
                out = None
                continue
            if seen is None:
                seen = v
            elif v != seen:
                return False
    return out


def _stepping_indices(values: Sequence, E: KRelation):
    k = E.arity
    n = len(values)
    chosen = list(range(min(k - 2, n)))
    tail = list(range(k - 2, n))
    cert = SteppingDownCertificate([], [], [], [], [])
    while tail:
        head, pool = tail[0], tail[1:]
        chosen.append(head)
        probes = [P for P in combinations(chosen, k - 1) if P[-1] == head]
        classes: dict = {}
        order = []
        for x in pool:
            try:
                pat = tuple(_truth(E, [values[i] for i in P] + [values[x]]) for P in probes)
            except UndeterminedPattern:
                cert.excluded.append(x + 1)
                continue
            if pat not in classes:
                classes[pat] = []
                order.append(pat)
            classes[pat].append(x)
        evaluated = sum(len(v) for v in classes.values())
        if order:
            best = max(order, key=lambda p: len(classes[p]))  # first-seen wins ties
            tail = classes[best]
        else:
            tail = []
        cert.pool_sizes.append(evaluated)
        cert.tail_sizes.append(len(tail))
        cert.probes_per_round.append(len(probes))
        cert.pattern_counts.append(len(order))
    return chosen, cert


def _truth(E, args):
    v = E(*args)
    if v is None:
        raise UndeterminedPattern(f"{E.name}{tuple(args)} is undetermined")
    return 1 if v else 0


def stepping_down(s: Sequence, E: KRelation):
    """Greedy prefix b_1, ..., b_m on which E(P, b) does not depend on the
    choice of b after P, for every (k-1)-subset P.

    Starts from the first k-2 elements; each round moves the tail's first
    element into the prefix and keeps the largest truth-pattern class of
    the rest against the new probes (earliest-seen pattern on ties).
    """
    k = E.arity
    if k < 3:
        raise DomainError("stepping_down needs arity >= 3")
    if len(s) < k:
        raise DomainError(f"sequence of length {len(s)} shorter than arity {k}")
    idx, cert = _stepping_indices(s, E)
    cert.positions = [i + 1 for i in idx]
    prefix = [s[i] for i in idx]
    cert.verified = prefix_constant(prefix, E) is True and cert.contraction_ok()
    return prefix, cert


def _via_stepping(values: list, E: KRelation, budget_nodes, budget_ms, log: list) -> list:
    """Indices (into ``values``) of an E-indiscernible subsequence."""
    k = E.arity
    if len(values) < k:
        return list(range(len(values)))
    if k <= 2:
        rep = max_indiscernible(values, E, budget_nodes, budget_ms)
        log.append({"arity": k, "input": len(values), "length": rep.length, "exhaustive": rep.exhaustive})
        return [p - 1 for p in rep.positions]
    idx, cert = _stepping_indices(values, E)
    log.append(
        {
            "arity": k,
            "input": len(values),
            "prefix": len(idx),
            "tail_sizes": cert.tail_sizes,
            "pattern_counts": cert.pattern_counts,
            "contraction_ok": cert.contraction_ok(),
        }
    )
    if len(idx) <= k - 1:
        return idx
    last = values[idx[-1]]
    rest = [values[i] for i in idx[:-1]]
    Ep = KRelation(k - 1, lambda *xs: E(*xs, last), f"{E.name}|b")
    # prefix constancy makes any later prefix element an equivalent parameter
    if len(rest) >= k:
        alt = values[idx[-2]]
        agree = all(
            E(*xs, last) == E(*xs, alt) for xs in combinations(rest[:-1], k - 1)
        )
        log[-1]["parameter_crosscheck"] = agree
    sub = _via_stepping(rest, Ep, budget_nodes, budget_ms, log)
    return [idx[i] for i in sub] + [idx[-1]]


def ramsey_via_stepping(
    s: Sequence, E: KRelation, budget_nodes: int | None = None, budget_ms: float | None = None, seed=None
) -> ExtractionReport:
    """E-indiscernible subsequence by iterated stepping down.

    Arity k >= 3: take the stepping-down prefix b_1..b_{m+1}, recurse on
    b_1..b_m with E'(x) = E(x, b_{m+1}) and append b_{m+1}. Arity 2 uses the
    exact search (under the given budget).
    """
    t0 = time.perf_counter()
    k = E.arity
    if k < 2:
        raise DomainError("ramsey_via_stepping needs arity >= 2")
    if len(s) < k:
        raise DomainError(f"sequence of length {len(s)} shorter than arity {k}")
    log: list = []
    idx = sorted(_via_stepping(list(s), E, budget_nodes, budget_ms, log))
    out = [s[i] for i in idx]
    verified = len(out) < k or is_indiscernible(out, E) is True
    report = ExtractionReport(
        input={"length": len(s), "relation": E.name, "arity": k},
        positions=[i + 1 for i in idx],
        certificate="indiscernible",
        verified=verified,
        exhaustive=False,
        measured={"length": len(idx), "levels": log},
        seed=seed,
    )
    report.wall_clock_s = time.perf_counter() - t0
    return report


# ---------------------------------------------------------------------------
# strong Erdos-Hajnal splits


@dataclass(frozen=True)
class Split:
    V1: tuple
    V2: tuple
    polarity: bool
    delta: Fraction
    exhaustive: bool

    def to_json(self) -> dict:
        return {
            "V1": list(self.V1),
            "V2": list(self.V2),
            "polarity": self.polarity,
            "delta": str(self.delta),
            "exhaustive": self.exhaustive,
        }


def is_homogeneous_pair(A, B, E, polarity: bool) -> bool:
    return all(E(x, y) is polarity for x in A for y in B)


def _split_exhaustive(V1, V2, E):
    n1, n2 = len(V1), len(V2)
    best = None
    for pol in (True, False):
        rows = []
        for x in V1:
            m = 0
            for j, y in enumerate(V2):
                if E(x, y) is pol:
                    m |= 1 << j
            rows.append(m)
        full2 = (1 << n2) - 1
        common = [full2] * (1 << n1)
        for S in range(1, 1 << n1):
            low = S & -S
            common[S] = common[S ^ low] & rows[low.bit_length() - 1]
            c = bin(common[S]).count("1")
            if c == 0:
                continue
            a = bin(S).count("1")
            delta = min(Fraction(a, n1), Fraction(c, n2))
            key = (delta, a + c)
            if best is None or key > best[0]:
                best = (key, S, common[S], pol)
    if best is None:
        return None
    _, S, C, pol = best
    A = tuple(V1[i] for i in range(n1) if S >> i & 1)
    B = tuple(V2[j] for j in range(n2) if C >> j & 1)
    return A, B, pol


def _split_greedy(V1, V2, E):
    best = None
    for pol in (True, False):
        A, B = list(V1), list(V2)
        while A and B:
            bad_a = [sum(E(x, y) is not pol for y in B) for x in A]
            bad_b = [sum(E(x, y) is not pol for x in A) for y in B]
            if not any(bad_a):
                break
            ia = max(range(len(A)), key=lambda i: (bad_a[i] / len(B), -i))
            ib = max(range(len(B)), key=lambda i: (bad_b[i] / len(A), -i))
            # drop the vertex whose removal costs the smaller fraction of its side
            if bad_a[ia] / len(B) * len(A) >= bad_b[ib] / len(A) * len(B):
                if len(A) > 1:
                    A.pop(ia)
                else:
                    B.pop(ib)
            else:
                if len(B) > 1:
                    B.pop(ib)
                else:
                    A.pop(ia)
        if A and B:
            delta = min(Fraction(len(A), len(V1)), Fraction(len(B), len(V2)))
            key = (delta, len(A) + len(B))
            if best is None or key > best[0]:
                best = (key, tuple(A), tuple(B), pol)
    return best[1:] if best else None


def strong_eh_split(V1: Sequence, V2: Sequence, E: Callable, exhaustive_limit: int = EXHAUSTIVE_SPLIT_LIMIT) -> Split:
    """Homogeneous V1' x V2' maximizing min(|V1'|/|V1|, |V2'|/|V2|).

    Exact over all subsets of V1 (bitmask intersection of rows) when
    |V1| + |V2| <= ``exhaustive_limit``; greedy peeling of the most mixed
    vertex otherwise.
    """
    V1, V2 = tuple(V1), tuple(V2)
    if not V1 or not V2:
        raise DomainError("strong_eh_split needs nonempty sides")
    exhaustive = len(V1) + len(V2) <= exhaustive_limit
    found = _split_exhaustive(V1, V2, E) if exhaustive else _split_greedy(V1, V2, E)
    A, B, pol = found
    if not is_homogeneous_pair(A, B, E, pol):
        raise AssertionError("split is not homogeneous")
    delta = min(Fraction(len(A), len(V1)), Fraction(len(B), len(V2)))
    return Split(A, B, pol, delta, exhaustive)


# ---------------------------------------------------------------------------
# tournaments


class Tournament:
    """Complete orientation on vertices 1..n; ``E(i, j)`` means i -> j."""

    def __init__(self, n: int, edges):
        self.n = n
        adj = [[False] * (n + 1) for _ in range(n + 1)]
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                adj[i][j] = bool(edges(i, j))
        for i in range(1, n + 1):
            if adj[i][i]:
                raise DomainError(f"tournament has a loop at {i}")
            for j in range(i + 1, n + 1):
                if adj[i][j] == adj[j][i]:
                    raise DomainError(f"vertices {i},{j} need exactly one arc")
        self._adj = adj

    def E(self, i: int, j: int) -> bool:
        return self._adj[i][j]

    __call__ = E

    @property
    def vertices(self) -> list:
        return list(range(1, self.n + 1))

    @classmethod
    def from_bitstring(cls, n: int, bits: str) -> "Tournament":
        """Row-major upper triangle: bit for (i, j), i < j, is 1 iff i -> j."""
        bits = bits.strip()
        need = n * (n - 1) // 2
        if len(bits) != need or set(bits) - {"0", "1"}:
            raise DomainError(f"expected {need} bits of 0/1 for n={n}")
        up = {}
        pos = 0
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                up[i, j] = bits[pos] == "1"
                pos += 1
        return cls(n, lambda i, j: up[i, j] if i < j else (not up[j, i] if i > j else False))

    def to_bitstring(self) -> str:
        return "".join("1" if self.E(i, j) else "0" for i in range(1, self.n + 1) for j in range(i + 1, self.n + 1))

    @classmethod
    def random(cls, n: int, seed: int) -> "Tournament":
        rng = random.Random(seed)
        bits = "".join(rng.choice("01") for _ in range(n * (n - 1) // 2))
        return cls.from_bitstring(n, bits)

    @classmethod
    def transitive(cls, n: int) -> "Tournament":
        return cls(n, lambda i, j: i < j)

    def is_transitive_order(self, order: Sequence) -> bool:
        return all(self.E(a, b) for a, b in combinations(order, 2))

    def transitive_order(self, vertices: Sequence):
        """The linear order of ``vertices`` if the subtournament is transitive, else None."""
        score = {v: sum(self.E(v, w) for w in vertices if w != v) for v in vertices}
        order = sorted(vertices, key=lambda v: (-score[v], v))
        return order if self.is_transitive_order(order) else None


def _linearize(t: Tournament, V: list, log: list) -> list:
    if len(V) <= 1:
        return list(V)
    order = t.transitive_order(V)
    if order is not None:
        return order
    half = len(V) // 2
    B0, B1 = V[:half], V[half:]
    sp = strong_eh_split(B0, B1, t.E)
    log.append({"size": len(V), "V1": len(sp.V1), "V2": len(sp.V2), "delta": str(sp.delta), "exhaustive": sp.exhaustive})
    left = _linearize(t, list(sp.V1), log)
    right = _linearize(t, list(sp.V2), log)
    return left + right if sp.polarity else right + left


def linearize_tournament(t: Tournament) -> ExtractionReport:
    """A vertex subset on which the tournament is transitive, listed in its order.

    Already transitive vertex sets are returned whole; otherwise the set is
    cut into two halves, a homogeneous pair is taken from strong_eh_split and
    both sides are linearized recursively and concatenated in the direction
    of the pair's arcs.
    """
    if not isinstance(t, Tournament):
        raise DomainError("linearize_tournament needs a Tournament")
    t0 = time.perf_counter()
    log: list = []
    order = _linearize(t, t.vertices, log)
    report = ExtractionReport(
        input={"n": t.n, "bits": t.to_bitstring()},
        positions=sorted(order),
        certificate="transitive",
        verified=t.is_transitive_order(order),
        exhaustive=False,
        measured={"order": order, "length": len(order), "splits": log},
    )
    report.wall_clock_s = time.perf_counter() - t0
    return report


def max_transitive_subtournament(t: Tournament) -> list:
    """Largest transitive vertex subset by brute force (n <= 16)."""
    if t.n > 16:
        raise DomainError("brute force limited to 16 vertices")
    for size in range(t.n, 0, -1):
        for S in combinations(t.vertices, size):
            order = t.transitive_order(list(S))
            if order is not None:
                return order
    return []


def linearize_relation(vertices: Sequence, E: Callable) -> dict:
    """Reduce an arbitrary binary relation to a tournament and linearize.

    First a set homogeneous for E0 = E(x,y) or E(y,x), then inside it one
    homogeneous for E1 = E(x,y) and E(y,x). If E0 holds and E1 fails there,
    E is a tournament on the set and is linearized; otherwise E is constant
    on ordered pairs of distinct vertices of the set.
    """
    V = list(vertices)
    if len(set(V)) != len(V):
        raise DomainError("vertices must be distinct")
    if len(V) < 2:
        return {"kind": "trivial", "vertices": V}
    E0 = KRelation(2, lambda x, y: bool(E(x, y) or E(y, x)), "E0")
    r0 = max_indiscernible(V, E0)
    H = [V[p - 1] for p in r0.positions]
    e0 = r0.measured["polarity"]
    if len(H) < 2:
        return {"kind": "trivial", "vertices": H}
    E1 = KRelation(2, lambda x, y: bool(E(x, y) and E(y, x)), "E1")
    r1 = max_indiscernible(H, E1)
    H2 = [H[p - 1] for p in r1.positions]
    e1 = r1.measured["polarity"]
    if len(H2) < 2 or not e0:
        return {"kind": "empty" if not e0 else "trivial", "vertices": H2}
    if e1:
        return {"kind": "symmetric", "vertices": H2}
    t = Tournament(len(H2), lambda i, j: i != j and bool(E(H2[i - 1], H2[j - 1])))
    rep = linearize_tournament(t)
    order = [H2[i - 1] for i in rep.measured["order"]]
    ok = all(E(a, b) and not E(b, a) for a, b in combinations(order, 2))
    return {"kind": "tournament", "vertices": order, "verified": ok}
