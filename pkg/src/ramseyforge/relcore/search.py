"""Maximum indiscernible subsequences and exact tiny Ramsey numbers."""

from __future__ import annotations

import time
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Sequence

from ..errors import ArityError, DomainError, RefusedTooLarge
from ..exactnum import ExactNumber, exact
from .relations import KRelation, is_indiscernible
from .report import ExtractionReport

DEFAULT_RAMSEY_ESTIMATE_CAP = 2**32
DEFAULT_TOWER_BITS = 1 << 24


class _Budget:
    def __init__(self, nodes=None, ms=None):
        self.nodes = nodes
        self.deadline = None if ms is None else time.monotonic() + ms / 1000.0
        self.used = 0
        self.exhausted = False

    def tick(self) -> bool:
        self.used += 1
        if self.nodes is not None and self.used > self.nodes:
            self.exhausted = True
        elif self.deadline is not None and (self.used & 1023) == 0 and time.monotonic() > self.deadline:
            self.exhausted = True
        return not self.exhausted


_MISSING = object()


class TupleCache:
    """Memoised evaluation of a relation on index tuples of a fixed sequence."""

    def __init__(self, values: Sequence, E: KRelation):
        self.values = list(values)
        self.E = E
        self.memo: dict = {}
        self.undetermined = 0

    def __call__(self, idx: tuple):
        v = self.memo.get(idx, _MISSING)
        if v is _MISSING:
            v = self.E(*(self.values[i] for i in idx))
            if v is None:
                self.undetermined += 1
            self.memo[idx] = v
        return v


def _search_polarity(L: int, k: int, ev: TupleCache, pol: bool, budget: _Budget, reverse: bool = False):
    """Cliquer-style search: best[i] = max size of a pol-homogeneous
    subsequence using the last L-i positions of the scan order.

    ``reverse`` scans from the right end, which suits relations whose
    homogeneous sets are pinned down by their largest elements.
    Returns (size, sorted witness positions, complete).
    """
    if reverse:
        def rel(t):
            return ev(tuple(sorted(t)))
        order = list(range(L - 1, -1, -1))
    else:
        rel = ev
        order = list(range(L))
    best = [0] * (L + 1)
    witness: list[int] = []

    def narrow(chosen, j, rest):
        # keep x iff E(P + (j, x)) == pol for every (k-2)-subset P of chosen
        subsets = list(combinations(chosen, k - 2))
        if not subsets:
            return list(rest)
        out = []
        for x in rest:
            for sub in subsets:
                if rel(sub + (j, x)) is not pol:
                    break
            else:
                out.append(x)
        return out

    def path_bound(chosen, cands):
        # members after ``chosen`` form a chain in the DAG x -> y where
        # E(P, x, y) == pol for every (k-2)-subset P of chosen; the longest
        # path of that DAG bounds how many more can be added
        subsets = list(combinations(chosen, k - 2))
        lp = [1] * len(cands)
        for a in range(len(cands) - 2, -1, -1):
            x = cands[a]
            m = 0
            for b in range(a + 1, len(cands)):
                if lp[b] > m:
                    y = cands[b]
                    for P in subsets:
                        if rel(P + (x, y)) is not pol:
                            break
                    else:
                        m = lp[b]
            lp[a] = m + 1
        return max(lp, default=0)

    rank = {p: r for r, p in enumerate(order)}

    def extend(chosen, cands, target):
        if len(chosen) == target:
            return list(chosen)
        need = target - len(chosen)
        if k >= 3 and need >= 3 and len(chosen) >= k - 2 and len(cands) >= need:
            if path_bound(chosen, cands) < need:
                return None
        for pos, j in enumerate(cands):
            if len(cands) - pos < need or best[rank[j]] < need:
                return None
            if not budget.tick():
                return None
            found = extend(chosen + [j], narrow(chosen, j, cands[pos + 1:]), target)
            if found is not None:
                return found
            if budget.exhausted:
                return None
        return None

    for r in range(L - 1, -1, -1):
        i = order[r]
        target = best[r + 1] + 1
        found = extend([i], narrow([], i, order[r + 1:]), target) if target > 1 else [i]
        if budget.exhausted:
            return max(best), sorted(witness), False
        if found is not None:
            best[r] = target
            witness = found
        else:
            best[r] = best[r + 1]
    return best[0], sorted(witness), True


def _solve_polarity(L, k, ev, pol, budget: _Budget):
    """Run both scan orientations with geometrically growing node slices
    until one finishes; the outer budget caps the total."""
    best_size, best_wit = 0, []
    slice_nodes = 2048
    while True:
        for reverse in (False, True):
            sub = _Budget(slice_nodes)
            size, wit, complete = _search_polarity(L, k, ev, pol, sub, reverse)
            budget.used += sub.used - 1 if sub.exhausted else sub.used
            if size > best_size:
                best_size, best_wit = size, wit
            if complete:
                return best_size, best_wit, True
            if budget.nodes is not None and budget.used >= budget.nodes:
                budget.exhausted = True
            elif budget.deadline is not None and time.monotonic() > budget.deadline:
                budget.exhausted = True
            if budget.exhausted:
                return best_size, best_wit, False
        slice_nodes *= 4


def max_indiscernible(
    s: Sequence[ExactNumber],
    E: KRelation,
    budget_nodes: int | None = None,
    budget_ms: float | None = None,
    seed: int | None = None,
) -> ExtractionReport:
    """Longest E-indiscernible subsequence of ``s`` by branch and bound.

    Both polarities are searched (all-True first). The report's
    ``exhaustive`` flag says whether the length is proven maximal; when a
    budget runs out the result is only a lower bound.
    """
    t0 = time.perf_counter()
    k = E.arity
    L = len(s)
    if L < k:
        raise ArityError(f"sequence of length {L} shorter than arity {k}")
    ev = TupleCache(s, E)
    budget = _Budget(budget_nodes, budget_ms)
    results = {}
    exhaustive = True
    for pol in (True, False):
        if k == 1:
            wit = [i for i in range(L) if ev((i,)) is pol]
            results[pol] = (len(wit), wit)
            continue
        if k == 2 or budget.nodes is not None and budget.nodes < 4096:
            size, wit, complete = _search_polarity(L, k, ev, pol, budget)
        else:
            size, wit, complete = _solve_polarity(L, k, ev, pol, budget)
        results[pol] = (size, wit)
        exhaustive = exhaustive and complete
        if not complete:
            break
    pol = max(results, key=lambda p: (results[p][0], p))
    size, wit = results[pol]
    sub = [s[i] for i in wit]
    verified = len(sub) >= k and is_indiscernible(sub, E) is True or len(sub) < k
    report = ExtractionReport(
        input={"length": L, "relation": E.name, "arity": k},
        positions=[i + 1 for i in wit],
        certificate="indiscernible",
        verified=bool(verified),
        exhaustive=exhaustive,
        measured={
            "length": size,
            "polarity": pol,
            "max_true": results[True][0],
            "max_false": results.get(False, (None,))[0],
            "nodes": budget.used,
            "undetermined_tuples": ev.undetermined,
        },
        seed=seed,
    )
    if ev.undetermined:
        report.notes.append(f"{ev.undetermined} undetermined tuples treated as excluded")
    report.wall_clock_s = time.perf_counter() - t0
    return report


# ---------------------------------------------------------------------------
# exact Ramsey numbers


def _ramsey_upper_bound(k: int, n: int):
    if n <= k:
        return max(n, 1)
    if k == 1:
        return 2 * n - 1
    if k == 2:
        return comb(2 * n - 2, n - 1)
    return None


def ramsey_search_estimate(k: int, n: int, n_cap: int) -> int:
    """Size of the coloring space that a full search up to ``n_cap`` may face."""
    ub = _ramsey_upper_bound(k, n)
    top = n_cap if ub is None else min(n_cap, ub)
    return 2 ** max(comb(top, k) - 1, 0)


def find_avoiding_coloring(k: int, n: int, N: int):
    """A 2-coloring of the k-subsets of range(N) with no monochromatic n-subset.

    Backtracking in colex order with the first subset's color fixed
    (color-swap symmetry). Returns a dict subset -> 0/1, or None.
    """
    if N < n:
        return {t: 0 for t in combinations(range(N), k)}
    subsets = sorted(combinations(range(N), k), key=lambda t: (t[-1], t))
    index = {t: i for i, t in enumerate(subsets)}
    groups = list(combinations(range(N), n))
    per_group = comb(n, k)
    member = [[] for _ in subsets]
    for g, Q in enumerate(groups):
        for t in combinations(Q, k):
            member[index[t]].append(g)
    counts = [[0, 0] for _ in groups]
    color = [None] * len(subsets)

    def assign(i, c):
        bad = False
        for g in member[i]:
            counts[g][c] += 1
            if counts[g][c] == per_group:
                bad = True
        return bad

    def unassign(i, c):
        for g in member[i]:
            counts[g][c] -= 1

    def rec(i):
        if i == len(subsets):
            return True
        for c in ((0,) if i == 0 else (0, 1)):
            bad = assign(i, c)
            color[i] = c
            if not bad and rec(i + 1):
                return True
            unassign(i, c)
            color[i] = None
        return False

    if not rec(0):
        return None
    return {t: color[i] for i, t in enumerate(subsets)}


def ramsey_exact(k: int, n: int, n_cap: int, max_estimate: int = DEFAULT_RAMSEY_ESTIMATE_CAP):
    """Smallest N <= n_cap such that every 2-coloring of increasing k-tuples
    of [N] has a homogeneous n-subset; None when no such N <= n_cap.

    Raises :class:`RefusedTooLarge` when the coloring space up to
    ``min(n_cap, known upper bound)`` exceeds ``max_estimate``.
    """
    if k < 1 or n < 1:
        raise DomainError("k and n must be positive")
    if n <= k:
        # a sequence of length n <= k has at most one k-tuple
        return n if n <= n_cap else None
    est = ramsey_search_estimate(k, n, n_cap)
    if est > max_estimate:
        raise RefusedTooLarge(
            f"search space for R_{k}({n}) estimated at 2^{est.bit_length() - 1} colorings",
            estimate=est,
        )
    for N in range(n, n_cap + 1):
        if find_avoiding_coloring(k, n, N) is None:
            return N
    return None


# ---------------------------------------------------------------------------
# towers


def tower(h: int, x: ExactNumber, max_bits: int = DEFAULT_TOWER_BITS) -> ExactNumber:
    """twr_1(x) = x, twr_{i+1}(x) = 2**twr_i(x)."""
    if h < 1:
        raise DomainError("tower height must be at least 1")
    v = exact(x)
    for _ in range(h - 1):
        if not isinstance(v, int) or v < 0:
            raise DomainError("tower of height >= 2 needs a non-negative integer")
        if v > max_bits:
            raise RefusedTooLarge(f"2**{v} exceeds the {max_bits}-bit bound", estimate=v)
        v = 1 << v
    return v


def log_iter(h: int, x: ExactNumber, bits: int = 128) -> Fraction:
    """Apply log2 ``h`` times. Exact along powers of two, else a
    ``bits``-precision rational approximation (reporting only)."""
    import mpmath

    v = Fraction(exact(x))
    approx = None
    for _ in range(h):
        if approx is None and v > 0 and v.denominator == 1 and v.numerator & (v.numerator - 1) == 0:
            v = Fraction(v.numerator.bit_length() - 1)
            continue
        with mpmath.workprec(bits):
            cur = approx if approx is not None else mpmath.mpf(v.numerator) / v.denominator
            if cur <= 0:
                raise DomainError("iterated logarithm left the positive reals")
            approx = mpmath.log(cur, 2)
    if approx is None:
        return v
    with mpmath.workprec(bits):
        return Fraction(*mpmath.libmp.to_rational(approx._mpf_))
