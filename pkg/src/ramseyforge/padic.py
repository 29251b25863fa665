"""p-adic valuations on the rationals and linearly growing extraction.

Everything lives in Q with the valuation v_p; balls are
B(alpha, r) = {a : v_p(a - alpha) >= r} with v_p(0) = +infinity.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import DomainError, ShortInput
from .exactnum import exact, format_exact
from .extract import doubling_subsequence, erdos_szekeres


def _is_prime(p) -> bool:
    if not isinstance(p, int) or isinstance(p, bool) or p < 2:
        return False
    return all(p % d for d in range(2, math.isqrt(p) + 1))


def _check_prime(p):
    if not _is_prime(p):
        raise DomainError(f"{p!r} is not a prime")


def _vint(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def valuation(q, p: int) -> int:
    """v_p(q) for a nonzero rational q."""
    _check_prime(p)
    q = Fraction(exact(q))
    if q == 0:
        raise DomainError("the valuation of 0 is +infinity; handle it explicitly")
    return _vint(abs(q.numerator), p) - _vint(q.denominator, p)


@dataclass(frozen=True)
class PAdicValue:
    """q = p**v * u with v_p(u) = 0."""

    p: int
    q: Fraction

    def __post_init__(self):
        _check_prime(self.p)
        q = Fraction(exact(self.q))
        if q == 0:
            raise DomainError("PAdicValue needs a nonzero rational")
        object.__setattr__(self, "q", q)

    @property
    def v(self) -> int:
        return valuation(self.q, self.p)

    @property
    def unit(self) -> Fraction:
        return self.q / Fraction(self.p) ** self.v


def _val_or_inf(x, p):
    return math.inf if x == 0 else valuation(x, p)


@dataclass(frozen=True)
class ValBall:
    center: Fraction
    radius: int
    p: int

    def __contains__(self, a) -> bool:
        return _val_or_inf(Fraction(exact(a)) - self.center, self.p) >= self.radius


def _residue(x: Fraction, p: int) -> int:
    """x mod p for a rational with v_p(x) >= 0."""
    return x.numerator * pow(x.denominator, -1, p) % p


def ball_refine(A: Sequence, ball: ValBall):
    """(alpha', r') with |A|/p <= |A ∩ B(alpha', r')| < |A|.

    r1 = min v_p(a - a0) is the largest radius of a ball holding all of A;
    its p children of radius r1 + 1 are the residue classes of
    (a - a0)/p^r1 mod p, and the most populous one (smallest residue on
    ties) is returned.
    """
    p = ball.p
    A = [Fraction(exact(a)) for a in A]
    if len(set(A)) < 2:
        raise DomainError("ball_refine needs at least two distinct points")
    if any(a not in ball for a in A):
        raise DomainError("A is not contained in the ball")
    a0 = A[0]
    r1 = min(valuation(a - a0, p) for a in A if a != a0)
    scale = Fraction(p) ** r1
    counts: dict = {}
    for a in A:
        c = _residue((a - a0) / scale, p)
        counts[c] = counts.get(c, 0) + 1
    c = max(sorted(counts), key=lambda r: counts[r])
    return a0 + c * scale, r1 + 1


def smallest_ball(A: Sequence, p: int) -> ValBall:
    A = [Fraction(exact(a)) for a in A]
    if len(set(A)) < 2:
        return ValBall(A[0], 0, p)
    a0 = A[0]
    return ValBall(a0, min(valuation(a - a0, p) for a in A if a != a0), p)


@dataclass
class ValuationChain:
    alpha: Fraction
    points: list  # indices into the input set, in chain order
    radii: list  # r_0 < r_1 < ... ; point i has r_{i} <= v(alpha - a_i) < r_{i+1}
    valuations: list

    def sandwich_ok(self, A, p) -> bool:
        ok = all(x < y for x, y in zip(self.radii, self.radii[1:]))
        for i, j in enumerate(self.points):
            v = valuation(self.alpha - A[j], p)
            ok = ok and v == self.valuations[i] and self.radii[i] <= v < self.radii[i + 1]
        return ok and len(set(self.valuations)) == len(self.valuations)


def valuation_chain(A: Sequence, p: int, limit: int | None = None) -> ValuationChain:
    """Iterate ball_refine until one point is left (or ``limit`` points are out).

    Point a_i lies in the parent of the i-th refined ball but not in the
    ball itself, so v(alpha - a_i) = r_i - 1 for the final centre alpha.
    When the chain runs to a single survivor x, x joins as a last point
    with alpha = x + p^{r_final}.
    """
    _check_prime(p)
    A = [Fraction(exact(a)) for a in A]
    if len(set(A)) != len(A):
        raise DomainError("points must be distinct")
    if len(A) < 2:
        raise DomainError("need at least two points")
    ball = smallest_ball(A, p)
    live = list(range(len(A)))
    radii = [ball.radius]
    points = []
    while len(live) >= 2 and (limit is None or len(points) < limit):
        alpha, r = ball_refine([A[i] for i in live], ValBall(ball.center, ball.radius, p))
        ball = ValBall(alpha, r, p)
        inside = [i for i in live if A[i] in ball]
        out = [i for i in live if A[i] not in ball]
        points.append(out[0])
        radii.append(r)
        live = inside
    if len(live) == 1 and (limit is None or len(points) < limit):
        x = A[live[0]]
        alpha = x + Fraction(p) ** radii[-1]
        points.append(live[0])
        radii.append(radii[-1] + 1)
    else:
        alpha = ball.center
    vals = [valuation(alpha - A[i], p) for i in points]
    return ValuationChain(alpha, points, radii, vals)


def distinct_valuation_points(A: Sequence, k: int, p: int):
    """(alpha, [a_1..a_k]) with v_p(alpha - a_i) pairwise distinct.

    Needs |A| >= 2 p^{k-1}. Returns the chain as well for inspection.
    """
    _check_prime(p)
    A = [Fraction(exact(a)) for a in A]
    if k < 1:
        raise DomainError("k must be positive")
    if len(set(A)) != len(A):
        raise DomainError("points must be distinct")
    if len(A) < 2 * p ** (k - 1) or len(A) < 2:
        raise DomainError(f"need |A| >= 2*{p}^{k - 1} points")
    chain = valuation_chain(A, p, limit=k)
    if len(chain.points) < k:
        raise AssertionError("refinement chain shorter than guaranteed")
    if not chain.sandwich_ok(A, p):
        raise AssertionError("valuation sandwich violated")
    return chain.alpha, [A[i] for i in chain.points], chain


def is_linearly_n_growing(s: Sequence, n: int, p: int | None = None) -> bool:
    """v(a_1) > n and v(a_{i+1}) > n v(a_i); ``s`` holds PAdicValue or rationals (with p)."""
    vals = []
    for x in s:
        if isinstance(x, PAdicValue):
            vals.append(x.v)
        else:
            if p is None:
                raise DomainError("a prime is needed for plain rationals")
            if Fraction(exact(x)) == 0:
                raise DomainError("zero has no finite valuation")
            vals.append(valuation(x, p))
    if not vals:
        return True
    if not vals[0] > n:
        return False
    return all(b > n * a for a, b in zip(vals, vals[1:]))


# ---------------------------------------------------------------------------
# transforms


def apply_transform(steps: list, x):
    """Apply transform steps in order to x.

    Steps: ("const", c) -> c; ("scale", c) -> c*x; ("scale_inv", c) -> c/x;
    ("invert",) -> 1/x; ("shift", c) -> x + c.
    """
    x = Fraction(exact(x))
    for st in steps:
        op = st[0]
        if op == "const":
            x = Fraction(st[1])
        elif op == "scale":
            x = st[1] * x
        elif op == "scale_inv":
            x = st[1] / x
        elif op == "invert":
            x = 1 / x
        elif op == "shift":
            x = x + st[1]
        else:
            raise DomainError(f"unknown transform step {op!r}")
    return exact(x)


def _steps_json(steps):
    return [[st[0], *(format_exact(exact(c)) for c in st[1:])] for st in steps]


@dataclass
class GrowingResult:
    growing: list
    steps: list
    indices: list  # 1-based positions in the input, one per growing element
    orientation: str  # "forward" or "reversed"
    case: str
    trace: dict

    def embeds(self, s) -> bool:
        if len(self.indices) != len(self.growing):
            return False
        idx = self.indices
        mono = all(a < b for a, b in zip(idx, idx[1:])) if self.orientation == "forward" else all(
            a > b for a, b in zip(idx, idx[1:])
        )
        return mono and all(apply_transform(self.steps, g) == exact(s[i - 1]) for g, i in zip(self.growing, idx))

    def to_json(self) -> dict:
        return {
            "case": self.case,
            "growing": [format_exact(exact(g)) for g in self.growing],
            "transform": _steps_json(self.steps),
            "indices": self.indices,
            "orientation": self.orientation,
            "trace": self.trace,
        }


def _greedy_growing(vals, n):
    out = []
    prev = None
    for i, v in enumerate(vals):
        if v is None:
            continue
        if (prev is None and v > n) or (prev is not None and v > n * prev):
            out.append(i)
            prev = v
    return out


def _scaffold(p: int, n: int, k: int) -> list:
    e, out = n + 1, []
    for _ in range(k):
        out.append(Fraction(p) ** e)
        e = n * e + 1
    return out


def linear_growing_extract(s: Sequence, p: int, k: int, n: int) -> GrowingResult:
    """A linearly n-growing b_1..b_k and a map F with F(b_i) a subsequence of s.

    Paths, in order of preference:

    * identity: a linearly n-growing subsequence of s itself (greedy);
    * constant: a value repeated at least ceil(sqrt K) and k times; the
      output is the scaffold p^{e_i} (e_1 = n+1, e_{i+1} = n e_i + 1) sent
      to that value;
    * general: distinct values, a valuation chain, the longest monotone run
      of valuations (inverting when decreasing), a strict doubling
      subsequence and a rescaling that makes valuations linearly 2-growing;
      for n > 2 every l-th term is kept, l = ceil(log2 n).

    Raises ShortInput (carrying the best partial result) when fewer than
    k terms are reachable.
    """
    _check_prime(p)
    if k < 1:
        raise DomainError("k must be positive")
    if n < 0:
        raise DomainError("n must be non-negative")
    t0 = time.perf_counter()
    s = [Fraction(exact(x)) for x in s]
    K = len(s)
    trace: dict = {"K": K, "p": p, "k": k, "n": n}

    vals = [None if x == 0 else valuation(x, p) for x in s]
    greedy = _greedy_growing(vals, n)
    if len(greedy) >= k:
        idx = greedy[:k]
        trace.update(case="identity")
        res = GrowingResult([s[i] for i in idx], [], [i + 1 for i in idx], "forward", "identity", trace)
        return _finish(res, s, p, n, t0)

    counts: dict = {}
    first: dict = {}
    for i, x in enumerate(s):
        counts[x] = counts.get(x, 0) + 1
        first.setdefault(x, i)
    root = math.isqrt(max(K - 1, 0)) + 1 if K else 0  # ceil(sqrt(K))
    top = max(counts, key=lambda x: (counts[x], -first[x])) if counts else None
    case1 = None
    if top is not None and counts[top] >= root:
        pos = [i for i, x in enumerate(s) if x == top]
        m = min(k, len(pos))
        trace1 = dict(trace, case="constant", repeats=counts[top], threshold=root)
        case1 = GrowingResult(_scaffold(p, n, m), [("const", top)], [i + 1 for i in pos[:m]], "forward", "constant", trace1)
        if m >= k:
            return _finish(case1, s, p, n, t0)

    case2 = _general_case(s, p, k, n, trace)
    best = case2
    if case1 is not None and len(case1.growing) > len(case2.growing):
        best = case1
    if len(best.growing) >= k:
        return _finish(best, s, p, n, t0)
    best = _finish(best, s, p, n, t0)
    raise ShortInput(
        f"reached {len(best.growing)} of {k} linearly {n}-growing terms", achieved=len(best.growing), partial=best
    )


def _general_case(s, p, k, n, trace) -> GrowingResult:
    trace = dict(trace, case="general")
    first_pos: dict = {}
    for i, x in enumerate(s):
        first_pos.setdefault(x, i)
    distinct = sorted(first_pos, key=first_pos.get)
    K1 = len(distinct)
    trace["K1"] = K1
    empty = GrowingResult([], [], [], "forward", "general", trace)
    if K1 < 2:
        trace.update(K2=K1, K3=K1, K4=K1, bookkeeping=_bookkeeping(trace, p))
        return empty
    chain = valuation_chain(distinct, p)
    alpha = chain.alpha
    # chain points back in input order
    pts = sorted(chain.points, key=lambda j: first_pos[distinct[j]])
    K2 = len(pts)
    v = [valuation(distinct[j] - alpha, p) for j in pts]
    es = erdos_szekeres(v, K2 + 1, K2 + 1)  # neither target reachable: longest run wins
    K3 = es.length
    run = [pts[i - 1] for i in es.positions]
    inverted = es.measured["direction"] == "decreasing"
    c = [distinct[j] - alpha for j in run]
    if inverted:
        c = [1 / x for x in c]
    w = [valuation(x, p) for x in c]
    dbl = doubling_subsequence(w, K3, strict=True)
    K4 = dbl.length
    sel = [i - 1 for i in dbl.positions]
    trace.update(
        alpha=format_exact(exact(alpha)),
        K2=K2,
        K3=K3,
        K4=K4,
        inverted=inverted,
        doubling_variant=dbl.measured["variant"],
        chain_radii=chain.radii,
        chain_sandwich=chain.sandwich_ok(distinct, p),
    )
    back = [("invert",)] if inverted else []
    back.append(("shift", alpha))
    if K4 < 2:
        growing, steps, src, orient = [], [], [], "forward"
    elif dbl.measured["variant"] == "forward":
        b1 = c[sel[0]]
        growing = [c[i] / b1 for i in sel[1:]]
        steps = [("scale", b1)] + back
        src, orient = sel[1:], "forward"
    else:
        bK = c[sel[-1]]
        growing = [bK / c[i] for i in reversed(sel[:-1])]
        steps = [("scale_inv", bK)] + back
        src, orient = list(reversed(sel[:-1])), "reversed"
    indices = [first_pos[distinct[run[i]]] + 1 for i in src]
    L2 = len(growing)
    l = max(1, math.ceil(math.log2(n))) if n > 2 else 1
    keep = list(range(l - 1, L2, l))[:k]
    trace.update(stride=l, growing_2=L2, bookkeeping=_bookkeeping(trace, p))
    return GrowingResult([growing[i] for i in keep], steps, [indices[i] for i in keep], orient, "general", trace)


def _bookkeeping(t, p) -> dict:
    K, K1, K2, K3, K4 = t["K"], t["K1"], t.get("K2", 0), t.get("K3", 0), t.get("K4", 0)
    return {
        "K3<=4^K4": K3 <= 4**K4,
        "K2<=K3^2": K2 <= K3 * K3,
        "K1<=2p^(K2-1)": K2 >= 1 and K1 <= 2 * p ** (K2 - 1),
        "K<=K1^2": K <= K1 * K1,
    }


def _finish(res: GrowingResult, s, p, n, t0) -> GrowingResult:
    res.trace["final_length"] = len(res.growing)
    res.trace["growing_verified"] = is_linearly_n_growing(res.growing, n, p) if res.growing else True
    res.trace["embedding_verified"] = res.embeds(s)
    res.trace["wall_clock_s"] = time.perf_counter() - t0
    return res
