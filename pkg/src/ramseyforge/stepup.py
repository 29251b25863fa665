"""Step-up constructions for the relations E_k.

E_3(x1, x2, x3) is ``x1 + x3 - 2*x2 >= 0``. From a base sequence
``a_1 < ... < a_N`` and an integer T the set B_T of all sums
``sum beta_i * T**a_i`` (beta_i in {0, 1}) is built; consecutive elements of a
tuple from B_T are compared through the exponent ``delta(b, c)`` of their
highest differing digit. The step-up relation of a k-ary E is

    [E(d_1..d_k) and d increasing] or [E(d_k..d_1) and d decreasing]
    or [d_1 < d_2 and d_2 > d_3]

on the delta-sequence d. Three evaluators are provided: semantic (digits),
analytic (``log_T`` of differences) and the T-free explicit base-2 formula.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import ConstructionError, DomainError, PreconditionError, RefusedTooLarge
from .exactnum import Const, ExactNumber, Log, LogExpr, as_expr, eval_sign, exact, log, log2
from .relcore.relations import KRelation, Truth
from .relcore.report import ExtractionReport

MAX_EXHAUSTIVE_N = 12
MAX_EXPLICIT_K = 6
DEFAULT_EPS = Fraction(1, 4)
MAX_SCHEDULE_BITS = 1024
MAX_VALUE_BITS = 1 << 20

# ---------------------------------------------------------------------------
# three-valued helpers


_NUMBER_TYPES = frozenset((int, Fraction))


def _is_number(x) -> bool:
    return type(x) in _NUMBER_TYPES


def _log2_const(x):
    """The rational r when x is log2(r), else None."""
    if isinstance(x, Log) and x.base == 2 and isinstance(x.arg, Const):
        return x.arg.value
    return None


def _cmp(a, b) -> int | None:
    """Sign of a - b: exact on numbers, certified on log expressions."""
    if _is_number(a) and _is_number(b):
        return (a > b) - (a < b)
    ra, rb = _log2_const(a), _log2_const(b)
    if ra is not None and rb is not None and ra > 0 and rb > 0:
        return (ra > rb) - (ra < rb)
    return eval_sign(as_expr(a) - as_expr(b)).value


def _diff(x, y):
    """y - x, keeping log2(r) - log2(s) in the closed form log2(r/s)."""
    if _is_number(x) and _is_number(y):
        return y - x
    rx, ry = _log2_const(x), _log2_const(y)
    if rx is not None and ry is not None and rx > 0 and ry > 0:
        return log2(exact(Fraction(ry) / rx))
    return as_expr(y) - as_expr(x)


def _and3(a: Truth, b: Truth) -> Truth:
    if a is False or b is False:
        return False
    if a is None or b is None:
        return None
    return True


def _or3(a: Truth, b: Truth) -> Truth:
    if a is True or b is True:
        return True
    if a is None or b is None:
        return None
    return False


def _all3(vals) -> Truth:
    out: Truth = True
    for v in vals:
        if v is False:
            return False
        if v is None:
            out = None
    return out


def _lt(a, b) -> Truth:
    s = _cmp(a, b)
    return None if s is None else s < 0


def _require_increasing(xs) -> Truth:
    """PreconditionError on a provably non-increasing tuple, None if unsettled."""
    out: Truth = True
    for x, y in zip(xs, xs[1:]):
        s = _cmp(y, x)
        if s is None:
            out = None
        elif s <= 0:
            raise PreconditionError(f"arguments must be strictly increasing, got {xs!r}")
    return out


def _step_clauses(E, n: int, args, less) -> Truth:
    """The three-clause step-up shape on a delta-like sequence of length n.

    ``less(i, j)`` decides delta_i < delta_j (three-valued) and ``args()``
    builds the arguments for the nested relation, which is only evaluated
    once a monotonicity conjunct can still hold.
    """
    up = [less(i, i + 1) for i in range(n - 1)]
    down = [less(i + 1, i) for i in range(n - 1)]
    result = _and3(up[0], down[1])
    if result is True:
        return True
    inc = _all3(up)
    if inc is not False:
        v = _and3(inc, E(*args()))
        if v is True:
            return True
        result = _or3(result, v)
    dec = _all3(down)
    if dec is not False:
        v = _and3(dec, E(*args()[::-1]))
        if v is True:
            return True
        result = _or3(result, v)
    return result


# ---------------------------------------------------------------------------
# E_3 and the explicit chain


def _e3(x1, x2, x3) -> Truth:
    if _is_number(x1) and _is_number(x2) and _is_number(x3):
        return x1 + x3 - 2 * x2 >= 0
    s = eval_sign(as_expr(x1) + as_expr(x3) - 2 * as_expr(x2)).value
    return None if s is None else s >= 0


def e3() -> KRelation:
    """E_3(x1, x2, x3) iff x1 + x3 - 2*x2 >= 0 (numbers or log expressions)."""
    return KRelation(3, _e3, "E3", _e3)


def _explicit_step(E: KRelation) -> KRelation:
    j = E.arity

    # the formula only sees consecutive differences, so results are cached on them
    @functools.lru_cache(maxsize=1 << 18)
    def on_diffs(ds: tuple, numeric: bool) -> Truth:
        if numeric:
            less = lambda a, b: ds[a] < ds[b]  # noqa: E731
        else:
            less = lambda a, b: _lt(ds[a], ds[b])  # noqa: E731
        # differences are positive, so (d_i/d_{i+1} < 1) iff d_i < d_{i+1}
        return _step_clauses(E, j, lambda: [log2(d) for d in ds], less)

    def f(*xs) -> Truth:
        if len(xs) != j + 1:
            raise DomainError(f"E{j + 1} takes {j + 1} arguments")
        numeric = all(type(x) in _NUMBER_TYPES for x in xs)
        if numeric:
            ds = tuple(y - x for x, y in zip(xs, xs[1:]))
            if min(ds) <= 0:
                raise PreconditionError(f"arguments must be strictly increasing, got {xs!r}")
        else:
            if _require_increasing(xs) is None:
                return None
            ds = tuple(_diff(x, y) for x, y in zip(xs, xs[1:]))
        return on_diffs(ds, numeric)

    return KRelation(j + 1, f, f"E{j + 1}", f)


@functools.lru_cache(maxsize=None)
def explicit_ek(k: int, max_k: int = MAX_EXPLICIT_K) -> KRelation:
    """The T-free base-2 relation E_k, 3 <= k <= max_k."""
    if not 3 <= k <= max_k:
        raise DomainError(f"explicit E_k is available for 3 <= k <= {max_k}")
    E = e3()
    for _ in range(3, k):
        E = _explicit_step(E)
    return E


# ---------------------------------------------------------------------------
# Behrend sets


def find_3ap(xs: Sequence[int]):
    """Some x < y < z in ``xs`` with x + z = 2y, or None."""
    vals = sorted(set(xs))
    present = set(vals)
    for i, x in enumerate(vals):
        for z in vals[i + 2:]:
            if (x + z) % 2 == 0 and (x + z) // 2 in present:
                return x, (x + z) // 2, z
    return None


@dataclass(frozen=True)
class BehrendResult:
    m: int
    elements: tuple
    d: int
    sphere: int | None  # squared radius; None when the whole 0/1 cube is used
    measured_D: float

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "size": len(self.elements),
            "d": self.d,
            "base": 2 * self.d - 1,
            "sphere": self.sphere,
            "measured_D": self.measured_D,
            "elements": list(self.elements),
        }


def _small_digit_numbers(d: int, m: int):
    base = 2 * d - 1
    nums = [0]
    place = 1
    while place < m:
        nums = [v + t * place for t in range(d) for v in nums if v + t * place < m]
        place *= base
    return sorted(nums)


def _digit_square_sum(v: int, base: int) -> int:
    s = 0
    while v:
        v, r = divmod(v, base)
        s += r * r
    return s


@functools.lru_cache(maxsize=64)
def behrend_construction(m: int) -> BehrendResult:
    """Behrend's construction on [1..m], choosing the best d near 2^sqrt(log2 m).

    Numbers below m with base-(2d-1) digits < d add without carries, so
    x + z = 2y forces digitwise equality on a sphere sum(digit^2) = r^2.
    For d = 2 every digit vector lies in {0,1}^L and the whole cube is
    already free of 3-term progressions, so it is used instead of a sphere.
    The set is built on [0, m-1] and shifted by one.
    """
    if m < 3:
        raise DomainError("behrend_set needs m >= 3")
    target = 2 ** math.sqrt(math.log2(m))
    d_max = max(2, math.ceil(2 * target))
    best = None
    for d in range(2, d_max + 1):
        if 2 * d - 1 > m and d > 2:
            break
        nums = _small_digit_numbers(d, m)
        if d == 2:
            cand, sphere = nums, None
        else:
            groups: dict = {}
            for v in nums:
                groups.setdefault(_digit_square_sum(v, 2 * d - 1), []).append(v)
            sphere = max(groups, key=lambda r: (len(groups[r]), -r))
            cand = groups[sphere]
        if best is None or len(cand) > len(best[0]):
            best = (cand, d, sphere)
    cand, d, sphere = best
    elements = tuple(v + 1 for v in cand)
    if find_3ap(elements) is not None:
        raise ConstructionError(f"Behrend set for m={m} contains a 3-term progression")
    D = math.log2(m / len(elements)) / math.sqrt(math.log2(m))
    return BehrendResult(m, elements, d, sphere, D)


def behrend_set(m: int) -> list:
    """A 3-AP-free subset of [1..m] (sorted), verified before return."""
    return list(behrend_construction(m).elements)


# ---------------------------------------------------------------------------
# base sequences and B_T


@dataclass(frozen=True)
class BaseSeq:
    """Strictly increasing natural numbers a_1 < ... < a_N (N >= 1)."""

    values: tuple

    def __post_init__(self):
        vals = tuple(exact(v) for v in self.values)
        if not vals:
            raise DomainError("a base sequence needs at least one element")
        for v in vals:
            if not isinstance(v, int) or v < 0:
                raise DomainError(f"base elements must be natural numbers, got {v!r}")
        for x, y in zip(vals, vals[1:]):
            if not x < y:
                raise DomainError("base sequence must be strictly increasing")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def position(self, i: int) -> int:
        """a_i for a 1-based position i."""
        return self.values[i - 1]


def base_sequence_e3(n: int) -> BaseSeq:
    """A 3-AP-free subset of {1, ..., 2^n}; E_3 has no zero triple on it."""
    if n < 2:
        raise DomainError("base_sequence_e3 needs n >= 2")
    return BaseSeq(tuple(behrend_set(2**n)))


DigitVector = tuple  # 0/1 entries, entry i-1 is the digit at position i


def _check_digits(b, c):
    if len(b) != len(c):
        raise DomainError("digit vectors of different lengths")
    if tuple(b) == tuple(c):
        raise DomainError("delta is undefined for equal digit vectors")


def delta_index(b: DigitVector, c: DigitVector) -> int:
    """Largest 1-based position where b and c differ."""
    _check_digits(b, c)
    for i in range(len(b), 0, -1):
        if b[i - 1] != c[i - 1]:
            return i
    raise AssertionError("unreachable")


def delta_val(a: BaseSeq, b: DigitVector, c: DigitVector) -> int:
    """a_{delta_index(b, c)}."""
    if len(b) != len(a):
        raise DomainError("digit vector does not match the base sequence")
    return a.position(delta_index(b, c))


def mask_to_digits(mask: int, N: int) -> DigitVector:
    return tuple((mask >> i) & 1 for i in range(N))


def digits_to_mask(digits: DigitVector) -> int:
    return sum(1 << i for i, bit in enumerate(digits) if bit)


def _high_bit_table(N: int) -> np.ndarray:
    size = 1 << N
    table = np.zeros(size, dtype=np.int16)
    for v in range(1, size):
        table[v] = v.bit_length()
    return table


def _verify_digit_invariants(masks: np.ndarray, N: int):
    """(order consistency, eq (1)) over all pairs of masks listed in value order.

    Order consistency: for b < c the top differing digit is set in c.
    Eq (1): for b < c < d, Delta(b, c) != Delta(c, d); checked per middle
    element as disjointness of the Delta sets to its left and right.
    """
    n = len(masks)
    if n < 2:
        return True, True
    hb = _high_bit_table(N)
    order_ok = True
    eq1_ok = True
    chunk = max(1, (1 << 22) // n)
    for start in range(0, n, chunk):
        rows = masks[start:start + chunk]
        X = rows[:, None] ^ masks[None, :]
        top = hb[X]  # 1-based Delta, 0 on the diagonal
        col = np.arange(n)[None, :]
        row = np.arange(start, start + len(rows))[:, None]
        right = col > row
        # for b=row < c=col the digit of c at Delta must be 1
        cbit = (masks[None, :] >> np.maximum(top - 1, 0)) & 1
        if np.any(right & (cbit == 0)):
            order_ok = False
        bits = np.where(top > 0, np.left_shift(1, top.astype(np.int64)), 0)
        left_set = np.bitwise_or.reduce(np.where(col < row, bits, 0), axis=1)
        right_set = np.bitwise_or.reduce(np.where(right, bits, 0), axis=1)
        if np.any(left_set & right_set):
            eq1_ok = False
    return order_ok, eq1_ok


@dataclass(frozen=True, eq=False)
class BTSequence:
    """All 2^N sums sum beta_i T^{a_i}, sorted, with digit bookkeeping."""

    base: BaseSeq
    T: int
    values: tuple
    masks: tuple
    order_consistent: bool
    eq1: bool
    _index: dict = field(repr=False, compare=False, default_factory=dict)

    @property
    def valid(self) -> bool:
        return self.order_consistent and self.eq1 and len(set(self.values)) == len(self.values)

    def __len__(self):
        return len(self.values)

    def __contains__(self, x):
        return x in self._index

    def mask_of(self, x) -> int:
        try:
            return self.masks[self._index[x]]
        except (KeyError, TypeError):
            raise DomainError(f"{x!r} is not an element of this B_T") from None

    def digits(self, x) -> DigitVector:
        return mask_to_digits(self.mask_of(x), len(self.base))

    def delta_index(self, x, y) -> int:
        mx, my = self.mask_of(x), self.mask_of(y)
        if mx == my:
            raise DomainError("delta is undefined for equal elements")
        return (mx ^ my).bit_length()

    def delta_val(self, x, y) -> int:
        return self.base.position(self.delta_index(x, y))


def build_bt(a, T: int) -> BTSequence:
    """B_T for base ``a``; invariants are checked and reported, not enforced."""
    a = a if isinstance(a, BaseSeq) else BaseSeq(tuple(a))
    T = exact(T)
    if not isinstance(T, int) or T < 2:
        raise DomainError("T must be an integer >= 2")
    N = len(a)
    if N > MAX_EXHAUSTIVE_N + 4:
        raise RefusedTooLarge(f"B_T with 2^{N} elements is beyond the desk-scale cap", estimate=2**N)
    if a[-1] * T.bit_length() > MAX_VALUE_BITS:
        raise RefusedTooLarge(
            f"largest element T^{a[-1]} would exceed {MAX_VALUE_BITS} bits",
            estimate=a[-1] * T.bit_length(),
        )
    powers = [T**e for e in a]
    vals = []
    for mask in range(1 << N):
        v = 0
        for i in range(N):
            if mask >> i & 1:
                v += powers[i]
        vals.append((v, mask))
    vals.sort()
    values = tuple(v for v, _ in vals)
    masks = tuple(m for _, m in vals)
    order_ok, eq1_ok = _verify_digit_invariants(np.array(masks, dtype=np.int64), N)
    index = {v: i for i, v in enumerate(values)}
    return BTSequence(a, T, values, masks, order_ok, eq1_ok, index)


def _eps_ok(a: BaseSeq, T: int, eps: Fraction) -> bool:
    """|delta(b,c) - log_T(c - b)| < eps for every pair b < c of B_T.

    A pair with top differing position j has c - b = T^{a_j} + sum_{i<j}
    e_i T^{a_i} with e_i in {-1, 0, 1}, and every such vector occurs. The
    condition T^{q a_j - p} < (c-b)^q < T^{q a_j + p} (eps = p/q) is
    monotone in c - b, so the two extreme vectors decide it for all pairs.
    """
    p, q = eps.numerator, eps.denominator
    lower = 0
    for e in a:
        top = T**e
        lo, hi = top - lower, top + lower
        if lo <= 0:
            return False
        target = T ** (q * e)
        if not (target < lo**q * T**p and hi**q < target * T**p):
            return False
        lower += top
    return True


def min_valid_T(a, eps=DEFAULT_EPS, max_n: int = MAX_EXHAUSTIVE_N) -> int:
    """Smallest T in 2, 4, 8, ... for which B_T is order consistent,
    satisfies eq (1) and approximates delta by log_T within ``eps``."""
    a = a if isinstance(a, BaseSeq) else BaseSeq(tuple(a))
    eps = Fraction(exact(eps))
    if eps <= 0:
        raise DomainError("eps must be positive")
    if len(a) > max_n:
        raise RefusedTooLarge(
            f"base of length {len(a)} exceeds the exhaustive verification cap {max_n}",
            estimate=len(a),
            achievable={"N": max_n},
        )
    for t in range(1, MAX_SCHEDULE_BITS + 1):
        T = 1 << t
        if not _eps_ok(a, T, eps):
            continue
        bt = build_bt(a, T)
        if bt.valid:
            return T
    raise RefusedTooLarge(f"no T <= 2^{MAX_SCHEDULE_BITS} satisfies the checks", estimate=MAX_SCHEDULE_BITS)


def check_robustness_bt(bt: BTSequence) -> bool:
    """True iff no b < c < d in B_T has c - b = d - c."""
    return find_3ap(bt.values) is None


def e3_zero_triples(seq: Sequence) -> list:
    """Triples of ``seq`` (in order) on which x1 + x3 - 2*x2 = 0."""
    return [t for t in combinations(seq, 3) if t[0] + t[2] - 2 * t[1] == 0]


# ---------------------------------------------------------------------------
# step-up relations


@dataclass(frozen=True)
class StepUpRelation(KRelation):
    mode: str = "semantic"
    base_relation: KRelation | None = None
    bt: BTSequence | None = None
    T: int | None = None


def step_up_semantic(E: KRelation, bt: BTSequence) -> StepUpRelation:
    """E-up on elements of ``bt`` through digit deltas."""
    if not bt.valid:
        raise DomainError("B_T fails its invariants; choose a larger T")
    k = E.arity

    index, masks, a = bt._index, bt.masks, bt.base.values
    memo: dict = {}  # the value depends only on the delta sequence

    def f(*bs) -> Truth:
        try:
            ms = [masks[index[b]] for b in bs]
        except (KeyError, TypeError):
            raise DomainError("argument is not an element of this B_T") from None
        for x, y in zip(bs, bs[1:]):
            if not x < y:
                raise PreconditionError("arguments must be strictly increasing")
        ds = [a[(m1 ^ m2).bit_length() - 1] for m1, m2 in zip(ms, ms[1:])]
        for x, y in zip(ds, ds[1:]):
            if x == y:
                raise ConstructionError("adjacent equal deltas contradict eq (1)")
        key = tuple(ds)
        if key not in memo:
            memo[key] = _step_clauses(E, k, lambda: ds, lambda i, j: ds[i] < ds[j])
        return memo[key]

    return StepUpRelation(k + 1, f, f"{E.name}^up", None, "semantic", E, bt, bt.T)


def step_up_analytic(E: KRelation, T: int) -> StepUpRelation:
    """E-up with delta replaced by log_T of consecutive differences."""
    T = exact(T)
    if not isinstance(T, int) or T < 2:
        raise DomainError("T must be an integer >= 2")
    k = E.arity
    inner = E.symbolic or E.func

    def f(*bs) -> Truth:
        bs = [exact(b) for b in bs]
        for x, y in zip(bs, bs[1:]):
            if not x < y:
                raise PreconditionError("arguments must be strictly increasing")
        diffs = [y - x for x, y in zip(bs, bs[1:])]
        # log_T is increasing, so delta-bar comparisons reduce to the differences
        return _step_clauses(inner, k, lambda: [log(d, T) for d in diffs], lambda i, j: diffs[i] < diffs[j])

    return StepUpRelation(k + 1, f, f"{E.name}^upT", None, "analytic", E, None, T)


def step_up_explicit(k: int) -> KRelation:
    """Explicit rd-form of the step-up of E_k, i.e. E_{k+1}."""
    return explicit_ek(k + 1)


# ---------------------------------------------------------------------------
# witness pipeline


def _pipeline_lengths(base_len: int, levels: int):
    lengths = [base_len]
    for _ in range(levels):
        if lengths[-1] > 64:
            return None
        lengths.append(2 ** lengths[-1])
    return lengths


def witness(
    k: int,
    n: int,
    base_len: int | None = None,
    eps=DEFAULT_EPS,
    max_n: int = MAX_EXHAUSTIVE_N,
):
    """Iterated step-up starting from the Behrend base for E_3.

    Returns ``(explicit E_k, final sequence, report)``. The report lists per
    level the base, the chosen T, the lengths, and the claimed bound: no
    indiscernible subsequence of length ``n + 2`` at level E_3 and
    ``2L + j - 4`` one level up from a bound L for E_j.
    """
    if k < 3:
        raise DomainError("witness needs k >= 3")
    if k > MAX_EXPLICIT_K:
        raise RefusedTooLarge(f"explicit E_k is capped at k = {MAX_EXPLICIT_K}", achievable={"k": MAX_EXPLICIT_K})
    base = base_sequence_e3(n)
    full_len = len(base)
    if base_len is not None:
        if base_len < 1:
            raise DomainError("base_len must be positive")
        base = BaseSeq(base.values[:base_len])
    steps = k - 3
    lengths = _pipeline_lengths(len(base), steps)
    too_big = lengths is None or any(L > max_n for L in lengths[:-1])
    if too_big:
        fit = 0
        for cand in range(len(base), 0, -1):
            ls = _pipeline_lengths(cand, steps)
            if ls is not None and all(L <= max_n for L in ls[:-1]):
                fit = cand
                break
        reach = 3
        ls = [len(base)]
        while ls[-1] <= max_n and reach < MAX_EXPLICIT_K:
            ls.append(2 ** ls[-1])
            reach += 1
        raise RefusedTooLarge(
            f"k={k} from a base of length {len(base)} needs intermediate lengths beyond {max_n}",
            estimate=lengths,
            achievable={"k": reach, "base_len": fit or None},
        )
    zero = e3_zero_triples(base.values)
    if zero:
        raise ConstructionError(f"base sequence has an E3 boundary triple {zero[0]}")
    seq = list(base.values)
    claimed = n + 2
    levels = [{"level": 0, "arity": 3, "length": len(seq), "claimed_no_indiscernible_length": claimed}]
    verified = True
    for j in range(3, k):
        a = BaseSeq(tuple(seq))
        T = min_valid_T(a, eps, max_n)
        bt = build_bt(a, T)
        robust = check_robustness_bt(bt)
        verified = verified and bt.valid and robust
        claimed = 2 * claimed + j - 4
        seq = list(bt.values)
        levels.append(
            {
                "level": j - 2,
                "arity": j + 1,
                "T": T,
                "input_length": len(a),
                "length": len(seq),
                "order_consistent": bt.order_consistent,
                "eq1": bt.eq1,
                "robust": robust,
                "claimed_no_indiscernible_length": claimed,
            }
        )
    report = ExtractionReport(
        input={"k": k, "n": n, "base_len": base_len},
        positions=list(range(1, len(seq) + 1)),
        certificate="step-up witness",
        verified=verified,
        exhaustive=False,
        measured={
            "base_seq": list(base.values),
            "behrend_length": full_len,
            "behrend_exponent_c": math.log2(full_len) / n,
            "levels": levels,
            "T_per_level": [lv["T"] for lv in levels[1:]],
            "lengths": [lv["length"] for lv in levels],
            "claimed_bounds": [lv["claimed_no_indiscernible_length"] for lv in levels],
            "tower_shape": all(
                levels[i + 1]["length"] == 2 ** levels[i]["length"] for i in range(len(levels) - 1)
            ),
        },
    )
    return explicit_ek(k), seq, report
