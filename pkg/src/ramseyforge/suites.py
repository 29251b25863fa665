"""Seeded verification suites shared by ``ramseyforge verify``.

Each suite takes a seed, an ordered ``pmap`` (possibly backed by a thread
pool) and a size profile, and returns ``(outputs, measured, checks)`` where
``checks`` maps a check name to a boolean. Instance seeds are derived from
strings, so results do not depend on scheduling or thread count.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction
from itertools import combinations

from .errors import ShortInput
from .extract import (
    Tournament,
    doubling_subsequence,
    erdos_szekeres,
    linearize_tournament,
    max_transitive_subtournament,
    ramsey_via_stepping,
    stepping_down,
)
from .padic import ValBall, ball_refine, distinct_valuation_points, linear_growing_extract, smallest_ball
from .relcore import (
    SetFamily,
    is_indiscernible,
    max_indiscernible,
    ramsey_exact,
    random_relation,
    sauer_check,
)
from .stepup import (
    BaseSeq,
    behrend_construction,
    build_bt,
    e3,
    e3_zero_triples,
    explicit_ek,
    find_3ap,
    min_valid_T,
    step_up_analytic,
    step_up_semantic,
    witness,
)

PROFILES = {
    "quick": {
        "e3_n": [3, 4, 5, 6],
        "behrend_m": [3**4, 3**5, 3**6],
        "stepup_bases": [(3, (1, 2, 4)), (3, (1, 2, 4, 5)), (4, (0, 4, 16, 20))],
        "witness": [(3, 4), (4, 3)],
        "monotone_trials": 20,
        "stepping_trials": 10,
        "tournament_trials": 10,
        "padic_trials": 10,
        "padic_length": 400,
        "sauer_trials": 50,
    },
    "full": {
        "e3_n": [3, 4, 5, 6, 7, 8],
        "behrend_m": [3**4, 3**5, 3**6],
        "stepup_bases": [(3, (1, 2, 4)), (3, (1, 2, 4, 5)), (3, (1, 2, 4, 5, 10, 11)), (4, (0, 4, 16, 20))],
        "witness": [(3, 4), (4, 3), (4, 4)],
        "monotone_trials": 1000,
        "stepping_trials": 100,
        "tournament_trials": 100,
        "padic_trials": 100,
        "padic_length": 10_000,
        "sauer_trials": 1000,
    },
}


def instance_rng(seed, suite: str, i: int) -> random.Random:
    return random.Random(f"{seed}/{suite}/{i}")


# ---------------------------------------------------------------------------


def suite_e3(seed, pmap, prof):
    E = e3()

    def one(n):
        s = list(range(1, 2**n + 1))
        rep = max_indiscernible(s, E)
        wit = [2**i for i in range(n + 1)]
        return {
            "n": n,
            "length": rep.length,
            "exhaustive": rep.exhaustive,
            "ok": rep.exhaustive and rep.verified and rep.length == n + 1 and is_indiscernible(wit, E) is True,
        }

    rows = pmap(one, prof["e3_n"])
    return rows, {}, {"max_length_is_n_plus_1": all(r["ok"] for r in rows)}


def suite_behrend(seed, pmap, prof):
    def one(m):
        r = behrend_construction(m)
        again = behrend_construction.__wrapped__(m)
        free = find_3ap(r.elements) is None and all(1 <= x <= m for x in r.elements)
        bound = m / 2 ** (r.measured_D * math.sqrt(math.log2(m)))
        return {
            "m": m,
            "size": len(r.elements),
            "d": r.d,
            "D": r.measured_D,
            "ok": free
            and math.isfinite(r.measured_D)
            and again.measured_D == r.measured_D
            and len(r.elements) >= bound * (1 - 1e-12),
        }

    rows = pmap(one, prof["behrend_m"])
    return rows, {"D": [r["D"] for r in rows]}, {"behrend_free_and_bounded": all(r["ok"] for r in rows)}


def stepup_agreement(k: int, base) -> dict:
    """Compare the semantic, analytic and explicit step-ups of E_k on all
    increasing (k+1)-tuples of B_T for T = min_valid_T(base)."""
    a = BaseSeq(tuple(base))
    T = min_valid_T(a)
    bt = build_bt(a, T)
    E = explicit_ek(k)
    sem, ana, exp = step_up_semantic(E, bt), step_up_analytic(E, T), explicit_ek(k + 1)
    total = agree = 0
    for t in combinations(bt.values, k + 1):
        total += 1
        v = sem(*t)
        agree += v is not None and v == ana(*t) == exp(*t)
    return {"k": k, "base": list(base), "T": T, "tuples": total, "agree": agree}


def suite_stepup(seed, pmap, prof):
    rows = pmap(lambda kb: stepup_agreement(*kb), prof["stepup_bases"])
    return rows, {}, {"evaluators_agree": all(r["agree"] == r["tuples"] for r in rows)}


def suite_witness(seed, pmap, prof):
    def one(kn):
        k, n = kn
        _, seq, rep = witness(k, n)
        # the emitted sequence is re-checked here; inner levels carry their own flags
        robust = find_3ap(seq) is None and all(lv["robust"] for lv in rep.measured["levels"][1:])
        return {
            "k": k,
            "n": n,
            "lengths": rep.measured["lengths"],
            "T": rep.measured["T_per_level"],
            "ok": rep.verified and robust and not e3_zero_triples(rep.measured["base_seq"]),
        }

    rows = pmap(one, prof["witness"])
    return rows, {}, {"witness_robust": all(r["ok"] for r in rows)}


def suite_monotone(seed, pmap, prof):
    trials = prof["monotone_trials"]
    pairs = [(r, s) for r in range(2, 6) for s in range(2, 6)]

    def es(i):
        rng = instance_rng(seed, "es", i)
        r, s = pairs[i % len(pairs)]
        L = (r - 1) * (s - 1) + 1
        perm = rng.sample(range(1, 10 * L + 1), L)
        rep = erdos_szekeres(perm, r, s)
        return rep.verified and rep.measured["guarantee_met"]

    def dbl(i):
        rng = instance_rng(seed, "doubling", i)
        n = 2 + i % 3
        vals = sorted(rng.sample(range(10**6), 4**n))
        rep = doubling_subsequence(vals, n)
        return rep.verified and rep.length == n

    es_ok = pmap(es, range(trials))
    dbl_ok = pmap(dbl, range(trials))
    measured = {"es_trials": trials, "doubling_trials": trials}
    return [], measured, {"erdos_szekeres": all(es_ok), "doubling": all(dbl_ok)}


def suite_stepping(seed, pmap, prof):
    def one(i):
        rng = instance_rng(seed, "stepping", i)
        k = 3 + i % 2
        L = rng.randint(k + 2, 12)
        s = sorted(rng.sample(range(1, 1000), L))
        E = random_relation(k, rng.randrange(2**32))
        prefix, cert = stepping_down(s, E)
        rep = ramsey_via_stepping(s, E)
        opt = max_indiscernible(s, E)
        return {
            "k": k,
            "length": L,
            "prefix": len(prefix),
            "found": rep.length,
            "optimum": opt.length,
            "ok": cert.verified and cert.contraction_ok() and rep.verified and opt.exhaustive and rep.length <= opt.length,
        }

    rows = pmap(one, range(prof["stepping_trials"]))
    return [], {"found": [r["found"] for r in rows]}, {"stepping_sound": all(r["ok"] for r in rows)}


def suite_tournament(seed, pmap, prof):
    def one(i):
        rng = instance_rng(seed, "tournament", i)
        n = rng.randint(3, 10)
        t = Tournament.random(n, rng.randrange(2**32))
        rep = linearize_tournament(t)
        best = max_transitive_subtournament(t)
        trans = linearize_tournament(Tournament.transitive(n))
        ok = rep.verified and rep.length <= len(best) and trans.length == n and trans.verified
        return {"n": n, "found": rep.length, "max": len(best), "ok": ok}

    rows = pmap(one, range(prof["tournament_trials"]))
    return [], {"found": [r["found"] for r in rows]}, {"tournament_linearized": all(r["ok"] for r in rows)}


def ball_refine_ok(A, p) -> bool:
    ball = smallest_ball(A, p)
    alpha, r = ball_refine(A, ball)
    child = ValBall(alpha, r, p)
    inside = sum(1 for a in A if a in child)
    return len(A) <= p * inside and inside < len(A) and r > ball.radius


def suite_padic(seed, pmap, prof):
    primes = (2, 3, 5)

    def one(i):
        rng = instance_rng(seed, "padic", i)
        p = primes[i % 3]
        A = rng.sample(range(-(10**6), 10**6), rng.randint(2, 64))
        A = [Fraction(a, p ** rng.randint(0, 2)) for a in A]
        A = list(dict.fromkeys(A))
        refine = len(A) < 2 or ball_refine_ok(A, p)
        k = 1 + i % 4 if p == 2 else 1 + i % 3
        pts = rng.sample(range(10**6), 2 * p ** (k - 1) + rng.randint(0, 3))
        _, _, chain = distinct_valuation_points(pts, k, p)
        sandwich = chain.sandwich_ok([Fraction(x) for x in pts], p)
        s = [rng.randint(1, 10**6) for _ in range(prof["padic_length"])]
        try:
            res = linear_growing_extract(s, p, 3, 2)
            short = False
        except ShortInput as exc:
            res, short = exc.partial, True
        tr = res.trace
        book = tr.get("bookkeeping", {})
        return {
            "p": p,
            "case": res.case,
            "length": len(res.growing),
            "short": short,
            "K": [tr.get(f"K{j}") for j in range(1, 5)],
            "refine": refine,
            "sandwich": sandwich,
            "growing": tr["growing_verified"] and tr["embedding_verified"],
            "bookkeeping": all(book.values()) if book else True,
        }

    rows = pmap(one, range(prof["padic_trials"]))
    checks = {
        "ball_refine": all(r["refine"] for r in rows),
        "distinct_valuations": all(r["sandwich"] for r in rows),
        "growing_embedding": all(r["growing"] for r in rows),
        "bookkeeping": all(r["bookkeeping"] for r in rows),
    }
    measured = {"lengths": [r["length"] for r in rows], "K_chains": [r["K"] for r in rows]}
    return [], measured, checks


def random_family(rng: random.Random) -> SetFamily:
    u = rng.randint(1, 10)
    return SetFamily(u, tuple(rng.randrange(1 << u) for _ in range(rng.randint(0, 12))))


def suite_baselines(seed, pmap, prof):
    r23 = ramsey_exact(2, 3, 10)
    diag = {k: ramsey_exact(k, k, 10) for k in range(1, 5)}

    def one(i):
        return sauer_check(random_family(instance_rng(seed, "sauer", i)))

    sauer = pmap(one, range(prof["sauer_trials"]))
    checks = {"R2(3)=6": r23 == 6, "R_k(k)=k": all(v == k for k, v in diag.items()), "sauer_shelah": all(sauer)}
    return [{"R2(3)": r23, "R_k(k)": diag}], {}, checks


SUITES = {
    "e3": suite_e3,
    "behrend": suite_behrend,
    "stepup": suite_stepup,
    "witness": suite_witness,
    "monotone": suite_monotone,
    "stepping": suite_stepping,
    "tournament": suite_tournament,
    "padic": suite_padic,
    "baselines": suite_baselines,
}
