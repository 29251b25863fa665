"""Command line front end: reproducible runs that emit experiment records.

Every run produces one record (schema "1") holding the invocation, the
configuration, a digest of the inputs, outputs, measured constants and
verification booleans. Its ``digest`` covers everything except the
``runtime`` block (thread count, wall clock, timestamp), so two runs with
the same seed and inputs produce byte-identical records once ``runtime`` is
dropped.

Exit codes: 0 all verifications passed, 1 a verification failed, 2 usage
error, 3 refused as too large or a budget ran out.
"""

from __future__ import annotations

import argparse
import contextvars
import csv
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .errors import RamseyForgeError, RefusedTooLarge, ShortInput
from .exactnum import DEFAULT_MAX_BITS, exact, format_exact, precision_ceiling
from .relcore import (
    constant_relation,
    jsonable,
    max_indiscernible,
    ramsey_exact,
    ramsey_search_estimate,
    random_relation,
    read_sequence,
    write_sequence,
)

SCHEMA = "1"
ENV_PREFIX = "RAMSEYFORGE_"

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_REFUSED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class BudgetExhausted(Exception):
    pass


# ---------------------------------------------------------------------------
# records


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def sha256(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _strip_timing(x):
    if isinstance(x, dict):
        return {k: _strip_timing(v) for k, v in x.items() if k != "wall_clock_s"}
    if isinstance(x, list):
        return [_strip_timing(v) for v in x]
    return x


def record_digest(rec: dict) -> str:
    body = {k: v for k, v in rec.items() if k not in ("digest", "runtime")}
    return sha256(canonical(body))


def make_record(command, args, config, input_digest, outputs, measured, verification, status, exit_code, runtime):
    rec = {
        "schema": SCHEMA,
        "version": __version__,
        "command": command,
        "args": args,
        "config": config,
        "input_digest": input_digest,
        "outputs": _strip_timing(jsonable(outputs)),
        "measured": _strip_timing(jsonable(measured)),
        "verification": verification,
        "status": status,
        "exit_code": exit_code,
    }
    rec["digest"] = record_digest(rec)
    rec["runtime"] = runtime
    return rec


def read_records(path) -> list:
    """Records from a .jsonl file (one per line) or a .json file (object or list)."""
    text = Path(path).read_text()
    if str(path).endswith(".jsonl"):
        return [json.loads(line) for line in text.splitlines() if line.strip()]
    data = json.loads(text)
    return data if isinstance(data, list) else [data]


def _flatten(prefix, x, out):
    if isinstance(x, dict):
        for k in sorted(x):
            _flatten(f"{prefix}.{k}" if prefix else str(k), x[k], out)
    elif isinstance(x, list) and len(x) <= 64:
        for i, v in enumerate(x):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append((prefix, x if isinstance(x, (str, int, float, bool)) or x is None else canonical(x)))


def write_record(rec: dict, out: str | None, fmt: str) -> None:
    if out is None:
        return
    if out == "-":
        sys.stdout.write(canonical(rec) + "\n")
        return
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        with open(d / "records.jsonl", "a") as fh:
            fh.write(canonical(rec) + "\n")
    else:
        rows: list = []
        for section in ("measured", "verification"):
            _flatten(section, rec[section], rows)
        new = not (d / "records.csv").exists()
        with open(d / "records.csv", "a", newline="") as fh:
            w = csv.writer(fh)
            if new:
                w.writerow(["digest", "command", "key", "value"])
            for k, v in rows:
                w.writerow([rec["digest"], rec["command"], k, v])


# ---------------------------------------------------------------------------
# configuration


def _env(name, conv, default):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None or raw == "":
        return default
    try:
        return conv(raw)
    except ValueError:
        raise UsageError(f"bad value {raw!r} for {ENV_PREFIX}{name}") from None


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise ValueError("must be positive")
    return v


def _nonneg_float(text):
    v = float(text)
    if v < 0:
        raise ValueError("must be non-negative")
    return v


def resolve_config(ns) -> dict:
    """Flags win over RAMSEYFORGE_* environment variables, which win over defaults."""
    cfg = {
        "seed": ns.seed if ns.seed is not None else _env("SEED", int, 0),
        "threads": ns.threads if ns.threads is not None else _env("THREADS", _positive_int, 1),
        "precision_bits": ns.precision_bits
        if ns.precision_bits is not None
        else _env("PRECISION_BITS", _positive_int, DEFAULT_MAX_BITS),
        "budget_nodes": ns.budget_nodes if ns.budget_nodes is not None else _env("BUDGET_NODES", _positive_int, None),
        "budget_ms": ns.budget_ms if ns.budget_ms is not None else _env("BUDGET_MS", _nonneg_float, None),
        "out": ns.out if ns.out is not None else _env("OUT", str, None),
        "format": ns.format if ns.format is not None else _env("FORMAT", str, "json"),
    }
    if cfg["format"] not in ("json", "csv"):
        raise UsageError(f"unknown output format {cfg['format']!r}")
    if cfg["precision_bits"] < 64:
        raise UsageError("--precision-bits must be at least 64")
    return cfg


def _recorded_config(cfg: dict) -> dict:
    # thread count and output location never influence results
    return {k: cfg[k] for k in ("seed", "precision_bits", "budget_nodes", "budget_ms")}


def make_pmap(threads: int):
    """Ordered map over a thread pool; each task runs in a copy of the caller's context."""

    def pmap(fn, items):
        items = list(items)
        if threads <= 1 or len(items) <= 1:
            return [fn(x) for x in items]
        ctxs = [contextvars.copy_context() for _ in items]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda cx: cx[0].run(fn, cx[1]), zip(ctxs, items)))

    return pmap


# ---------------------------------------------------------------------------
# relations and inputs


def parse_relation(spec: str):
    """E3..E6 | up:<k>:<T> (analytic step-up of E_k) | rand:<k>:<seed> | const:<k>:<0|1>."""
    from .stepup import MAX_EXPLICIT_K, explicit_ek, step_up_analytic

    parts = spec.split(":")
    try:
        if len(parts) == 1 and spec[:1] in "Ee" and spec[1:].isdigit():
            k = int(spec[1:])
            if not 3 <= k <= MAX_EXPLICIT_K:
                raise UsageError(f"explicit relations exist for E3..E{MAX_EXPLICIT_K}")
            return explicit_ek(k)
        if parts[0] == "up" and len(parts) == 3:
            return step_up_analytic(explicit_ek(int(parts[1])), int(parts[2]))
        if parts[0] == "rand" and len(parts) == 3:
            return random_relation(int(parts[1]), int(parts[2]))
        if parts[0] == "const" and len(parts) == 3:
            return constant_relation(int(parts[1]), parts[2] not in ("0", "false", "False"))
    except (ValueError, RamseyForgeError) as e:
        raise UsageError(f"bad relation {spec!r}: {e}") from None
    raise UsageError(f"unknown relation {spec!r}")


def _file_digest(path) -> str:
    try:
        return sha256(Path(path).read_text())
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e}") from None


def _read_seq(path):
    try:
        return read_sequence(path)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e}") from None


def read_tuples(path) -> list:
    """JSON array of arrays, or one comma-separated tuple per line."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e}") from None
    try:
        if str(path).endswith(".json"):
            data = json.loads(text)
            if not isinstance(data, list) or not all(isinstance(t, list) for t in data):
                raise UsageError("tuple file must hold an array of arrays")
            if any(isinstance(x, float) for t in data for x in t):
                raise UsageError("floating point elements are not exact")
            return [tuple(exact(x) for x in t) for t in data]
        out = []
        for line in text.splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                out.append(tuple(exact(x.strip()) for x in line.split(",")))
        return out
    except (ValueError, TypeError, ZeroDivisionError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot parse tuples in {path}: {e}") from None


# ---------------------------------------------------------------------------
# commands; each returns (outputs, measured, verification, summary lines)


def cmd_behrend(a, cfg, pmap):
    from .stepup import behrend_construction, find_3ap

    if a["m"] < 3:
        raise UsageError("--m must be at least 3")
    r = behrend_construction(a["m"])
    ver = {"three_ap_free": find_3ap(r.elements) is None, "in_range": all(1 <= x <= a["m"] for x in r.elements)}
    out = r.to_json()
    return out, {"size": len(r.elements), "measured_D": r.measured_D, "d": r.d}, ver, [
        f"|X| = {len(r.elements)}  d = {r.d}  D = {r.measured_D:.6f}"
    ]


def cmd_witness(a, cfg, pmap):
    from .stepup import e3_zero_triples, find_3ap, witness

    E, seq, rep = witness(a["k"], a["n"], a.get("base_len"))
    ver = {
        "levels_valid": rep.verified,
        "robust": find_3ap(seq) is None,
        "no_boundary_triples": not e3_zero_triples(rep.measured["base_seq"]),
    }
    if a.get("seq_out"):
        write_sequence(a["seq_out"], seq)
    out = {"relation": E.name, "sequence": seq, "report": rep.to_json(include_timing=False)}
    lines = [
        "base: " + " ".join(str(x) for x in rep.measured["base_seq"]),
        f"lengths per level: {rep.measured['lengths']}  T per level: {rep.measured['T_per_level']}",
        f"claimed no-indiscernible lengths: {rep.measured['claimed_bounds']}",
    ]
    return out, rep.measured, ver, lines


def cmd_evaluate(a, cfg, pmap):
    E = parse_relation(a["relation"])
    tuples = read_tuples(a["tuples"])
    for t in tuples:
        if len(t) != E.arity:
            raise UsageError(f"{E.name} takes {E.arity} arguments, tuple {t!r} has {len(t)}")
    values = pmap(lambda t: E(*t), tuples)
    undetermined = sum(v is None for v in values)
    if undetermined:
        raise BudgetExhausted(
            f"{undetermined} tuples undetermined at {cfg['precision_bits']} bits",
            {"values": values},
            {"undetermined": undetermined},
        )
    lines = [f"{','.join(format_exact(x) for x in t)} -> {v}" for t, v in zip(tuples, values)]
    return {"values": values}, {"tuples": len(tuples), "undetermined": 0}, {}, lines


def cmd_extract(a, cfg, pmap):
    from .extract import (
        Tournament,
        doubling_subsequence,
        erdos_szekeres,
        linearize_tournament,
        ramsey_via_stepping,
    )

    alg = a["algorithm"]
    if alg == "tournament":
        if not a.get("bits") or not a.get("size"):
            raise UsageError("tournament extraction needs --size and --bits")
        rep = linearize_tournament(Tournament.from_bitstring(a["size"], a["bits"]))
    else:
        if not a.get("seq"):
            raise UsageError(f"{alg} extraction needs --seq FILE")
        s = _read_seq(a["seq"])
        if alg == "indiscernible":
            rep = max_indiscernible(s, parse_relation(a["relation"]), cfg["budget_nodes"], cfg["budget_ms"], cfg["seed"])
        elif alg == "stepping":
            rep = ramsey_via_stepping(s, parse_relation(a["relation"]), cfg["budget_nodes"], cfg["budget_ms"], cfg["seed"])
        elif alg == "monotone":
            rep = erdos_szekeres(s, a["r"], a["s"])
        else:
            rep = doubling_subsequence(s, a["n"], strict=a.get("strict", False))
    out = rep.to_json(include_timing=False)
    ver = {"certificate": bool(rep.verified)}
    lines = [f"{rep.certificate}: length {rep.length}, positions {rep.positions}, verified {rep.verified}"]
    if alg == "indiscernible" and not rep.exhaustive:
        raise BudgetExhausted("search budget exhausted; result is a lower bound", out, rep.measured, ver)
    return out, rep.measured, ver, lines


def cmd_ramsey(a, cfg, pmap):
    k, n, cap = a["k"], a["n"], a["cap"]
    if a["mode"] == "estimate":
        est = ramsey_search_estimate(k, n, cap)
        return {"estimate": est}, {}, {}, [f"2^{est.bit_length() - 1} colorings"]
    N = ramsey_exact(k, n, cap)
    return {"N": N}, {}, {"found": N is not None}, [str(N) if N is not None else f"not found up to {cap}"]


def cmd_padic(a, cfg, pmap):
    from .padic import ValBall, ball_refine, distinct_valuation_points, linear_growing_extract, smallest_ball

    s = _read_seq(a["seq"])
    p = a["p"]
    pipe = a["pipeline"]
    if pipe == "extract":
        short = None
        try:
            res = linear_growing_extract(s, p, a["k"], a["n"])
        except ShortInput as e:
            res, short = e.partial, str(e)
        tr = res.trace
        ver = {
            "growing": bool(tr["growing_verified"]),
            "embedding": bool(tr["embedding_verified"]),
            "bookkeeping": all(tr.get("bookkeeping", {}).values()),
        }
        out = res.to_json()
        out["short"] = short
        lines = [f"case {res.case}: {len(res.growing)} terms, orientation {res.orientation}, indices {res.indices}"]
        if short:
            lines.append(f"short input: {short}")
        return out, {k: v for k, v in tr.items() if k.startswith("K")}, ver, lines
    if pipe == "refine":
        ball = smallest_ball(s, p)
        alpha, r = ball_refine(s, ball)
        inside = sum(1 for x in s if x in ValBall(alpha, r, p))
        ver = {"double_inequality": len(s) <= p * inside < p * len(s)}
        return {"alpha": alpha, "radius": r, "inside": inside}, {}, ver, [f"B({format_exact(alpha)}, {r}) holds {inside}"]
    alpha, pts, chain = distinct_valuation_points(s, a["k"], p)
    ver = {"sandwich": chain.sandwich_ok([exact(x) for x in s], p)}
    out = {"alpha": alpha, "points": pts, "radii": chain.radii, "valuations": chain.valuations}
    return out, {}, ver, [f"alpha = {format_exact(alpha)}, valuations {chain.valuations}"]


def cmd_verify(a, cfg, pmap):
    from .suites import PROFILES, SUITES

    if a.get("replay"):
        return _replay(a["replay"], cfg)
    names = list(SUITES) if a["suite"] == "all" else [a["suite"]]
    prof = PROFILES[a["profile"]]
    outputs, measured, ver = {}, {}, {}
    lines = []
    for name in names:
        rows, meas, checks = SUITES[name](cfg["seed"], pmap, prof)
        outputs[name] = rows
        measured[name] = meas
        for c, v in checks.items():
            ver[f"{name}.{c}"] = bool(v)
        lines.append(f"{name}: " + ", ".join(f"{c}={'pass' if v else 'FAIL'}" for c, v in checks.items()))
    return outputs, measured, ver, lines


def _replay(path, cfg):
    try:
        recs = read_records(path)
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read records from {path}: {e}") from None
    ver, outs, lines = {}, [], []
    for i, rec in enumerate(recs):
        if rec.get("schema") != SCHEMA:
            raise UsageError(f"record {i} has unsupported schema {rec.get('schema')!r}")
        digest_ok = record_digest(rec) == rec.get("digest")
        again = run_command(rec["command"], rec["args"], dict(rec["config"], threads=cfg["threads"], out=None, format="json"))
        same = again["verification"] == rec["verification"] and again["outputs"] == rec["outputs"]
        ver[f"{i}.digest"] = digest_ok
        ver[f"{i}.reproduced"] = same
        outs.append({"command": rec["command"], "digest": rec.get("digest"), "replayed_digest": again["digest"]})
        lines.append(f"record {i} ({rec['command']}): digest {'ok' if digest_ok else 'MISMATCH'}, "
                     f"rerun {'identical' if same else 'DIFFERENT'}")
    return outs, {"records": len(recs)}, ver, lines


COMMANDS = {
    "behrend": cmd_behrend,
    "witness": cmd_witness,
    "evaluate": cmd_evaluate,
    "extract": cmd_extract,
    "ramsey": cmd_ramsey,
    "padic": cmd_padic,
    "verify": cmd_verify,
}

FILE_ARGS = ("seq", "tuples", "replay")


def run_command(command: str, args: dict, cfg: dict, echo=None) -> dict:
    """Run one command and return its record (not yet written anywhere)."""
    t0 = time.perf_counter()
    files = {k: _file_digest(args[k]) for k in FILE_ARGS if args.get(k)}
    input_digest = sha256(canonical({"command": command, "args": args, "files": files}))
    pmap = make_pmap(cfg["threads"])
    status, code = "ok", EXIT_OK
    try:
        with precision_ceiling(cfg["precision_bits"]):
            outputs, measured, ver, lines = COMMANDS[command](args, cfg, pmap)
        if not all(ver.values()):
            status, code = "failed", EXIT_FAILED
    except RefusedTooLarge as e:
        outputs = {"error": str(e), "estimate": e.estimate, "achievable": e.achievable}
        measured, ver, lines = {}, {}, [f"refused: {e}"]
        status, code = "refused", EXIT_REFUSED
    except BudgetExhausted as e:
        msg, outputs, measured, *rest = e.args
        ver = rest[0] if rest else {}
        lines = [f"budget: {msg}"]
        status, code = "budget", EXIT_REFUSED
    if echo is not None:
        for line in lines:
            echo(line)
    runtime = {
        "threads": cfg["threads"],
        "wall_clock_s": time.perf_counter() - t0,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    return make_record(command, args, _recorded_config(cfg), input_digest, outputs, measured, ver, status, code, runtime)


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run configuration (RAMSEYFORGE_* environment variables give defaults)")
    g.add_argument("--seed", type=int, help="RNG seed (default 0)")
    g.add_argument("--threads", type=_positive_int, help="worker threads (default 1)")
    g.add_argument("--precision-bits", type=_positive_int, help=f"sign evaluation ceiling (default {DEFAULT_MAX_BITS})")
    g.add_argument("--budget-nodes", type=_positive_int, help="search node budget")
    g.add_argument("--budget-ms", type=_nonneg_float, help="search wall-clock budget (advisory)")
    g.add_argument("--out", help="directory for records ('-' prints the record)")
    g.add_argument("--format", choices=("json", "csv"), help="record format in --out (default json)")

    parser = argparse.ArgumentParser(prog="ramseyforge", description="Exact Ramsey-type constructions and extractions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("behrend", parents=[common], help="3-AP-free set in [1..m]")
    p.add_argument("--m", type=int, required=True)

    p = sub.add_parser("witness", parents=[common], help="iterated step-up witness sequence")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--base-len", type=int)
    p.add_argument("--seq-out", help="write the final sequence (CSV or JSON by suffix)")

    p = sub.add_parser("evaluate", parents=[common], help="evaluate a relation on tuples")
    p.add_argument("--relation", required=True, help="E3..E6, up:<k>:<T>, rand:<k>:<seed>, const:<k>:<0|1>")
    p.add_argument("--tuples", required=True, help="JSON array of arrays or one comma-separated tuple per line")

    p = sub.add_parser("extract", parents=[common], help="run an extractor on a sequence")
    p.add_argument("algorithm", choices=("indiscernible", "stepping", "monotone", "doubling", "tournament"))
    p.add_argument("--seq", help="sequence file (CSV or JSON)")
    p.add_argument("--relation", default="E3")
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--size", type=int, help="tournament size")
    p.add_argument("--bits", help="tournament upper triangle, row-major")

    p = sub.add_parser("ramsey", parents=[common], help="exact tiny Ramsey numbers")
    p.add_argument("mode", choices=("exact", "estimate"))
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--cap", type=int, default=10)

    p = sub.add_parser("padic", parents=[common], help="p-adic pipelines")
    p.add_argument("pipeline", choices=("extract", "refine", "chain"))
    p.add_argument("--seq", required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--n", type=int, default=2)

    p = sub.add_parser("verify", parents=[common], help="seeded verification suites or record replay")
    p.add_argument("--suite", default="all")
    p.add_argument("--profile", choices=("quick", "full"), default="quick")
    p.add_argument("--replay", help="records file to re-run and compare")
    return parser


_CONFIG_KEYS = ("seed", "threads", "precision_bits", "budget_nodes", "budget_ms", "out", "format")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        cfg = resolve_config(ns)
        args = {k: v for k, v in vars(ns).items() if k not in _CONFIG_KEYS and k != "command"}
        if ns.command == "verify" and not args.get("replay"):
            from .suites import SUITES

            if args["suite"] != "all" and args["suite"] not in SUITES:
                raise UsageError(f"unknown suite {args['suite']!r}; choose all or one of {', '.join(SUITES)}")
        rec = run_command(ns.command, args, cfg, echo=print)
        write_record(rec, cfg["out"], cfg["format"])
        return rec["exit_code"]
    except UsageError as e:
        print(f"ramseyforge: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (RamseyForgeError, OSError) as e:
        print(f"ramseyforge: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
