"""Command-line interface: ``fictplay <command> ...``.

Exit codes: 0 ok / all checks hold, 1 a check failed, 2 usage or config
error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction

from . import __version__
from .analysis import segment_phases, verify_all
from .dynamics import DynamicKind, SnapshotPolicy, TieBreakRule, run
from .experiments import ExperimentConfig, probe_conjectures, random_diagonal_instance, run_batch, run_stream
from .game import PayoffMatrix, duality_gap, load_matrix, support_form_gap
from .io import load_trace, reports_to_json, save_trace, write_trace

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _numbers(text: str) -> list:
    try:
        return [Fraction(tok.strip()) for tok in text.split(",") if tok.strip()]
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse number list {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse integer list {text!r}") from None


def _add_matrix_opts(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--matrix", metavar="FILE", help="matrix JSON file")
    g.add_argument("--identity", type=int, metavar="N", help="identity matrix I_N")
    g.add_argument("--diag", metavar="a,b,c", help="diagonal matrix")


def _add_run_opts(p):
    p.add_argument("--rounds", type=int, default=1000)
    p.add_argument("--dynamic", choices=[k.value for k in DynamicKind], default="fp")
    p.add_argument("--sigma-x", help="1-based tie-break ranks of the row actions, or 'random'")
    p.add_argument("--sigma-y", help="1-based tie-break ranks of the column actions, or 'random'")
    p.add_argument("--start", default="e1,e1", help="vertex pair 'eI,eJ' or 'random'")
    p.add_argument("--mode", choices=["auto", "exact", "float"], default="auto")
    p.add_argument("--seed", type=int, default=0)


def _matrix(args) -> PayoffMatrix:
    try:
        if args.matrix:
            return load_matrix(args.matrix)
        if args.identity is not None:
            return PayoffMatrix.identity(args.identity)
        return PayoffMatrix.diagonal(_numbers(args.diag))
    except (OSError, ValueError, KeyError) as e:
        raise UsageError(f"bad matrix: {e}") from None


def _rule(args, n: int, rng) -> TieBreakRule:
    def one(text):
        if text is None:
            return list(range(1, n + 1))
        if text == "random":
            return (rng.permutation(n) + 1).tolist()
        return _ints(text)

    sx, sy = one(args.sigma_x), one(args.sigma_y)
    if len(sx) != n or len(sy) != n:
        raise UsageError(f"tie-break ranks need {n} entries")
    try:
        return TieBreakRule.from_one_based(sx, sy)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _start(text: str, n: int, rng):
    if text == "random":
        return (int(rng.integers(n)), int(rng.integers(n)))
    parts = [s.strip().lower() for s in text.split(",")]
    if len(parts) != 2 or not all(s.startswith("e") and s[1:].isdigit() for s in parts):
        raise UsageError(f"--start expects 'eI,eJ', got {text!r}")
    a, b = (int(s[1:]) - 1 for s in parts)
    if not (0 <= a < n and 0 <= b < n):
        raise UsageError(f"--start {text} out of range for n={n}")
    return (a, b)


def _fresh_trace(args, snapshots="none"):
    if args.rounds < 1:
        raise UsageError("--rounds must be >= 1")
    A = _matrix(args)
    rng = run_stream(args.seed, 0)
    rule = _rule(args, A.n, rng)
    start = _start(args.start, A.n, rng)
    try:
        return run(args.dynamic, A, rule, start, args.rounds, snapshots=snapshots, mode=args.mode)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _trace_from_args(args):
    if getattr(args, "trace", None):
        A = _matrix(args) if (args.matrix or args.identity is not None or args.diag) else None
        try:
            return load_trace(args.trace, A)
        except (OSError, ValueError, KeyError) as e:
            raise UsageError(f"cannot read trace: {e}") from None
    if not (args.matrix or args.identity is not None or args.diag):
        raise UsageError("give --trace FILE or a matrix (--matrix/--identity/--diag)")
    return _fresh_trace(args)


def _open_out(path):
    return sys.stdout if path in (None, "-") else open(path, "w")


def cmd_simulate(args) -> int:
    try:
        SnapshotPolicy.parse(args.snapshots)
    except ValueError as e:
        raise UsageError(str(e)) from None
    tr = _fresh_trace(args, snapshots=args.snapshots)
    if args.out in (None, "-"):
        write_trace(tr, sys.stdout, meta=not args.no_meta)
    else:
        save_trace(tr, args.out, meta=not args.no_meta)
    if tr.error:
        print(f"warning: {tr.error}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_phases(args) -> int:
    tr = _trace_from_args(args)
    seg = segment_phases(tr)
    out = _open_out(args.out)
    try:
        if args.json:
            obj = {
                "phases": [{"start_t": p.start_t, "len": p.length, "kind": p.kind,
                            "i": p.i + 1, "j": p.j + 1} for p in seg.phases],
                "pairs": [{"s": p.s, "T_s": p.T_s, "from": p.from_action + 1, "to": p.to_action + 1,
                           "sync_len": p.sync_len, "split_len": p.split_len,
                           "psi_start": _jnum(p.psi_start), "psi_end": _jnum(p.psi_end),
                           "epsilon": _jnum(p.epsilon)} for p in seg.pairs],
                "prologue": [p.label() for p in seg.prologue],
                "epilogue": [p.label() for p in seg.epilogue],
                "T1": seg.T1,
                "anomalies": seg.anomalies,
            }
            json.dump(obj, out, indent=1)
            out.write("\n")
        else:
            out.write(f"{len(seg.phases)} phases, {len(seg.pairs)} complete pairs, T1={seg.T1}\n")
            out.write(f"{'#':>5} {'phase':<14} {'start':>8} {'len':>6}\n")
            for k, p in enumerate(seg.phases[: args.limit]):
                out.write(f"{k + 1:>5} {p.label():<14} {p.start_t:>8} {p.length:>6}\n")
            out.write(f"\n{'s':>5} {'T_s':>8} {'i->j':>8} {'sync':>6} {'split':>6} {'psi(T_s)':>12} {'eps':>10}\n")
            for p in seg.pairs[: args.limit]:
                out.write(f"{p.s:>5} {p.T_s:>8} {f'{p.from_action + 1}->{p.to_action + 1}':>8} "
                          f"{p.sync_len:>6} {p.split_len:>6} {str(p.psi_start):>12} {str(p.epsilon):>10}\n")
            for a in seg.anomalies[: args.limit]:
                out.write(f"anomaly: {a}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _jnum(v):
    if isinstance(v, Fraction):
        return v.numerator if v.denominator == 1 else float(v)
    return v


def _summarise(reports, label, stream):
    bad = [r for r in reports if r.applicable and not r.holds]
    status = "ok" if not bad else "FAIL " + ",".join(r.theorem_id for r in bad)
    print(f"{label}: {status}", file=stream)
    return not bad


def cmd_verify(args) -> int:
    include = set(args.checks.split(",")) if args.checks else None
    results = []
    ok = True
    t0 = time.perf_counter()
    if args.random:
        if args.rounds < 1:
            raise UsageError("--rounds must be >= 1")
        for k in range(args.random):
            rng = run_stream(args.seed, k)
            A, rule, start = random_diagonal_instance(rng, args.n_min, args.n_max)
            tr = run(args.dynamic, A, rule, start, args.rounds)
            reps = verify_all(tr, include)
            ok &= _summarise(reps, f"instance {k} (n={A.n}, diag={[str(d) for d in A.diag_exact]})", sys.stderr)
            results.append({"instance": k, "n": A.n, "reports": reports_to_json(reps)})
    else:
        tr = _trace_from_args(args)
        reps = verify_all(tr, include)
        for r in reps:
            print(r.line(), file=sys.stderr)
        ok = all(r.holds for r in reps if r.applicable)
        if tr.error:
            print(f"warning: {tr.error}", file=sys.stderr)
        results = reports_to_json(reps)
    print(f"verified in {time.perf_counter() - t0:.2f}s: {'all hold' if ok else 'FAILURES'}", file=sys.stderr)
    out = _open_out(args.out)
    try:
        json.dump(results, out, indent=1)
        out.write("\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK if ok else EXIT_FAIL


def cmd_experiment(args) -> int:
    try:
        cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
        overrides = {k: getattr(args, k) for k in ("runs", "rounds", "n", "seed") if getattr(args, k) is not None}
        if args.out:
            overrides["output_path"] = args.out
        if overrides:
            cfg = ExperimentConfig.from_json({**cfg.to_json(), **overrides})
    except (OSError, ValueError, TypeError) as e:
        raise UsageError(f"bad config: {e}") from None
    t0 = time.perf_counter()
    res = run_batch(cfg, workers=args.workers)
    if not cfg.output_path:
        sys.stdout.write(res.csv())
    msg = (f"{cfg.runs} runs x {cfg.rounds} rounds in {time.perf_counter() - t0:.2f}s; "
           f"max psi/sqrt(t) over t >= {cfg.ratio_from}: {res.ratio_constant():.6g}")
    print(msg, file=sys.stderr)
    if res.failed:
        print(f"failed runs: {res.failed}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_gap(args) -> int:
    A = _matrix(args)
    x, y = _numbers(args.x), _numbers(args.y)
    if len(x) != A.n or len(y) != A.n:
        raise UsageError(f"--x and --y need {A.n} entries")
    g = duality_gap(x, y, A)
    print(_fmt(g))
    if args.support:
        print(_fmt(support_form_gap(x, y, A)))
    return EXIT_OK


def _fmt(v):
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v} ({float(v)!r})"
    return repr(float(v))


def cmd_probe(args) -> int:
    rep = probe_conjectures(args.instances, args.rounds, args.seed, args.n_min, args.n_max)
    out = _open_out(args.out)
    try:
        json.dump(rep, out, indent=1)
        out.write("\n")
    finally:
        if out is not sys.stdout:
            out.close()
    print(f"AFP max psi/sqrt(t): {rep['afp_summary']['max_psi_over_sqrt_t']:.6g}; "
          f"OFP max psi: {rep['ofp_summary']['max_psi']:.6g}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fictplay", description="Fictitious Play on zero-sum matrix games.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one dynamic and write its JSONL trace")
    _add_matrix_opts(p)
    _add_run_opts(p)
    p.add_argument("--snapshots", default="none", help="none | full | strided:k")
    p.add_argument("--no-meta", action="store_true", help="omit the leading meta line")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("phases", help="segment a trace into phases and sync-split pairs")
    p.add_argument("--trace", help="JSONL trace file")
    _add_matrix_opts(p, required=False)
    _add_run_opts(p)
    p.add_argument("--json", action="store_true")
    p.add_argument("--limit", type=int, default=None, help="print at most this many rows per table")
    p.add_argument("--out")
    p.set_defaults(func=cmd_phases)

    p = sub.add_parser("verify", help="run every applicable checker")
    p.add_argument("--trace", help="JSONL trace file")
    _add_matrix_opts(p, required=False)
    _add_run_opts(p)
    p.add_argument("--random", type=int, metavar="K", help="check K random exact diagonal instances instead")
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--checks", help="comma-separated subset of check ids")
    p.add_argument("--out", help="JSON reports file (default stdout)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment", help="run a batch and write the max-gap CSV")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--runs", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="CSV file (default stdout)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("gap", help="duality gap of a given pair (x, y)")
    _add_matrix_opts(p)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--support", action="store_true", help="also print the support-form value")
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("probe", help="empirical AFP / OFP behaviour on random diagonal games")
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--rounds", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_probe)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on usage errors
    try:
        return args.func(args)
    except UsageError as e:
        print(f"fictplay {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        return EXIT_OK
    except Exception as e:
        print(f"fictplay {args.command}: runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
