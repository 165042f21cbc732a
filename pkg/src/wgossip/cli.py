"""wgossip command line: analyze | derive | simulate | verify | gen."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import __version__
from .derived import build_derived_graph, exhaustive_closed_walk
from .engine import (
    DEFAULT_TOL,
    ContractionError,
    GroupCapError,
    Verdict,
    WalkVerdict,
    check_preconditions,
    epsilon_bound,
    global_partition,
    limit_group,
    run_to_convergence,
)
from .fixtures import KINDS, gen_fixture
from .graph import CycleLimitError, validate
from .holonomy import NotHolonomicError, analyze_graph
from .scenario import Scenario, ScenarioError, dumps_scenario, load_scenario, write_atomic
from .stomat import fmt_fraction

EXIT_OK, EXIT_PARSE, EXIT_PRECONDITION, EXIT_CONVERGENCE = 0, 2, 3, 4

log = logging.getLogger("wgossip")


class CliError(Exception):
    def __init__(self, msg: str, code: int):
        super().__init__(msg)
        self.code = code


def _tol(text: str) -> float:
    try:
        value = float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"invalid tolerance {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return value


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("expected a nonnegative integer")
    return v


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wgossip", description=__doc__)
    p.add_argument("--version", action="version", version=f"wgossip {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario=True):
        if scenario:
            sp.add_argument("scenario", help="scenario JSON file")
        sp.add_argument("--out", help="output directory (default: print to stdout)")
        sp.add_argument("--seed", type=_seed, help="random seed (default 0)")

    a = sub.add_parser("analyze", help="topology, cycle orders, partitions, epsilon and K")
    common(a)
    a.add_argument("--cap", type=int, help="w-order search cap (default: structural bound per cycle)")
    a.add_argument("--mode", choices=("exact", "float"), help="analysis requires exact")

    d = sub.add_parser("derive", help="derived graph and a canonical exhaustive closed walk")
    common(d)
    d.add_argument("--dot", action="store_true", help="also write derived.dot")

    s = sub.add_parser("simulate", help="repeat a walk's schedule until the blocks contract")
    common(s)
    s.add_argument("--walk", help="walk JSON from 'derive' (default: canonical walk)")
    s.add_argument("--reps", type=_nonneg, help="maximum repetitions (default 10000)")
    s.add_argument("--tol", type=_tol, help=f"block semi-norm tolerance (default {DEFAULT_TOL})")
    s.add_argument("--mode", choices=("exact", "float"), help="simulation arithmetic (default float)")

    v = sub.add_parser("verify", help="check the limit-set clauses over seeded walks")
    common(v)
    v.add_argument("--walks", type=int, help="number of walks (default 5)")
    v.add_argument("--reps", type=_nonneg, help="maximum repetitions per walk (default 10000)")
    v.add_argument("--tol", type=_tol, help=f"block semi-norm tolerance (default {DEFAULT_TOL})")
    v.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")

    g = sub.add_parser("gen", help="write a ground-truth fixture scenario")
    g.add_argument("kind", choices=KINDS)
    g.add_argument("--seed", type=_seed, default=0)
    g.add_argument("--n", type=int)
    g.add_argument("--m", type=int)
    g.add_argument("--out", help="output file (default: stdout)")
    return p


def _setting(args, sc: Scenario, key: str, default):
    value = getattr(args, key, None)
    if value is None:
        value = sc.options.get(key, default)
    return value


def _emit(args, name: str, text: str) -> None:
    if args.out:
        write_atomic(Path(args.out) / name, text)
        log.info("wrote %s", Path(args.out) / name)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _load(args) -> Scenario:
    try:
        return load_scenario(args.scenario)
    except ScenarioError as exc:
        raise CliError(f"{args.scenario}: {exc}", EXIT_PARSE) from None


def cmd_analyze(args) -> int:
    sc = _load(args)
    if _setting(args, sc, "mode", "exact") != "exact":
        raise CliError("w-order requires exact mode", EXIT_PARSE)
    G, w = sc.graph, sc.weight
    cap = _setting(args, sc, "cap", None)
    diag = validate(G)
    report = analyze_graph(G, w, cap)
    out = {
        "settings": {"cap": cap if cap is not None else "structural", "seed": _setting(args, sc, "seed", 0)},
        "topology": {
            "simple": diag.simple,
            "connected": diag.connected,
            "bridgeless": diag.bridgeless,
            "bridges": [[u + 1, v + 1] for u, v in diag.bridges],
            "has_cycles": diag.has_cycles,
            "messages": diag.messages,
        },
        "holonomic": report.holonomic,
        "cycles": [a.to_json() for a in report.analyses],
    }
    if report.holonomic:
        part = global_partition(report.analyses, G.dim)
        eps = epsilon_bound(report.analyses)
        out["global_partition"] = part.to_json()
        out["epsilon"] = fmt_fraction(eps) if eps is not None else "no contraction blocks"
        try:
            out["group"] = limit_group(report.analyses, part).to_json()
        except GroupCapError as exc:
            out["group"] = {"error": str(exc), "generators": [list(g) for g in exc.generators]}
    else:
        out["offending"] = [{"cycle": a.cycle.label, "witness": a.witness} for a in report.offending]
    _emit(args, "analysis.json", _dump(out))
    for u, v in diag.bridges:
        print(f"bridge: (v{u + 1},v{v + 1}); theorem preconditions unmet", file=sys.stderr)
    if not diag.connected:
        print("not connected; theorem preconditions unmet", file=sys.stderr)
    if not report.holonomic:
        print("not w-holonomic: " + ", ".join(a.cycle.label for a in report.offending), file=sys.stderr)
    return EXIT_OK if diag.theorem_ready and report.holonomic and diag.has_cycles else EXIT_PRECONDITION


def _derived(sc: Scenario):
    try:
        return build_derived_graph(sc.graph, sc.weight)
    except NotHolonomicError as exc:
        raise CliError(str(exc), EXIT_PRECONDITION) from None


def cmd_derive(args) -> int:
    sc = _load(args)
    D = _derived(sc)
    seed = _setting(args, sc, "seed", None)
    walk = exhaustive_closed_walk(D, seed)
    doc = D.to_json()
    doc["settings"] = {"seed": seed}
    walk_doc = {"walk": walk, "seed": seed}
    if args.out:
        _emit(args, "derived.json", _dump(doc))
        _emit(args, "walk.json", _dump(walk_doc))
        if args.dot:
            _emit(args, "derived.dot", D.to_dot())
    else:
        doc["walk"] = walk
        sys.stdout.write(_dump(doc))
        if args.dot:
            sys.stdout.write(D.to_dot())
    return EXIT_OK


def _read_walk(path: str) -> list[int]:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}", EXIT_PARSE) from None
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}", EXIT_PARSE) from None
    walk = doc.get("walk") if isinstance(doc, dict) else doc
    if not isinstance(walk, list) or not all(isinstance(k, int) and not isinstance(k, bool) for k in walk):
        raise CliError(f"{path}: expected a list of derived edge ids under 'walk'", EXIT_PARSE)
    return walk


def cmd_simulate(args) -> int:
    sc = _load(args)
    D = _derived(sc)
    seed = _setting(args, sc, "seed", None)
    walk = _read_walk(args.walk) if args.walk else exhaustive_closed_walk(D, seed)
    tol = float(Fraction(str(_setting(args, sc, "tol", DEFAULT_TOL))))
    reps = _setting(args, sc, "reps", 10_000)
    mode = args.mode or "float"
    log.info("simulate: mode=%s tol=%g reps=%d seed=%s", mode, tol, reps, seed)
    try:
        report = run_to_convergence(D, walk, tol=tol, max_reps=reps, mode=mode)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_PARSE) from None
    except ContractionError as exc:
        raise CliError(str(exc), EXIT_CONVERGENCE) from None
    except GroupCapError as exc:
        raise CliError(str(exc), EXIT_CONVERGENCE) from None
    doc = report.to_json()
    doc["settings"] = {"mode": mode, "tol": tol, "reps": reps, "seed": seed, "walk": list(walk)}
    _emit(args, "report.json", _dump(doc))
    if args.out:
        _emit(args, "trace.csv", report.trace_csv())
    if not report.converged:
        print(f"not converged after {report.reps} repetitions "
              f"(max block semi-norm {report.max_seminorm:.3e})", file=sys.stderr)
        return EXIT_CONVERGENCE
    if report.violations:
        print(f"{len(report.violations)} contraction bound violations", file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


def _run_walk(job) -> WalkVerdict:
    D, walk, tol, reps = job
    try:
        return WalkVerdict(walk, run_to_convergence(D, walk, tol=tol, max_reps=reps))
    except (ContractionError, ValueError, GroupCapError) as exc:
        return WalkVerdict(walk, None, str(exc))


def cmd_verify(args) -> int:
    sc = _load(args)
    G, w = sc.graph, sc.weight
    seed = _setting(args, sc, "seed", 0)
    n_walks = _setting(args, sc, "walks", 5)
    tol = float(Fraction(str(_setting(args, sc, "tol", DEFAULT_TOL))))
    reps = _setting(args, sc, "reps", 10_000)
    settings = {"walks": n_walks, "seed": seed, "tol": tol, "reps": reps}
    problem, analyses = check_preconditions(G, w)
    if problem:
        doc = Verdict(problem, []).to_json()
        doc["settings"] = settings
        _emit(args, "verdict.json", _dump(doc))
        print(problem, file=sys.stderr)
        return EXIT_PRECONDITION
    D = build_derived_graph(G, w, analyses)
    walks = [exhaustive_closed_walk(D)] + [exhaustive_closed_walk(D, seed + k) for k in range(1, n_walks)]
    jobs = [(D, wk, tol, reps) for wk in walks]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_run_walk, jobs))
    else:
        results = [_run_walk(j) for j in jobs]
    order = next((r.report.group.order for r in results if r.report), None)
    verdict = Verdict(None, results, order)
    doc = verdict.to_json()
    doc["settings"] = settings
    _emit(args, "verdict.json", _dump(doc))
    print(f"{'walk':>4}  {'(i)':>5} {'(ii)':>5} {'(iii)':>5}  |L|  |K|", file=sys.stderr)
    for k, r in enumerate(results):
        c = r.clauses
        cell = lambda x: "n/a" if x is None else ("pass" if x else "FAIL")  # noqa: E731
        size = len(r.report.observed) if r.report else "-"
        print(f"{k + 1:>4}  {cell(c['i']):>5} {cell(c['ii']):>5} {cell(c['iii']):>5}  {size:>3}  {order}", file=sys.stderr)
    return EXIT_OK if verdict.passed else EXIT_CONVERGENCE


def cmd_gen(args) -> int:
    try:
        fx = gen_fixture(args.kind, args.seed, args.n, args.m)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_PARSE) from None
    text = dumps_scenario(Scenario(fx.graph, fx.weight, {"seed": args.seed}))
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "derive": cmd_derive, "simulate": cmd_simulate, "verify": cmd_verify, "gen": cmd_gen}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"wgossip: {exc}", file=sys.stderr)
        return exc.code
    except CycleLimitError as exc:
        print(f"wgossip: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
