"""Command-line driver: plan, slice, simulate, bench, export.

JSON goes to stdout, diagnostics to stderr, data files to ``--out``.
Exit codes: 0 ok, 1 internal error, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from pathlib import Path

from twslice import costmodel
from twslice.circuit import CircuitParseError, build_network, network_from_json, parse_circuit
from twslice.deletion import SCORES, ScoreFunction, greedy_treewidth_deletion
from twslice.engine import parallel_contract
from twslice.graph import write_gr
from twslice.ordering import (
    HEURISTICS,
    build_td_from_order,
    check_order,
    find_order,
    order_supplier,
    read_td,
    recover_order,
    treewidth_from_order,
    write_td,
)

SCHEMA = 1
WORKERS_ENV = "TWSLICE_WORKERS"


class UsageError(Exception):
    pass


class Timer:
    def __init__(self):
        self.phases: dict[str, float] = {}

    def __call__(self, name):
        timer = self

        class _Phase:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                timer.phases[name] = round((time.perf_counter() - self.t0) * 1000, 3)

        return _Phase()


# -- loading -------------------------------------------------------------------------------

def load_input(path: str, initial: str | None = None, final: str | None = None):
    """Returns (source metadata, network, graph)."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot open {path}: {e.strerror or e}") from None
    if path.endswith(".json") or text.lstrip().startswith("{"):
        try:
            net, g = network_from_json(text)
        except (ValueError, KeyError, TypeError) as e:
            raise UsageError(f"cannot parse network {path}: {e}") from None
        meta = {"kind": "network", "variables": len(g), "tensors": len(net.tensors)}
    else:
        try:
            circuit = parse_circuit(text)
            net, g = build_network(circuit, initial, final)
        except (CircuitParseError, ValueError) as e:
            raise UsageError(f"{path}: {e}") from None
        meta = {"kind": "circuit", "n_qubits": circuit.n_qubits, "depth": circuit.depth,
                "gates": len(circuit.ops), "variables": len(g), "tensors": len(net.tensors)}
    return {"path": path, **meta}, net, g


def _initial_order(args, g):
    if getattr(args, "order_file", None):
        try:
            with open(args.order_file) as f:
                td = read_td(f, {k + 1: u for k, u in enumerate(g.vertices)})
        except OSError as e:
            raise UsageError(f"cannot open {args.order_file}: {e.strerror or e}") from None
        order = recover_order(td, graph=g)
        return check_order(g, order), treewidth_from_order(g, order)
    if getattr(args, "solver", None):
        order = order_supplier("external", command=args.solver.split())(g)
        return order, treewidth_from_order(g, order)
    return find_order(g, args.heuristic, args.seed, restarts=args.budget,
                      time_budget=args.wall_clock)


def _names(g, vs):
    return [g.name(v) for v in vs]


def _score_functions(args, kinds):
    fns = []
    for kind in kinds:
        upfront = args.upfront and kind in ("degree", "betweenness", "tw-delta")
        try:
            fns.append(ScoreFunction(kind, recalc_every=args.recalc_every,
                                     tie_break=args.tie_break, seed=args.seed, upfront=upfront))
        except ValueError as e:
            raise UsageError(str(e)) from None
    return fns


def _parse_scores(raw: str) -> list[str]:
    kinds = [s.strip() for s in raw.split(",") if s.strip()]
    if not kinds:
        raise UsageError("no score functions given")
    if kinds == ["all"]:
        return list(SCORES)
    bad = [k for k in kinds if k not in SCORES]
    if bad:
        raise UsageError(f"unknown score {bad[0]!r}; choose from {', '.join(SCORES)} or all")
    return kinds


def _cost_dict(plan, L=2):
    return costmodel.estimate(plan, L).as_dict()


class _Plan:
    def __init__(self, g, order, tau):
        self.mu = []
        self.reduced_graph = g
        self.reduced_order = order
        self.tau = tau


def _slice_entry(g, sf, plan, timings):
    entry = {
        "score": sf.kind, "label": sf.label, "recalc_every": sf.recalc_every,
        "upfront": sf.upfront, "tie_break": sf.tie_break,
        "mu": _names(g, plan.mu), "tau": plan.tau, "per_step_tau": plan.per_step_tau,
        "reduced_order": _names(g, plan.reduced_order), "cost": _cost_dict(plan),
    }
    if timings:
        entry["score_ms"] = [round(s * 1000, 3) for s in plan.score_seconds]
    return entry


def _steps_csv(g, plan, timings) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "removed_vertex", "treewidth_upper_bound", "elapsed_ms"])
    w.writerow([0, "", plan.initial_tau, 0 if timings else ""])
    for k, (u, tau) in enumerate(zip(plan.mu, plan.per_step_tau), 1):
        ms = round(plan.elapsed_seconds[k - 1] * 1000, 3) if timings else ""
        w.writerow([k, g.name(u), tau, ms])
    return buf.getvalue()


def _emit(doc):
    sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise UsageError(f"cannot create {out}: {e.strerror or e}") from None
    return out


# -- commands -------------------------------------------------------------------------------

def cmd_plan(args) -> int:
    timer = Timer()
    with timer("load"):
        source, net, g = load_input(args.path)
    with timer("order"):
        order, tau = _initial_order(args, g)
    report = {
        "schema": SCHEMA, "source": source,
        "order": {"heuristic": args.heuristic, "seed": args.seed, "budget": args.budget,
                  "treewidth": tau, "order": _names(g, order)},
        "cost": _cost_dict(_Plan(g, order, tau)), "slices": [],
    }
    if args.timings:
        report["timings_ms"] = timer.phases
    _emit(report)
    return 0


def _run_slices(args, g, order, kinds, timer):
    results = []
    supplier = order_supplier(args.heuristic, seed=args.seed, restarts=args.budget)
    for sf in _score_functions(args, kinds):
        with timer(f"slice:{sf.label}"):
            plan = greedy_treewidth_deletion(g, order, args.num_removed, sf, supplier)
        results.append((sf, plan))
    return results


def cmd_slice(args) -> int:
    kinds = _parse_scores(args.score)
    timer = Timer()
    with timer("load"):
        source, net, g = load_input(args.path)
    if not 0 <= args.num_removed < len(g):
        raise UsageError(f"--num-removed must be in [0, {len(g) - 1}]")
    with timer("order"):
        order, tau = _initial_order(args, g)
    results = _run_slices(args, g, order, kinds, timer)
    if args.out:
        out = _out_dir(args)
        for sf, plan in results:
            name = sf.label.replace("/", "_")
            (out / f"steps_{name}.csv").write_text(_steps_csv(g, plan, args.timings))
    if args.format == "csv":
        if len(results) > 1 and not args.out:
            raise UsageError("--format csv with several scores needs --out")
        if len(results) == 1:
            sys.stdout.write(_steps_csv(g, results[0][1], args.timings))
        return 0
    report = {
        "schema": SCHEMA, "source": source,
        "order": {"heuristic": args.heuristic, "seed": args.seed, "budget": args.budget,
                  "treewidth": tau, "order": _names(g, order)},
        "cost": _cost_dict(_Plan(g, order, tau)),
        "slices": [_slice_entry(g, sf, plan, args.timings) for sf, plan in results],
    }
    if args.timings:
        report["timings_ms"] = timer.phases
    _emit(report)
    return 0


def _workers(args) -> int | None:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    return args.workers


def cmd_simulate(args) -> int:
    timer = Timer()
    with timer("load"):
        source, net, g = load_input(args.path, args.initial, args.final)
    if not 0 <= args.num_removed < max(len(g), 1):
        raise UsageError(f"--num-removed must be in [0, {max(len(g) - 1, 0)}]")
    with timer("order"):
        order, _ = _initial_order(args, g)
    kinds = _parse_scores(args.score)
    if len(kinds) != 1:
        raise UsageError("simulate takes a single score")
    sf = _score_functions(args, kinds)[0]
    with timer("slice"):
        supplier = order_supplier(args.heuristic, seed=args.seed, restarts=args.budget)
        plan = greedy_treewidth_deletion(g, order, args.num_removed, sf, supplier)
    with timer("contract"):
        result = parallel_contract(net, plan, workers=_workers(args))
    L = max(net.dims.values(), default=2)
    cost = costmodel.estimate(plan, L)
    task_flops = sorted({t.flops for t in result.tasks})
    n_reduced = len(plan.reduced_graph)
    checks = {
        "flops_match_replay": task_flops == [cost.replay_flops],
        "peak_product_is_L_tau_plus_1": result.peak_product == L ** (plan.tau + 1),
        "leading_order_within_V": cost.replay_flops <= max(n_reduced, 1) * cost.per_task_flops,
    }
    report = {
        "schema": SCHEMA, "source": source,
        "initial": args.initial or "0" * source.get("n_qubits", 0),
        "final": args.final or "0" * source.get("n_qubits", 0),
        "amplitude": {"re": result.value.real, "im": result.value.imag},
        "mu": _names(g, plan.mu), "tau": plan.tau, "tasks": len(result.tasks),
        "measured": {"flops_per_task": task_flops[0], "total_flops": result.total_flops,
                     "peak_product": result.peak_product,
                     "peak_intermediate": result.peak_intermediate},
        "predicted": cost.as_dict(),
        "flops_discrepancy_per_task": task_flops[0] - cost.replay_flops,
        "checks": checks,
    }
    if args.timings:
        report["timings_ms"] = timer.phases
    _emit(report)
    return 0


def _curve_csv(labels, columns, n_rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", *labels])
    for k in range(n_rows):
        w.writerow([k, *(col[k] for col in columns)])
    return buf.getvalue()


def cmd_bench(args) -> int:
    kinds = _parse_scores(args.scores)
    source, net, g = load_input(args.path)
    if not 0 <= args.m_max < len(g):
        raise UsageError(f"--m-max must be in [0, {len(g) - 1}]")
    order, tau = _initial_order(args, g)
    fns = _score_functions(args, kinds)
    for k in args.tw_recalc or []:
        fns.append(ScoreFunction("tw-delta", recalc_every=k, tie_break=args.tie_break,
                                 seed=args.seed))
    supplier = order_supplier(args.heuristic, seed=args.seed, restarts=args.budget)
    L = max(net.dims.values(), default=2)
    labels, taus, times, flops, totals, mems = [], [], [], [], [], []
    for sf in fns:
        plan = greedy_treewidth_deletion(g, order, args.m_max, sf, supplier)
        curve = [plan.initial_tau] + plan.per_step_tau
        labels.append(sf.label)
        taus.append(curve)
        times.append([0.0] + [round(s * 1000, 3) for s in plan.score_seconds])
        flops.append([L ** (t + 1) for t in curve])
        totals.append([L ** (t + 1) * L ** k for k, t in enumerate(curve)])
        mems.append([L ** t for t in curve])
    out = _out_dir(args)
    n = args.m_max + 1
    files = {"treewidth.csv": taus, "time_ms.csv": times, "flops_per_task.csv": flops,
             "flops_total.csv": totals, "memory.csv": mems}
    for name, cols in files.items():
        (out / name).write_text(_curve_csv(labels, cols, n))
    _emit({"schema": SCHEMA, "source": source, "treewidth": tau, "curves": labels,
           "files": sorted(files)})
    return 0


def cmd_export(args) -> int:
    _, _, g = load_input(args.path)
    out = Path(args.out)
    with open(out, "w") as f:
        write_gr(g, f)
    if args.td:
        order, _ = _initial_order(args, g)
        with open(args.td, "w") as f:
            write_td(build_td_from_order(g, order), f, len(g),
                     {u: k + 1 for k, u in enumerate(g.vertices)})
    return 0


# -- argument parsing -----------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _order_flags(p):
    p.add_argument("--heuristic", choices=HEURISTICS, default="min-fill")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=1,
                   help="number of order-search restarts (deterministic budget)")
    p.add_argument("--wall-clock", type=float, default=None, metavar="SECONDS",
                   help="also stop the order search after this many seconds")
    p.add_argument("--order-file", help="PACE .td decomposition to take the order from")
    p.add_argument("--solver", help="external PACE solver command (.gr on stdin, .td on stdout)")
    p.add_argument("--timings", action="store_true", help="include wall-clock timings")


def _slice_flags(p, score_default="tree-trim"):
    p.add_argument("--score", default=score_default)
    p.add_argument("--num-removed", "-m", type=int, default=0)
    p.add_argument("--recalc-every", type=int, default=None)
    p.add_argument("--tie-break", choices=("lexicographic", "random"), default="lexicographic")
    p.add_argument("--upfront", action="store_true",
                   help="score degree/betweenness/tw-delta once instead of after every removal")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="twslice", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("plan", help="find an elimination order and its treewidth")
    p.add_argument("path")
    _order_flags(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("slice", help="greedy treewidth deletion")
    p.add_argument("path")
    _order_flags(p)
    _slice_flags(p)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("simulate", help="compute an amplitude with a sliced contraction")
    p.add_argument("path")
    p.add_argument("--initial")
    p.add_argument("--final")
    _order_flags(p)
    _slice_flags(p)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="treewidth/time/FLOP/memory curves for several scores")
    p.add_argument("path")
    _order_flags(p)
    p.add_argument("--scores", default="all")
    p.add_argument("--m-max", type=int, default=10)
    p.add_argument("--recalc-every", type=int, default=None)
    p.add_argument("--tw-recalc", type=int, nargs="*", metavar="K",
                   help="extra tw-delta curves recalculating the order every K removals")
    p.add_argument("--tie-break", choices=("lexicographic", "random"), default="lexicographic")
    p.add_argument("--upfront", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("export", help="write the expression graph as PACE .gr")
    p.add_argument("path")
    p.add_argument("--out", required=True)
    p.add_argument("--td", help="also write the heuristic decomposition as PACE .td")
    _order_flags(p)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"twslice: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001
        print(f"twslice: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
