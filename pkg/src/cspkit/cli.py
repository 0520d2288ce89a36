"""Command-line entry point: ``cspkit {solve,reduce,params,bench} ...``.

Exit codes: 0 satisfiable/ok, 20 unsatisfiable, 1 usage or input error,
2 resource budget exceeded. Each command prints one ``key=value`` line.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import bench, reductions
from .core import BudgetExceeded, CnfFormula, CspInstance, parameters
from .io_formats import FormatError, load, write_csp, write_dimacs
from .solvers import (DEFAULT_BUDGET, backtracking_solve, brute_force_cnf, brute_force_csp,
                      freuder_dp_solve, tuple_branching_solve)
from .structure import best_decomposition, parse_graph, primal_graph, tw_params

EXIT_OK, EXIT_USAGE, EXIT_BUDGET, EXIT_UNSAT = 0, 1, 2, 20


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _record(**fields) -> str:
    parts = []
    for key, value in fields.items():
        if isinstance(value, bool):
            value = int(value)
        elif isinstance(value, float):
            value = f"{value:.3f}"
        parts.append(f"{key}={value}")
    return " ".join(parts)


def _load_csp(path) -> CspInstance:
    doc = load(path)
    if isinstance(doc, CnfFormula):
        return reductions.cnf_to_csp(doc).result
    return doc


def _expect(doc, kind, path):
    if not isinstance(doc, kind):
        want = "CSP JSON" if kind is CspInstance else "DIMACS CNF"
        raise UsageError(f"{path}: expected a {want} file")
    return doc


def cmd_solve(args, out) -> int:
    doc = load(args.file)
    budget = args.budget
    if isinstance(doc, CnfFormula) and args.solver == "brute":
        res = brute_force_cnf(doc, budget)
    else:
        inst = reductions.cnf_to_csp(doc).result if isinstance(doc, CnfFormula) else doc
        if args.solver == "brute":
            res = brute_force_csp(inst, budget)
        elif args.solver == "tuples":
            res = tuple_branching_solve(inst)
        elif args.solver == "backtrack":
            res = backtracking_solve(inst)
        else:
            _, dec, _ = best_decomposition(primal_graph(inst))
            res = freuder_dp_solve(inst, dec)
    fields = dict(sat=res.satisfiable, nodes=res.stats.nodes, leaves=res.stats.leaves,
                  elapsed_ms=res.stats.elapsed * 1000)
    if res.witness is not None and args.witness:
        fields["witness"] = ",".join(map(str, res.witness))
    print(_record(**fields), file=out)
    return EXIT_OK if res.satisfiable else EXIT_UNSAT


def _write(text, path, out):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)


def _emit_leaves(result, emit_dir, suffix, writer):
    leaves = list(result.result) if emit_dir is None else None
    count = 0
    rejected = 0
    if emit_dir is not None:
        os.makedirs(emit_dir, exist_ok=True)
        for leaf in result.result:
            with open(os.path.join(emit_dir, f"leaf_{count:06d}{suffix}"), "w",
                      encoding="utf-8") as fh:
                fh.write(writer(leaf.instance))
            count += 1
            rejected += leaf.rejected
    else:
        count = len(leaves)
        rejected = sum(leaf.rejected for leaf in leaves)
    stats = result.stats.as_record()
    stats.update(rejected=rejected, count=count)
    if emit_dir is not None:
        with open(os.path.join(emit_dir, "stats.json"), "w", encoding="utf-8") as fh:
            json.dump(stats, fh, sort_keys=True, indent=2)
            fh.write("\n")
    return stats


def cmd_reduce(args, out) -> int:
    kind = args.kind
    info = {}
    if kind in ("clique2csp", "color2csp"):
        with open(args.input, encoding="utf-8") as fh:
            try:
                graph = parse_graph(fh.read())
            except ValueError as exc:
                raise FormatError(str(exc)) from None
        if kind == "clique2csp":
            if args.k is None:
                raise UsageError("clique2csp needs --k")
            res = reductions.clique_to_2csp(graph, args.k)
        else:
            res = reductions.coloring3_to_2csp(graph)
        _write(write_csp(res.result), args.output, out)
        p = parameters(res.result)
        info = dict(vars=p.vars, dom=p.dom, cons=p.cons, tuples=p.tuples)
        if args.output:
            print(_record(**info), file=out)
        return EXIT_OK

    doc = load(args.input)
    if kind == "cnf2csp":
        res = reductions.cnf_to_csp(_expect(doc, CnfFormula, args.input))
        _write(write_csp(res.result), args.output, out)
        p = parameters(res.result)
        info = dict(vars=p.vars, cons=p.cons, tuples=p.tuples, size=p.size)
    elif kind == "csp2cnf":
        res = reductions.csp_to_cnf(_expect(doc, CspInstance, args.input), args.k)
        _write(write_dimacs(res.result), args.output, out)
        info = dict(vars=res.result.num_vars, clauses=res.result.num_clauses)
    elif kind == "schuler":
        if args.k is None:
            raise UsageError("schuler needs --k")
        res = reductions.schuler_branch(_expect(doc, CnfFormula, args.input), args.k)
        info = _emit_leaves(res, args.emit_dir, ".cnf", write_dimacs)
    elif kind == "boundtuples":
        if args.d is None:
            raise UsageError("boundtuples needs --d")
        res = reductions.bounded_tuple_branch(_expect(doc, CspInstance, args.input), args.d)
        info = _emit_leaves(res, args.emit_dir, ".csp.json", write_csp)
    elif kind in ("merge", "degree", "pad"):
        inst = _expect(doc, CspInstance, args.input)
        if kind == "merge":
            if args.groups is None:
                raise UsageError("merge needs --groups")
            res = reductions.merge_constraints(inst, args.groups)
        elif kind == "degree":
            res = reductions.degree_reduce(inst)
        else:
            res = reductions.pad_instance(inst, args.copies or 1)
        _write(write_csp(res.result), args.output, out)
        p = parameters(res.result)
        info = dict(vars=p.vars, cons=p.cons, tuples=p.tuples, max_degree=p.max_degree)
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown reduction {kind}")
    if args.output or args.emit_dir or kind in ("schuler", "boundtuples"):
        print(_record(**info), file=out)
    return EXIT_OK


def cmd_params(args, out) -> int:
    inst = _load_csp(args.file)
    p = parameters(inst)
    tw = tw_params(inst)
    print(_record(vars=p.vars, dom=p.dom, cons=p.cons, tuples=p.tuples, size=p.size,
                  max_arity=p.max_arity, max_degree=p.max_degree, tw=tw.tw, tw_star=tw.tw_star,
                  tw_exact=tw.tw_exact, tw_star_exact=tw.tw_star_exact), file=out)
    return EXIT_OK


def cmd_bench(args, out) -> int:
    if args.procedure == "schuler":
        width = args.width or min(args.n, 2 * args.k + 1)
        config = bench.GeneratorConfig("random_kcnf", n=args.n, m=args.m, k=width, seed=args.seed)
        target = args.k
    elif args.procedure == "boundtuples":
        arity = args.arity or args.k
        tuples = args.tuples or min(2 ** arity, args.d + 2)
        config = bench.GeneratorConfig("random_csp", n=args.n, m=args.m, k=arity, domain_size=2,
                                       tuples_per_constraint=tuples, seed=args.seed)
        target = args.d
    else:
        arity = args.arity or args.k
        tuples = args.tuples or min(args.d ** arity, 3)
        config = bench.GeneratorConfig("random_csp", n=args.n, m=args.m, k=arity,
                                       domain_size=args.d, tuples_per_constraint=tuples,
                                       seed=args.seed)
        target = args.d
    report = bench.run_experiment(config, args.procedure, args.trials, target,
                                  timing=not args.no_timing, workers=args.workers)
    if args.report:
        base = args.report[:-4] if args.report.endswith(".csv") else args.report
        with open(base + ".csv", "w", encoding="utf-8") as fh:
            fh.write(report.to_csv())
        with open(base + ".jsonl", "w", encoding="utf-8") as fh:
            fh.write(report.to_jsonl())
    for r in report.records:
        print(_record(trial=r.trial, seed=r.seed, leaves=r.leaves, nodes=r.nodes, bound=r.bound,
                      ok=r.ok, elapsed_ms=r.elapsed_ms), file=out)
    errors = sum(1 for r in report.records if r.error)
    print(_record(procedure=args.procedure, trials=len(report.records),
                  violations=report.violations, budget_errors=errors,
                  oracle_checked=report.oracle_checked,
                  oracle_agreement=report.oracle_agreement), file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cspkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="decide satisfiability of a CSP JSON or DIMACS file")
    p.add_argument("--solver", choices=["brute", "tuples", "backtrack", "treewidth"],
                   default="brute")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--witness", action="store_true", help="also print the witness")
    p.add_argument("file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("reduce", help="apply a reduction")
    p.add_argument("kind", choices=["cnf2csp", "csp2cnf", "schuler", "boundtuples", "merge",
                                    "clique2csp", "color2csp", "degree", "pad"])
    p.add_argument("--k", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--groups", type=int)
    p.add_argument("--copies", type=int)
    p.add_argument("--emit-dir", dest="emit_dir")
    p.add_argument("input")
    p.add_argument("-o", dest="output")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("params", help="print instance parameters")
    p.add_argument("file")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("bench", help="measure search trees against analytic bounds")
    p.add_argument("procedure", choices=list(bench.PROCEDURES))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--width", type=int, help="clause width of generated formulas (schuler)")
    p.add_argument("--arity", type=int, help="constraint arity of generated instances")
    p.add_argument("--tuples", type=int, help="tuples per generated constraint")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-timing", action="store_true", help="record elapsed_ms as 0")
    p.add_argument("--report")
    p.set_defaults(func=cmd_bench)
    return parser


def cli_main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except UsageError as exc:
        print(f"cspkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, ValueError, OSError) as exc:
        print(f"cspkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceeded as exc:
        print(f"cspkit: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except RecursionError:
        print("cspkit: budget exceeded: search tree too deep", file=sys.stderr)
        return EXIT_BUDGET


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
