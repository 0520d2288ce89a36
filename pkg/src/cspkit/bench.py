"""Seeded instance generators and measured-vs-analytic search-tree experiments."""
from __future__ import annotations

import csv
import io
import json
import math
import random
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import mpmath

from .core import BudgetExceeded, CnfFormula, Constraint, CspInstance, parameters
from .reductions import _root_mp, bounded_tuple_branch, schuler_branch
from .solvers import brute_force_cnf, brute_force_csp, tuple_branching_solve
from .structure import SimpleGraph

ORACLE_MAX_VARS = 12


@dataclass
class GeneratorConfig:
    kind: str = "random_kcnf"
    n: int = 10
    m: int = 20
    k: int = 3
    domain_size: int = 2
    tuples_per_constraint: int = 2
    edge_probability: float = 0.5
    clique_size: int = 3
    seed: int = 0


def _sample_distinct(rng: random.Random, population: int, count: int) -> list:
    """First ``count`` entries of a Fisher-Yates shuffle of ``range(population)``.

    Only swapped positions are stored, so large populations are cheap.
    """
    if count > population:
        raise ValueError(f"cannot draw {count} distinct items from {population}")
    swapped = {}
    out = []
    for i in range(count):
        j = i + rng.randrange(population - i)
        vi, vj = swapped.get(i, i), swapped.get(j, j)
        swapped[j] = vi
        out.append(vj)
    return out


def gen_kcnf(n: int, m: int, k: int, seed: int) -> CnfFormula:
    """m clauses over k distinct variables each, with uniform signs."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    rng = random.Random(seed)
    clauses = []
    for _ in range(m):
        vs = _sample_distinct(rng, n, k)
        clauses.append(tuple((v + 1) if rng.randrange(2) else -(v + 1) for v in vs))
    return CnfFormula(n, tuple(clauses))


def _decode(code: int, d: int, arity: int) -> tuple:
    out = []
    for _ in range(arity):
        code, r = divmod(code, d)
        out.append(r)
    return tuple(reversed(out))


def gen_csp(n: int, m: int, arity: int, d: int, tuples_per_constraint: int, seed: int) -> CspInstance:
    """m constraints with random distinct scopes and random distinct tuples."""
    if not 1 <= arity <= n:
        raise ValueError("need 1 <= arity <= n")
    if tuples_per_constraint > d ** arity:
        raise ValueError("more tuples requested than the relation can hold")
    rng = random.Random(seed)
    constraints = []
    for _ in range(m):
        scope = tuple(_sample_distinct(rng, n, arity))
        codes = _sample_distinct(rng, d ** arity, tuples_per_constraint)
        constraints.append(Constraint(scope, [_decode(c, d, arity) for c in codes]))
    return CspInstance(n, d, tuple(constraints))


def gen_graph(n: int, p: float, seed: int) -> SimpleGraph:
    rng = random.Random(seed)
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    return SimpleGraph(n, frozenset(edges))


def gen_planted_clique(n: int, p: float, size: int, seed: int) -> tuple:
    """Random graph plus a clique on ``size`` random vertices; returns (graph, clique)."""
    rng = random.Random(seed)
    base = gen_graph(n, p, rng.randrange(2 ** 32))
    clique = sorted(_sample_distinct(rng, n, size))
    edges = set(base.edges) | {(a, b) for i, a in enumerate(clique) for b in clique[i + 1:]}
    return SimpleGraph(n, frozenset(edges)), tuple(clique)


def generate(config: GeneratorConfig):
    if config.kind == "random_kcnf":
        return gen_kcnf(config.n, config.m, config.k, config.seed)
    if config.kind == "random_csp":
        return gen_csp(config.n, config.m, config.k, config.domain_size,
                       config.tuples_per_constraint, config.seed)
    if config.kind == "random_graph":
        return gen_graph(config.n, config.edge_probability, config.seed)
    if config.kind == "planted_clique":
        return gen_planted_clique(config.n, config.edge_probability, config.clique_size,
                                  config.seed)[0]
    raise ValueError(f"unknown generator kind {config.kind!r}")


def schuler_leaf_bound(n: int, m: int, k: int) -> int:
    """sum_{l=0}^{ceil(n/k)} C(m+l, l), exactly."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return sum(math.comb(m + l, l) for l in range(-(-n // k) + 1))


def tuple_branch_bound(T: int, d: int) -> float:
    """x0(d)**T where x0 is the growth rate of the (1, d) branching vector."""
    if T < 0 or d < 2:
        raise ValueError("need T >= 0 and d >= 2")
    with mpmath.workdps(40):
        return float(_root_mp(d) ** T)


def tuple_branch_bound_ceil(T: int, d: int) -> int:
    with mpmath.workdps(40):
        return int(mpmath.ceil(_root_mp(d) ** T))


@dataclass
class TrialRecord:
    trial: int
    seed: int
    n: int
    m: int
    k: int
    d: int
    leaves: int
    nodes: int
    bound: int
    ok: bool
    elapsed_ms: float
    oracle: Optional[bool] = None
    error: Optional[str] = None
    extra: dict = field(default_factory=dict)


@dataclass
class BoundReport:
    procedure: str
    config: GeneratorConfig
    records: list

    @property
    def violations(self) -> int:
        return sum(1 for r in self.records if not r.ok and r.error is None)

    @property
    def oracle_checked(self) -> int:
        return sum(1 for r in self.records if r.oracle is not None)

    @property
    def oracle_agreement(self) -> float:
        checked = [r.oracle for r in self.records if r.oracle is not None]
        return sum(checked) / len(checked) if checked else 1.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["trial", "seed", "n", "m", "k", "d", "leaves", "nodes", "bound", "ok",
                         "elapsed_ms"])
        for r in self.records:
            writer.writerow([r.trial, r.seed, r.n, r.m, r.k, r.d, r.leaves, r.nodes, r.bound,
                             int(r.ok), f"{r.elapsed_ms:.3f}"])
        return buf.getvalue()

    def to_jsonl(self) -> str:
        return "".join(json.dumps(asdict(r), sort_keys=True) + "\n" for r in self.records)


def trial_seed(seed: int, trial: int) -> int:
    return random.Random(f"{seed}:{trial}").randrange(2 ** 31)


def _run_trial(procedure: str, config: GeneratorConfig, trial: int, target: int,
               timing: bool) -> TrialRecord:
    seed = trial_seed(config.seed, trial)
    small = config.n <= ORACLE_MAX_VARS
    oracle = None
    t0 = time.perf_counter()
    if procedure == "schuler":
        formula = gen_kcnf(config.n, config.m, config.k, seed)
        out = schuler_branch(formula, target)
        widths_ok = True
        any_sat = False
        for leaf in out.result:
            widths_ok &= leaf.instance.width <= target
            if small and not any_sat:
                any_sat = brute_force_cnf(leaf.instance).satisfiable
        bound = schuler_leaf_bound(config.n, config.m, target)
        ok = widths_ok and out.stats.leaves <= bound
        if small:
            oracle = brute_force_cnf(formula).satisfiable == any_sat
        k, d = target, 2
        extra = {"widths_ok": widths_ok}
    elif procedure == "boundtuples":
        inst = gen_csp(config.n, config.m, config.k, 2, config.tuples_per_constraint, seed)
        T = parameters(inst).tuples
        out = bounded_tuple_branch(inst, target)
        shape_ok = True
        any_sat = False
        for leaf in out.result:
            shape_ok &= all(len(c.relation) <= target for c in leaf.instance.constraints)
            shape_ok &= parameters(leaf.instance).max_arity <= 2 ** target
            if small and not any_sat:
                any_sat = brute_force_csp(leaf.instance).satisfiable
        bound = 2 * tuple_branch_bound_ceil(T, target)
        ok = shape_ok and out.stats.leaves <= bound
        if small:
            oracle = brute_force_csp(inst).satisfiable == any_sat
        k, d = config.k, target
        extra = {"tuples": T, "shape_ok": shape_ok}
    elif procedure == "tuplesolve":
        inst = gen_csp(config.n, config.m, config.k, config.domain_size,
                       config.tuples_per_constraint, seed)
        T = parameters(inst).tuples
        out = tuple_branching_solve(inst)
        bound = 2 ** (T + 1)
        ok = out.stats.nodes <= bound
        if small:
            oracle = brute_force_csp(inst).satisfiable == out.satisfiable
        k, d = config.k, config.domain_size
        extra = {"tuples": T, "sat": out.satisfiable}
    else:
        raise ValueError(f"unknown procedure {procedure!r}")
    elapsed = (time.perf_counter() - t0) * 1000 if timing else 0.0
    return TrialRecord(trial, seed, config.n, config.m, k, d,
                       out.stats.leaves, out.stats.nodes, bound, bool(ok), round(elapsed, 3),
                       oracle, None, extra)


def _run_trial_safe(args) -> TrialRecord:
    procedure, config, trial, target, timing = args
    try:
        return _run_trial(procedure, config, trial, target, timing)
    except BudgetExceeded as exc:
        seed = trial_seed(config.seed, trial)
        return TrialRecord(trial, seed, config.n, config.m, config.k, target,
                           0, 0, 0, False, 0.0, None, f"budget: {exc}")


PROCEDURES = ("schuler", "boundtuples", "tuplesolve")


def run_experiment(config: GeneratorConfig, procedure: str, trials: int, target: int = 3,
                   timing: bool = True, workers: int = 1) -> BoundReport:
    """Run ``trials`` independent trials of ``procedure``.

    ``schuler`` branches random ``config.k``-CNF down to width ``target``;
    ``boundtuples`` branches random Boolean instances down to ``target``
    tuples per constraint; ``tuplesolve`` solves random instances over
    ``config.domain_size`` values. Trial seeds derive from ``config.seed``.
    Oracle agreement is checked when ``config.n`` is at most 12.
    """
    if procedure not in PROCEDURES:
        raise ValueError(f"unknown procedure {procedure!r}")
    jobs = [(procedure, config, t, target, timing) for t in range(trials)]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_trial_safe, jobs))
    else:
        records = [_run_trial_safe(j) for j in jobs]
    records.sort(key=lambda r: r.trial)
    return BoundReport(procedure, config, records)
