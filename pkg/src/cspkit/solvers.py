"""Decision procedures for CSP and CNF instances.

``brute_force_csp`` and ``brute_force_cnf`` are the reference oracles. The
other solvers are checked against them in the test suite.
"""
from __future__ import annotations

import itertools
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import BudgetExceeded, CnfFormula, CspInstance, check

DEFAULT_BUDGET = 10 ** 8
_CHUNK = 1 << 16


@dataclass
class BranchStats:
    nodes: int = 0
    leaves: int = 0
    max_depth: int = 0
    elapsed: float = 0.0
    bound: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def as_record(self) -> dict:
        rec = {"nodes": self.nodes, "leaves": self.leaves, "max_depth": self.max_depth,
               "elapsed_ms": round(self.elapsed * 1000, 3)}
        if self.bound is not None:
            rec["bound"] = self.bound
        return rec


@dataclass
class SolveResult:
    satisfiable: bool
    witness: Optional[tuple]
    stats: BranchStats


def _mixed_radix(start: int, stop: int, n: int, d: int) -> np.ndarray:
    """Rows ``start..stop-1`` of the lexicographic enumeration of ``[d]^n``."""
    idx = np.arange(start, stop, dtype=np.int64)
    cols = np.empty((stop - start, n), dtype=np.int64)
    for i in range(n - 1, -1, -1):
        cols[:, i] = idx % d
        idx //= d
    return cols


def _constraint_mask(values: np.ndarray, scope, relation, d: int) -> np.ndarray:
    a = len(scope)
    if d ** a <= 1 << 22:
        table = np.zeros(d ** a, dtype=bool)
        for t in relation:
            code = 0
            for x in t:
                code = code * d + x
            table[code] = True
        code = np.zeros(values.shape[0], dtype=np.int64)
        for v in scope:
            code = code * d + values[:, v]
        return table[code]
    if d ** a < 1 << 62:
        allowed = np.array([sum(x * d ** (a - 1 - j) for j, x in enumerate(t)) for t in relation],
                           dtype=np.int64)
        code = np.zeros(values.shape[0], dtype=np.int64)
        for v in scope:
            code = code * d + values[:, v]
        return np.isin(code, allowed)
    rel = set(relation)
    sub = values[:, list(scope)]
    return np.array([tuple(int(x) for x in row) in rel for row in sub], dtype=bool)


def brute_force_csp(instance: CspInstance, budget: int = DEFAULT_BUDGET) -> SolveResult:
    """Enumerate all ``d**n`` assignments in lexicographic order."""
    t0 = time.perf_counter()
    n, d = instance.num_vars, instance.domain_size
    total = d ** n
    if total > budget:
        raise BudgetExceeded(f"{d}^{n} assignments exceed budget {budget}")
    stats = BranchStats(max_depth=n)
    witness = None
    if not any(len(c.relation) == 0 for c in instance.constraints):
        for start in range(0, total, _CHUNK):
            stop = min(total, start + _CHUNK)
            values = _mixed_radix(start, stop, n, d)
            ok = np.ones(stop - start, dtype=bool)
            for c in instance.constraints:
                ok &= _constraint_mask(values, c.scope, c.relation, d)
            hits = np.flatnonzero(ok)
            if hits.size:
                stats.nodes += int(hits[0]) + 1
                witness = tuple(int(x) for x in values[hits[0]])
                break
            stats.nodes += stop - start
    stats.leaves = stats.nodes
    stats.elapsed = time.perf_counter() - t0
    return SolveResult(witness is not None, witness, stats)


def brute_force_cnf(formula: CnfFormula, budget: int = DEFAULT_BUDGET) -> SolveResult:
    """Enumerate all ``2**n`` truth assignments; variable 1 is most significant."""
    t0 = time.perf_counter()
    n = formula.num_vars
    total = 1 << n
    if total > budget:
        raise BudgetExceeded(f"2^{n} assignments exceed budget {budget}")
    stats = BranchStats(max_depth=n)
    witness = None
    if not formula.unsat:
        for start in range(0, total, _CHUNK):
            stop = min(total, start + _CHUNK)
            idx = np.arange(start, stop, dtype=np.int64)
            ok = np.ones(stop - start, dtype=bool)
            for clause in formula.clauses:
                sat = np.zeros(stop - start, dtype=bool)
                for lit in clause:
                    bit = (idx >> (n - abs(lit))) & 1
                    sat |= (bit == 1) if lit > 0 else (bit == 0)
                ok &= sat
            hits = np.flatnonzero(ok)
            if hits.size:
                stats.nodes += int(hits[0]) + 1
                a = start + int(hits[0])
                witness = tuple((a >> (n - 1 - i)) & 1 for i in range(n))
                break
            stats.nodes += stop - start
    stats.leaves = stats.nodes
    stats.elapsed = time.perf_counter() - t0
    return SolveResult(witness is not None, witness, stats)


def tuple_branching_solve(instance: CspInstance, propagate: bool = False) -> SolveResult:
    """Branch on every tuple: satisfied by the sought assignment, or not.

    A branch dies once some constraint has two satisfied tuples, or all of its
    tuples marked unsatisfied. A complete branch accepts iff the variable
    values stipulated by its satisfied tuples agree. With ``propagate``, a
    constraint whose last unmarked tuple is reached with nothing satisfied
    yet has that tuple forced, skipping the doomed branch.
    """
    t0 = time.perf_counter()
    cons = instance.constraints
    order = [(ci, t) for ci, c in enumerate(cons) for t in c.relation]
    remaining = [len(c.relation) for c in cons]
    chosen = [None] * len(cons)
    # stipulated value per variable and how many satisfied tuples fix it
    value = [None] * instance.num_vars
    count = [0] * instance.num_vars
    conflicts = 0
    stats = BranchStats()
    found = None

    def mark(ci, t):
        nonlocal conflicts
        chosen[ci] = t
        for v, x in zip(cons[ci].scope, t):
            if count[v] == 0:
                value[v] = x
            elif value[v] != x:
                conflicts += 1
            count[v] += 1

    def unmark(ci, t):
        nonlocal conflicts
        chosen[ci] = None
        # values may only be rolled back in reverse order of marking
        for v, x in zip(cons[ci].scope, t):
            count[v] -= 1
            if count[v] > 0 and value[v] != x:
                conflicts -= 1
            if count[v] == 0:
                value[v] = None

    def visit(pos, depth):
        nonlocal found
        stats.nodes += 1
        stats.max_depth = max(stats.max_depth, depth)
        if pos == len(order):
            stats.leaves += 1
            if conflicts == 0:
                found = tuple(0 if x is None else x for x in value)
                return True
            return False
        ci, t = order[pos]
        last = remaining[ci] == 1
        # satisfied branch
        forced = propagate and last and chosen[ci] is None
        if chosen[ci] is not None:
            stats.nodes += 1
            stats.leaves += 1
        else:
            mark(ci, t)
            remaining[ci] -= 1
            hit = visit(pos + 1, depth + 1)
            remaining[ci] += 1
            unmark(ci, t)
            if hit:
                return True
        if forced:
            return False
        # unsatisfied branch
        if last and chosen[ci] is None:
            stats.nodes += 1
            stats.leaves += 1
            return False
        remaining[ci] -= 1
        hit = visit(pos + 1, depth + 1)
        remaining[ci] += 1
        return hit

    if any(len(c.relation) == 0 for c in cons):
        stats.nodes = stats.leaves = 1
    else:
        visit(0, 0)
    stats.elapsed = time.perf_counter() - t0
    return SolveResult(found is not None, found, stats)


def backtracking_solve(instance: CspInstance) -> SolveResult:
    """Chronological backtracking in variable order with tuple filtering."""
    t0 = time.perf_counter()
    n, d = instance.num_vars, instance.domain_size
    cons = instance.constraints
    occ = instance.occurrences()
    live = [list(c.relation) for c in cons]
    pos = [{v: i for i, v in enumerate(c.scope)} for c in cons]
    values = [0] * n
    stats = BranchStats()

    def visit(var, depth):
        stats.nodes += 1
        stats.max_depth = max(stats.max_depth, depth)
        if var == n:
            stats.leaves += 1
            return True
        if not occ[var]:
            values[var] = 0
            return visit(var + 1, depth)
        for x in range(d):
            saved = []
            dead = False
            for ci in occ[var]:
                i = pos[ci][var]
                kept = [t for t in live[ci] if t[i] == x]
                saved.append((ci, live[ci]))
                live[ci] = kept
                if not kept:
                    dead = True
                    break
            if not dead:
                values[var] = x
                if visit(var + 1, depth + 1):
                    return True
            else:
                stats.nodes += 1
                stats.leaves += 1
            for ci, old in reversed(saved):
                live[ci] = old
        return False

    if any(not rel for rel in live):
        stats.nodes = stats.leaves = 1
        sat = False
    else:
        sat = visit(0, 0)
    stats.elapsed = time.perf_counter() - t0
    return SolveResult(sat, tuple(values) if sat else None, stats)


def _root_tree(num_bags, tree_edges, root=0):
    adj = [[] for _ in range(num_bags)]
    for a, b in tree_edges:
        adj[a].append(b)
        adj[b].append(a)
    parent = [-1] * num_bags
    depth = [0] * num_bags
    order = [root]
    seen = {root}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for w in sorted(adj[u]):
            if w not in seen:
                seen.add(w)
                parent[w] = u
                depth[w] = depth[u] + 1
                order.append(w)
                queue.append(w)
    return parent, depth, order


def freuder_dp_solve(instance: CspInstance, decomposition) -> SolveResult:
    """Dynamic programming over a tree decomposition of the primal graph.

    Each bag keeps the assignments to its variables that are consistent
    with the constraints anchored in its subtree. A top-down pass picks a
    witness.
    """
    from .structure import primal_graph, validate_decomposition

    t0 = time.perf_counter()
    problem = validate_decomposition(primal_graph(instance), decomposition)
    if problem is not None:
        raise ValueError(f"invalid tree decomposition: {problem}")
    d = instance.domain_size
    bags = [tuple(sorted(b)) for b in decomposition.bags]
    stats = BranchStats()
    if not bags:
        # only possible for an instance without variables, hence without constraints
        stats.elapsed = time.perf_counter() - t0
        return SolveResult(True, (), stats)
    parent, depth, order = _root_tree(len(bags), decomposition.tree_edges)
    stats.max_depth = max(depth)

    anchored = [[] for _ in bags]
    bag_sets = [set(b) for b in bags]
    for ci, c in enumerate(instance.constraints):
        fits = [i for i in range(len(bags)) if bag_sets[i].issuperset(c.scope)]
        assert fits, f"constraint {ci} scope {c.scope} lies in no bag"
        anchored[min(fits, key=lambda i: (depth[i], i))].append(c)

    children = [[] for _ in bags]
    for b in order[1:]:
        children[parent[b]].append(b)

    tables = [None] * len(bags)
    # projection of each child's table onto the variables shared with its parent
    shared = [None] * len(bags)
    child_proj = [None] * len(bags)
    for b in reversed(order):
        index = {v: i for i, v in enumerate(bags[b])}
        checks = [([index[v] for v in c.scope], c._relation_set) for c in anchored[b]]
        joins = []
        for ch in children[b]:
            joins.append(([index[v] for v in shared[ch]], child_proj[ch]))
        rows = []
        for row in itertools.product(range(d), repeat=len(bags[b])):
            stats.nodes += 1
            if all(tuple(row[i] for i in idx) in rel for idx, rel in checks) and \
                    all(tuple(row[i] for i in idx) in proj for idx, proj in joins):
                rows.append(row)
        tables[b] = rows
        if parent[b] >= 0:
            shared[b] = [v for v in bags[b] if v in bag_sets[parent[b]]]
            pos = [index[v] for v in shared[b]]
            child_proj[b] = {tuple(r[i] for i in pos) for r in rows}
        if not rows:
            break
    stats.leaves = len(bags)
    stats.extra["table_sizes"] = [len(t) if t is not None else 0 for t in tables]

    root = order[0]
    if not tables[root]:
        stats.elapsed = time.perf_counter() - t0
        return SolveResult(False, None, stats)

    values = [None] * instance.num_vars
    for v, x in zip(bags[root], tables[root][0]):
        values[v] = x
    for b in order[1:]:
        fixed = [(i, values[v]) for i, v in enumerate(bags[b]) if v in bag_sets[parent[b]]]
        row = next(r for r in tables[b] if all(r[i] == x for i, x in fixed))
        for v, x in zip(bags[b], row):
            values[v] = x
    witness = tuple(0 if x is None else x for x in values)
    assert check(instance, witness)
    stats.elapsed = time.perf_counter() - t0
    return SolveResult(True, witness, stats)
