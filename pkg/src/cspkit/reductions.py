"""Instance transformations between CNF, CSP and graph problems.

Every reduction returns a :class:`ReductionOutput`. Branching reductions put
a lazy iterator of :class:`Leaf` objects in ``result``; their ``stats`` are
filled in as the iterator is consumed.
"""
from __future__ import annotations

import itertools
import math
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Optional

import mpmath

from .core import (BudgetExceeded, CnfFormula, Constraint, CspInstance, assign_and_simplify,
                   disjoint_union, parameters)
from .solvers import BranchStats

MAX_CLAUSE_WIDTH = 20
MAX_JOIN = 10 ** 6


def _identity(w):
    return tuple(w)


@dataclass
class ReductionOutput:
    result: object
    back_map: Optional[Callable] = _identity
    stats: BranchStats = field(default_factory=BranchStats)


@dataclass
class Leaf:
    instance: object
    back_map: Callable
    rejected: bool = False


# -- CNF <-> CSP ------------------------------------------------------------

def clause_relation(clause) -> list:
    """All 0/1 tuples over the clause's variables (clause order) satisfying it."""
    return [t for t in itertools.product((0, 1), repeat=len(clause))
            if any((x == 1) == (lit > 0) for x, lit in zip(t, clause))]


def cnf_to_csp(formula: CnfFormula, max_width: int = MAX_CLAUSE_WIDTH) -> ReductionOutput:
    """One Boolean constraint per clause, allowing its satisfying assignments."""
    if formula.width > max_width:
        raise BudgetExceeded(f"clause width {formula.width} exceeds limit {max_width}")
    n = formula.num_vars
    constraints = [Constraint(tuple(abs(l) - 1 for l in clause), clause_relation(clause))
                   for clause in formula.clauses]
    if formula.unsat:
        if n == 0:
            n = 1
        constraints.append(Constraint((0,), ()))
    names = tuple(str(i + 1) for i in range(n))
    inst = CspInstance(n, 2, tuple(constraints), names)
    keep = formula.num_vars
    return ReductionOutput(inst, lambda w: tuple(w[:keep]))


def csp_to_cnf(instance: CspInstance, r: Optional[int] = None) -> ReductionOutput:
    """One clause per forbidden assignment of each constraint."""
    if instance.domain_size != 2:
        raise ValueError("csp_to_cnf needs a Boolean domain")
    arity = parameters(instance).max_arity
    if r is not None and arity > r:
        raise ValueError(f"constraint arity {arity} exceeds r={r}")
    clauses = []
    for c in instance.constraints:
        allowed = set(c.relation)
        for t in itertools.product((0, 1), repeat=c.arity):
            if t not in allowed:
                clauses.append(tuple((v + 1) if x == 0 else -(v + 1) for v, x in zip(c.scope, t)))
    return ReductionOutput(CnfFormula(instance.num_vars, tuple(clauses)))


# -- clause-width branching -------------------------------------------------

def _set_false(clauses, lits):
    """Make every literal in ``lits`` false; None if some clause empties."""
    falsified = set(lits)
    satisfied = {-l for l in lits}
    out = []
    for clause in clauses:
        if any(l in satisfied for l in clause):
            continue
        rest = tuple(l for l in clause if l not in falsified)
        if not rest:
            return None
        out.append(rest)
    return tuple(out)


def schuler_branch(formula: CnfFormula, k: int) -> ReductionOutput:
    """Branch on wide clauses until every clause has width at most ``k``.

    On the first clause wider than ``k`` with leading literals l1..lk, the
    left child replaces the clause by (l1 v ... v lk) and the right child
    sets l1..lk to false. Leaves are emitted depth-first, left first. A leaf
    whose right-branch simplification empties a clause is emitted as
    ``rejected`` with an unsatisfiable formula.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    n = formula.num_vars
    stats = BranchStats()

    def make_back_map(forced):
        forced = dict(forced)

        def back(w):
            out = list(w)
            for v, x in forced.items():
                out[v] = x
            return tuple(out)
        return back

    def leaves() -> Iterator[Leaf]:
        t0 = time.perf_counter()
        stack = [(formula.clauses, formula.unsat, (), 0)]
        while stack:
            clauses, unsat, forced, depth = stack.pop()
            stats.nodes += 1
            stats.max_depth = max(stats.max_depth, depth)
            wide = next((i for i, c in enumerate(clauses) if len(c) > k), None)
            if unsat or wide is None:
                stats.leaves += 1
                stats.elapsed = time.perf_counter() - t0
                yield Leaf(CnfFormula(n, clauses, unsat), make_back_map(forced), unsat)
                continue
            head = clauses[wide][:k]
            right = _set_false(clauses, head)
            right_forced = forced + tuple((abs(l) - 1, 0 if l > 0 else 1) for l in head)
            if right is None:
                stack.append(((), True, right_forced, depth + 1))
            else:
                stack.append((right, False, right_forced, depth + 1))
            left = clauses[:wide] + (head,) + clauses[wide + 1:]
            stack.append((left, False, forced, depth + 1))
        stats.elapsed = time.perf_counter() - t0

    return ReductionOutput(leaves(), None, stats)


def schuler_k(n: int, epsilon, c_prime) -> int:
    """Width target floor(eps*n / (2*(1+c'))); warns when it degenerates to 0."""
    eps = Fraction(str(epsilon)) if isinstance(epsilon, float) else Fraction(epsilon)
    cp = Fraction(str(c_prime)) if isinstance(c_prime, float) else Fraction(c_prime)
    if eps <= 0 or cp < 0:
        raise ValueError("need epsilon > 0 and c' >= 0")
    k = math.floor(eps * n / (2 * (1 + cp)))
    if k == 0:
        warnings.warn("schuler_k: k = 0, the width reduction degenerates", RuntimeWarning)
    return k


# -- tuple-threshold branching ----------------------------------------------

def _root_mp(d: int, dps: int = 40):
    with mpmath.workdps(dps):
        lo, hi = mpmath.mpf(1), mpmath.mpf(2)
        for _ in range(dps * 4):
            mid = (lo + hi) / 2
            if mid ** d - mid ** (d - 1) - 1 > 0:
                hi = mid
            else:
                lo = mid
        return +hi


def branching_root(d: int, tol: float = 1e-12) -> float:
    """Root of x^d - x^(d-1) - 1 in (1, 2], by bisection."""
    if d < 2:
        raise ValueError("d must be at least 2")
    lo, hi = 1.0, 2.0
    while True:
        mid = (lo + hi) / 2
        p = mid ** d - mid ** (d - 1) - 1
        if abs(p) <= tol or hi - lo <= 4e-16:
            return mid
        if p > 0:
            hi = mid
        else:
            lo = mid


def smallest_d_for_budget(c, epsilon, d_max: int = 64) -> int:
    """Smallest d >= 2 whose branching root is at most 2**(epsilon/c)."""
    c, epsilon = Fraction(str(c)), Fraction(str(epsilon))
    if c <= 0 or epsilon <= 0:
        raise ValueError("need c > 0 and epsilon > 0")
    with mpmath.workdps(40):
        target = mpmath.power(2, mpmath.mpf(epsilon.numerator) / epsilon.denominator
                              * c.denominator / c.numerator)
        for d in range(2, d_max + 1):
            if _root_mp(d) <= target:
                return d
    raise BudgetExceeded(f"no d <= {d_max} reaches 2^(eps/c)")


def _equal_column_pair(c: Constraint):
    for i in range(c.arity):
        for j in range(i + 1, c.arity):
            if all(t[i] == t[j] for t in c.relation):
                return c.scope[i], c.scope[j]
    return None


def _merge_variable(constraints, x, y):
    """Identify y with x; returns (constraints, emptied)."""
    out = []
    emptied = False
    for c in constraints:
        if y not in c.scope:
            out.append(c)
            continue
        iy = c.scope.index(y)
        if x in c.scope:
            ix = c.scope.index(x)
            rel = [t[:iy] + t[iy + 1:] for t in c.relation if t[ix] == t[iy]]
            scope = c.scope[:iy] + c.scope[iy + 1:]
        else:
            rel = c.relation
            scope = c.scope[:iy] + (x,) + c.scope[iy + 1:]
        nc = Constraint(scope, rel)
        emptied = emptied or not nc.relation
        out.append(nc)
    return tuple(out), emptied


def _collapse(instance: CspInstance):
    """Returns ``(instance, merges, rejected)`` with merges as (y, x) pairs."""
    constraints = instance.constraints
    merges = []
    if any(not c.relation for c in constraints):
        return instance, merges, True
    while True:
        pair = next((p for p in map(_equal_column_pair, constraints) if p), None)
        if pair is None:
            break
        x, y = pair
        constraints, emptied = _merge_variable(constraints, x, y)
        merges.append((y, x))
        if emptied:
            return (CspInstance(instance.num_vars, instance.domain_size, constraints, instance.names),
                    merges, True)
    return (CspInstance(instance.num_vars, instance.domain_size, constraints, instance.names),
            merges, False)


def _apply_merges_back(merges):
    def back(w):
        out = list(w)
        for y, x in reversed(merges):
            out[y] = out[x]
        return tuple(out)
    return back


def collapse_duplicate_variables(instance: CspInstance) -> ReductionOutput:
    """Merge variables that agree in every tuple of some constraint.

    Repeats until no constraint has two identical columns. If a relation
    empties, the (unsatisfiable) instance at that point is returned and
    ``stats.extra['rejected']`` is set.
    """
    if instance.domain_size != 2:
        raise ValueError("collapse_duplicate_variables needs a Boolean domain")
    out, merges, rejected = _collapse(instance)
    stats = BranchStats(extra={"rejected": rejected, "merges": len(merges)})
    return ReductionOutput(out, _apply_merges_back(merges), stats)


def _rejected_csp(instance: CspInstance) -> CspInstance:
    return CspInstance(max(instance.num_vars, 1), instance.domain_size,
                       (Constraint((0,), ()),), None)


def bounded_tuple_branch(instance: CspInstance, d: int) -> ReductionOutput:
    """Branch on tuples until every constraint has at most ``d`` tuples.

    The first constraint with more than ``d`` tuples is split on its
    lexicographically first tuple t: either t holds (its values are assigned
    and the constraint disappears) or t is deleted. Duplicate-column
    collapsing runs at the root and after every branch, which keeps leaf
    arity at most 2**d.
    """
    if instance.domain_size != 2:
        raise ValueError("bounded_tuple_branch needs a Boolean domain")
    if d < 1:
        raise ValueError("d must be positive")
    stats = BranchStats()

    def make_back(ops):
        def back(w):
            out = list(w)
            for op in reversed(ops):
                if op[0] == "assign":
                    for v, x in op[1]:
                        out[v] = x
                else:
                    _, y, x = op
                    out[y] = out[x]
            return tuple(out)
        return back

    def settle(inst, ops):
        inst, merges, rejected = _collapse(inst)
        return inst, ops + tuple(("merge", y, x) for y, x in merges), rejected

    def leaves() -> Iterator[Leaf]:
        t0 = time.perf_counter()
        root, ops, rejected = settle(instance, ())
        stack = [(root, ops, rejected, 0)]
        while stack:
            inst, ops, rejected, depth = stack.pop()
            stats.nodes += 1
            stats.max_depth = max(stats.max_depth, depth)
            if rejected:
                stats.leaves += 1
                stats.elapsed = time.perf_counter() - t0
                yield Leaf(_rejected_csp(inst), make_back(ops), True)
                continue
            ci = next((i for i, c in enumerate(inst.constraints) if len(c.relation) > d), None)
            if ci is None:
                stats.leaves += 1
                stats.elapsed = time.perf_counter() - t0
                yield Leaf(inst, make_back(ops), False)
                continue
            c = inst.constraints[ci]
            t = c.relation[0]
            # t not satisfied: drop it from the constraint
            dropped = inst.constraints[:ci] + (Constraint(c.scope, c.relation[1:]),) \
                + inst.constraints[ci + 1:]
            no_inst, no_ops, no_rej = settle(
                CspInstance(inst.num_vars, inst.domain_size, dropped, inst.names), ops)
            # t satisfied: fix the scope to t
            fixed = tuple(zip(c.scope, t))
            res = assign_and_simplify(inst, dict(fixed))
            yes_ops = ops + (("assign", fixed),)
            if res is None:
                yes = (inst, yes_ops, True, depth + 1)
            else:
                yes_inst, yes_ops, yes_rej = settle(res, yes_ops)
                yes = (yes_inst, yes_ops, yes_rej, depth + 1)
            stack.append((no_inst, no_ops, no_rej, depth + 1))
            stack.append(yes)
        stats.elapsed = time.perf_counter() - t0

    return ReductionOutput(leaves(), None, stats)


# -- merging, padding, gadgets ----------------------------------------------

def join_constraints(members, max_join: int = MAX_JOIN) -> Constraint:
    """Natural join of the members' relations, folded left to right."""
    product = 1
    for c in members:
        product *= len(c.relation)
    if product > max_join:
        raise BudgetExceeded(f"join of {len(members)} constraints has {product} combinations")
    scope = list(members[0].scope)
    rel = list(members[0].relation)
    for c in members[1:]:
        pos = {v: i for i, v in enumerate(scope)}
        shared = [(pos[v], j) for j, v in enumerate(c.scope) if v in pos]
        new = [j for j, v in enumerate(c.scope) if v not in pos]
        rel = [t + tuple(u[j] for j in new) for t in rel for u in c.relation
               if all(t[i] == u[j] for i, j in shared)]
        scope += [c.scope[j] for j in new]
    return Constraint(tuple(scope), rel)


def merge_constraints(instance: CspInstance, groups: int, max_join: int = MAX_JOIN) -> ReductionOutput:
    """Replace the constraints by ``groups`` joins of consecutive blocks."""
    m = len(instance.constraints)
    if not 1 <= groups <= m:
        raise ValueError(f"groups must be in 1..{m}")
    q, extra = divmod(m, groups)
    merged = []
    start = 0
    for g in range(groups):
        size = q + (1 if g < extra else 0)
        merged.append(join_constraints(instance.constraints[start:start + size], max_join))
        start += size
    return ReductionOutput(CspInstance(instance.num_vars, instance.domain_size, tuple(merged),
                                       instance.names))


def pad_instance(instance: CspInstance, copies: int) -> ReductionOutput:
    """Disjoint union of ``copies`` copies; a witness maps back via the first copy."""
    if copies < 1:
        raise ValueError("copies must be at least 1")
    if copies == 1:
        return ReductionOutput(instance)
    union, split = disjoint_union([instance] * copies)
    return ReductionOutput(union, lambda w: split(w)[0])


def degree_reduce(instance: CspInstance) -> ReductionOutput:
    """Bring every variable to degree at most 2 with equality gadgets.

    A degree-3 variable x keeps its first occurrence; its second and third
    occurrences are renamed to fresh copies x', x'', and a ternary constraint
    forcing x = x' = x'' is added.
    """
    occ = instance.occurrences()
    if any(len(o) > 3 for o in occ):
        raise ValueError("degree_reduce handles max degree 3 only")
    n = instance.num_vars
    scopes = [list(c.scope) for c in instance.constraints]
    gadgets = []
    names = list(instance.names) if instance.names is not None else None
    equal = tuple((x, x, x) for x in range(instance.domain_size))
    for x in range(instance.num_vars):
        if len(occ[x]) != 3:
            continue
        x1, x2 = n, n + 1
        n += 2
        _, b, c = occ[x]
        scopes[b][scopes[b].index(x)] = x1
        scopes[c][scopes[c].index(x)] = x2
        gadgets.append(Constraint((x, x1, x2), equal))
        if names is not None:
            names += [names[x] + "'", names[x] + "''"]
    constraints = tuple(Constraint(tuple(s), c.relation)
                        for s, c in zip(scopes, instance.constraints)) + tuple(gadgets)
    keep = instance.num_vars
    out = CspInstance(n, instance.domain_size, constraints, tuple(names) if names else None)
    return ReductionOutput(out, lambda w: tuple(w[:keep]))


def clique_to_2csp(graph, k: int) -> ReductionOutput:
    """k variables over the vertices; pair (i<j) must be an edge u<v.

    The back-map returns the selected vertex set.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    big_n = graph.num_vertices
    edges = sorted(graph.edges)
    constraints = [Constraint((i, j), edges) for i in range(k) for j in range(i + 1, k)]
    if big_n == 0:
        # no vertex to pick: keep the domain non-empty but forbid everything
        constraints.append(Constraint((0,), ()))
    inst = CspInstance(k, max(big_n, 1), tuple(constraints))
    return ReductionOutput(inst, lambda w: tuple(sorted(set(w))))


def coloring3_to_2csp(graph) -> ReductionOutput:
    """One variable per vertex over colours {0,1,2}; edges forbid equal colours."""
    unequal = [(a, b) for a in range(3) for b in range(3) if a != b]
    constraints = tuple(Constraint((u, v), unequal) for u, v in sorted(graph.edges))
    inst = CspInstance(graph.num_vertices, 3, constraints)
    return ReductionOutput(inst)
