"""Data model for CSP instances and CNF formulas, plus the basic instance
operations (validation, normalization, partial assignment, parameters).

Variables are dense integers ``0..n-1`` and domain values dense integers
``0..d-1``. A total assignment is a tuple of length ``n``; a partial one is
a mapping from variable to value.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

Assignment = tuple
PartialAssignment = Mapping[int, int]


class BudgetExceeded(RuntimeError):
    """Raised when an exact procedure would exceed its resource budget."""


@dataclass(frozen=True)
class Constraint:
    scope: tuple
    relation: tuple = ()

    def __post_init__(self):
        scope = tuple(int(v) for v in self.scope)
        relation = tuple(sorted(set(tuple(int(x) for x in t) for t in self.relation)))
        object.__setattr__(self, "scope", scope)
        object.__setattr__(self, "relation", relation)

    @property
    def arity(self) -> int:
        return len(self.scope)

    def allows(self, values: Sequence[int]) -> bool:
        return tuple(values) in self._relation_set

    @property
    def _relation_set(self) -> frozenset:
        # relation is immutable, so caching on the instance is safe
        try:
            return self.__dict__["_rset"]
        except KeyError:
            rset = frozenset(self.relation)
            object.__setattr__(self, "_rset", rset)
            return rset


@dataclass(frozen=True)
class CspInstance:
    num_vars: int
    domain_size: int
    constraints: tuple = ()
    names: Optional[tuple] = field(default=None, compare=False)

    def __post_init__(self):
        cons = tuple(c if isinstance(c, Constraint) else Constraint(*c)
                     for c in self.constraints)
        object.__setattr__(self, "constraints", cons)
        if self.names is not None:
            object.__setattr__(self, "names", tuple(self.names))

    def name(self, var: int) -> str:
        if self.names is not None:
            return self.names[var]
        return f"x{var}"

    def occurrences(self) -> list:
        """For each variable, the indices of the constraints containing it."""
        occ = [[] for _ in range(self.num_vars)]
        for i, c in enumerate(self.constraints):
            for v in c.scope:
                occ[v].append(i)
        return occ


@dataclass(frozen=True)
class CnfFormula:
    """A CNF formula over variables ``1..num_vars`` (DIMACS literals).

    Literals inside a clause keep their given order with duplicates
    dropped. Empty clauses are not stored; they set ``unsat`` instead.
    """

    num_vars: int
    clauses: tuple = ()
    unsat: bool = False

    def __post_init__(self):
        clauses = []
        unsat = bool(self.unsat)
        for clause in self.clauses:
            lits = tuple(dict.fromkeys(int(l) for l in clause))
            if any(l == 0 or abs(l) > self.num_vars for l in lits):
                raise ValueError(f"literal out of range in clause {lits}")
            if any(-l in lits for l in lits):
                raise ValueError(f"complementary literals in clause {lits}")
            if not lits:
                unsat = True
                continue
            clauses.append(lits)
        object.__setattr__(self, "clauses", tuple(clauses))
        object.__setattr__(self, "unsat", unsat)

    @property
    def width(self) -> int:
        return max((len(c) for c in self.clauses), default=0)

    @property
    def num_clauses(self) -> int:
        return len(self.clauses) + (1 if self.unsat else 0)


def evaluate(formula: CnfFormula, assignment: Sequence[int]) -> bool:
    """True iff the 0/1 ``assignment`` (indexed by variable - 1) satisfies ``formula``."""
    if len(assignment) != formula.num_vars:
        raise ValueError("assignment does not cover all variables")
    if formula.unsat:
        return False
    for clause in formula.clauses:
        if not any((assignment[abs(l) - 1] == 1) == (l > 0) for l in clause):
            return False
    return True


@dataclass(frozen=True)
class InstanceParams:
    vars: int
    dom: int
    cons: int
    tuples: int
    size: int
    max_arity: int
    max_degree: int


def validate(instance: CspInstance) -> Optional[str]:
    """Return a description of the first structural violation, or None."""
    n, d = instance.num_vars, instance.domain_size
    if n < 0:
        return "negative variable count"
    if d < 1:
        return "domain size must be positive"
    if instance.names is not None:
        if len(instance.names) != n:
            return "names/variables length mismatch"
        if len(set(instance.names)) != n:
            return "duplicate variable name"
    for i, c in enumerate(instance.constraints):
        if not c.scope:
            return f"constraint {i}: empty scope"
        if len(set(c.scope)) != len(c.scope):
            return f"constraint {i}: repeated variable in scope"
        if any(v < 0 or v >= n for v in c.scope):
            return f"constraint {i}: variable out of range"
        for t in c.relation:
            if len(t) != len(c.scope):
                return f"constraint {i}: tuple/scope length mismatch"
            if any(x < 0 or x >= d for x in t):
                return f"constraint {i}: value out of domain"
    return None


def ensure_valid(instance: CspInstance) -> None:
    problem = validate(instance)
    if problem is not None:
        raise ValueError(problem)


@dataclass(frozen=True)
class NormalizeMap:
    """Back-map produced by :func:`normalize`.

    ``var_map[i]`` is the original id of normalized variable ``i``;
    ``value_map[v]`` the original value of normalized value ``v``.
    Variables in ``free`` occur in no scope and get value 0.
    """

    num_vars: int
    var_map: tuple
    value_map: tuple
    free: tuple

    def __call__(self, witness: Sequence[int]) -> Assignment:
        out = [0] * self.num_vars
        for new, old in enumerate(self.var_map):
            out[old] = self.value_map[witness[new]]
        return tuple(out)

    @property
    def is_identity(self) -> bool:
        return (not self.free and self.var_map == tuple(range(self.num_vars))
                and self.value_map == tuple(range(len(self.value_map))))


def normalize(instance: CspInstance) -> tuple:
    """Drop unused variables and compact unused domain values.

    Returns ``(normalized_instance, back_map)``.
    """
    used_vars = sorted({v for c in instance.constraints for v in c.scope})
    used_vals = sorted({x for c in instance.constraints for t in c.relation for x in t})
    if not used_vals:
        # nothing to compact to; keep value 0 so the domain stays non-empty
        used_vals = [0]
    var_index = {old: new for new, old in enumerate(used_vars)}
    val_index = {old: new for new, old in enumerate(used_vals)}
    constraints = tuple(
        Constraint(tuple(var_index[v] for v in c.scope),
                   tuple(tuple(val_index[x] for x in t) for t in c.relation))
        for c in instance.constraints)
    names = None
    if instance.names is not None:
        names = tuple(instance.names[v] for v in used_vars)
    free = tuple(v for v in range(instance.num_vars) if v not in var_index)
    out = CspInstance(len(used_vars), len(used_vals), constraints, names)
    return out, NormalizeMap(instance.num_vars, tuple(used_vars), tuple(used_vals), free)


def assign_and_simplify(instance: CspInstance, partial: PartialAssignment) -> Optional[CspInstance]:
    """Apply ``partial`` and return the residual instance, or None if unsat.

    Variable ids are kept; assigned variables simply vanish from scopes.
    Constraints not touching ``partial`` are left as they are.
    """
    if not partial:
        return instance
    for v, x in partial.items():
        if not (0 <= v < instance.num_vars and 0 <= x < instance.domain_size):
            raise ValueError(f"invalid partial assignment {v}={x}")
    constraints = []
    for c in instance.constraints:
        hit = [i for i, v in enumerate(c.scope) if v in partial]
        if not hit:
            constraints.append(c)
            continue
        keep = [i for i, v in enumerate(c.scope) if v not in partial]
        wanted = [(i, partial[c.scope[i]]) for i in hit]
        rel = [tuple(t[i] for i in keep) for t in c.relation
               if all(t[i] == x for i, x in wanted)]
        if not rel:
            return None
        if keep:
            constraints.append(Constraint(tuple(c.scope[i] for i in keep), rel))
    return CspInstance(instance.num_vars, instance.domain_size, tuple(constraints), instance.names)


def parameters(instance: CspInstance) -> InstanceParams:
    cons = instance.constraints
    degree = [0] * instance.num_vars
    for c in cons:
        for v in c.scope:
            degree[v] += 1
    return InstanceParams(
        vars=instance.num_vars,
        dom=instance.domain_size,
        cons=len(cons),
        tuples=sum(len(c.relation) for c in cons),
        size=sum(c.arity * len(c.relation) for c in cons),
        max_arity=max((c.arity for c in cons), default=0),
        max_degree=max(degree, default=0),
    )


def disjoint_union(instances: Sequence[CspInstance]) -> tuple:
    """Variable-disjoint union of ``instances``.

    Returns ``(union, split)`` where ``split(witness)`` yields one witness
    per part.
    """
    if not instances:
        raise ValueError("need at least one instance")
    if len(instances) == 1:
        only = instances[0]
        return only, lambda w: [tuple(w)]
    d = max(inst.domain_size for inst in instances)
    offsets = []
    constraints = []
    names = []
    offset = 0
    for k, inst in enumerate(instances):
        offsets.append(offset)
        for c in inst.constraints:
            constraints.append(Constraint(tuple(v + offset for v in c.scope), c.relation))
        names.extend(f"{inst.name(v)}#{k}" for v in range(inst.num_vars))
        offset += inst.num_vars
    union = CspInstance(offset, d, tuple(constraints), tuple(names))
    sizes = [(off, inst.num_vars, inst.domain_size) for off, inst in zip(offsets, instances)]

    def split(witness):
        # unconstrained variables may carry values outside a smaller part's domain
        return [tuple(x if x < dom else 0 for x in witness[off:off + n])
                for off, n, dom in sizes]

    return union, split


def check(instance: CspInstance, assignment: Union[Sequence[int], Mapping[int, int]]) -> bool:
    """True iff the total ``assignment`` satisfies every constraint."""
    if isinstance(assignment, Mapping):
        missing = [v for v in range(instance.num_vars) if v not in assignment]
        if missing:
            raise ValueError(f"partial assignment: variables {missing} unassigned")
        values = [assignment[v] for v in range(instance.num_vars)]
    else:
        values = list(assignment)
        if len(values) != instance.num_vars:
            raise ValueError("partial assignment: wrong length")
    return all(c.allows([values[v] for v in c.scope]) for c in instance.constraints)


def make_instance(num_vars: int, domain_size: int,
                  constraints: Iterable, names: Optional[Iterable[str]] = None) -> CspInstance:
    """Build and validate an instance from ``(scope, relation)`` pairs."""
    inst = CspInstance(num_vars, domain_size,
                       tuple(c if isinstance(c, Constraint) else Constraint(*c) for c in constraints),
                       tuple(names) if names is not None else None)
    ensure_valid(inst)
    return inst


def compose(*maps: Callable) -> Callable:
    """Compose back-maps listed from outermost reduction to innermost."""
    def run(witness):
        for m in reversed(maps):
            witness = m(witness)
        return witness
    return run
