"""Random small instances and independent oracles shared by the tests."""
import itertools
import random

from cspkit.core import CnfFormula, Constraint, CspInstance
from cspkit.structure import SimpleGraph


def random_instance(rng, max_vars=6, max_dom=3, max_cons=6, max_tuples=8,
                    min_dom=1, boolean=False, max_arity=3):
    n = rng.randint(1, max_vars)
    d = 2 if boolean else rng.randint(min_dom, max_dom)
    constraints = []
    for _ in range(rng.randint(0, max_cons)):
        arity = rng.randint(1, min(n, max_arity))
        scope = tuple(rng.sample(range(n), arity))
        space = list(itertools.product(range(d), repeat=arity))
        k = rng.randint(0, min(max_tuples, len(space)))
        constraints.append(Constraint(scope, rng.sample(space, k)))
    return CspInstance(n, d, tuple(constraints))


def random_cnf(rng, max_vars=8, max_clauses=6, max_width=None):
    n = rng.randint(1, max_vars)
    clauses = []
    for _ in range(rng.randint(0, max_clauses)):
        width = rng.randint(1, min(n, max_width or n))
        vs = rng.sample(range(1, n + 1), width)
        clauses.append(tuple(v if rng.random() < 0.5 else -v for v in vs))
    return CnfFormula(n, tuple(clauses))


def random_graph(rng, n, p):
    return SimpleGraph(n, frozenset((u, v) for u in range(n) for v in range(u + 1, n)
                                    if rng.random() < p))


def naive_sat(instance):
    """Plain itertools enumeration, independent of the numpy oracle."""
    for values in itertools.product(range(instance.domain_size), repeat=instance.num_vars):
        if all(tuple(values[v] for v in c.scope) in set(c.relation) for c in instance.constraints):
            return True
    return False


def naive_cnf_sat(formula):
    if formula.unsat:
        return False
    for values in itertools.product((0, 1), repeat=formula.num_vars):
        if all(any((values[abs(l) - 1] == 1) == (l > 0) for l in c) for c in formula.clauses):
            return True
    return False


def has_clique(graph, k):
    return any(all(graph.has_edge(a, b) for a, b in itertools.combinations(vs, 2))
               for vs in itertools.combinations(range(graph.num_vertices), k))


def three_colorable(graph):
    return any(all(col[u] != col[v] for u, v in graph.edges)
               for col in itertools.product(range(3), repeat=graph.num_vertices))


def rng_for(seed):
    return random.Random(seed)
