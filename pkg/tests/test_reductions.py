import itertools
import math
import warnings
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from cspkit.bench import schuler_leaf_bound
from cspkit.core import (BudgetExceeded, CnfFormula, Constraint, CspInstance, check, evaluate,
                         parameters)
from cspkit.reductions import (branching_root, bounded_tuple_branch, clique_to_2csp,
                               cnf_to_csp, collapse_duplicate_variables, coloring3_to_2csp,
                               csp_to_cnf, degree_reduce, join_constraints, merge_constraints,
                               pad_instance, schuler_branch, schuler_k, smallest_d_for_budget)
from cspkit.solvers import brute_force_cnf, brute_force_csp
from cspkit.structure import SimpleGraph, primal_graph, treewidth_exact
from helpers import (has_clique, naive_cnf_sat, naive_sat, random_cnf, random_graph,
                     random_instance, rng_for, three_colorable)

GOLDEN = (1 + math.sqrt(5)) / 2
# x0(3), from numpy.roots([1, -1, 0, -1]) before the build
ROOT_3 = 1.4655712318767682
ROOT_4 = 1.3802775690976141


# -- cnf_to_csp / csp_to_cnf ------------------------------------------------

def test_cnf_to_csp_three_clause():
    inst = cnf_to_csp(CnfFormula(3, ((1, 2, 3),))).result
    (c,) = inst.constraints
    assert c.arity == 3 and len(c.relation) == 7


def test_cnf_to_csp_unit():
    inst = cnf_to_csp(CnfFormula(1, ((1,),))).result
    assert inst.constraints[0].relation == ((1,),)


def test_cnf_to_csp_mixed_signs():
    inst = cnf_to_csp(CnfFormula(2, ((1, -2),))).result
    assert inst.constraints[0].relation == ((0, 0), (1, 0), (1, 1))


def test_cnf_to_csp_width_limit():
    wide = CnfFormula(25, (tuple(range(1, 26)),))
    with pytest.raises(BudgetExceeded):
        cnf_to_csp(wide)


def test_csp_to_cnf_equality():
    inst = CspInstance(2, 2, (Constraint((0, 1), [(0, 0), (1, 1)]),))
    assert set(csp_to_cnf(inst).result.clauses) == {(1, -2), (-1, 2)}


def test_csp_to_cnf_full_relation():
    inst = CspInstance(3, 2, (Constraint((0, 1, 2), list(itertools.product((0, 1), repeat=3))),))
    assert csp_to_cnf(inst).result.clauses == ()


def test_csp_to_cnf_empty_unary():
    f = csp_to_cnf(CspInstance(1, 2, (Constraint((0,), []),))).result
    assert set(f.clauses) == {(1,), (-1,)}
    assert not brute_force_cnf(f).satisfiable


def test_csp_to_cnf_rejects_non_boolean_and_wide():
    with pytest.raises(ValueError):
        csp_to_cnf(CspInstance(1, 3, (Constraint((0,), [(2,)]),)))
    with pytest.raises(ValueError):
        csp_to_cnf(CspInstance(3, 2, (Constraint((0, 1, 2), [(0, 0, 0)]),)), r=2)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10 ** 9))
def test_cnf_csp_round_trip_preserves_sat(seed):
    f = random_cnf(rng_for(seed))
    inst = cnf_to_csp(f).result
    res = brute_force_csp(inst)
    assert res.satisfiable == naive_cnf_sat(f)
    if res.satisfiable:
        assert evaluate(f, res.witness)
    back = csp_to_cnf(inst).result
    assert brute_force_cnf(back).satisfiable == res.satisfiable


# -- schuler_branch -----------------------------------------------------------

def test_schuler_narrow_formula_is_single_leaf():
    f = CnfFormula(3, ((1, 2), (-2, 3)))
    out = schuler_branch(f, 2)
    leaves = list(out.result)
    assert len(leaves) == 1 and leaves[0].instance == f


def test_schuler_one_step():
    out = schuler_branch(CnfFormula(3, ((1, 2, 3),)), 2)
    leaves = list(out.result)
    assert [l.instance.clauses for l in leaves] == [((1, 2),), ((3,),)]
    assert leaves[1].back_map((1, 1, 1)) == (0, 0, 1)
    assert out.stats.leaves == 2 and out.stats.nodes == 3


def test_schuler_rejected_leaf():
    # right branch falsifies 1 and 2, which empties the unit-ish clause (1 v 2)
    f = CnfFormula(3, ((1, 2, 3), (1, 2)))
    leaves = list(schuler_branch(f, 2).result)
    assert any(l.rejected and l.instance.unsat for l in leaves)


def test_schuler_random_twenty_vars():
    rng = rng_for(99)
    for _ in range(10):
        n, m = 20, 30
        clauses = []
        for _ in range(m):
            vs = rng.sample(range(1, n + 1), rng.randint(1, 8))
            clauses.append(tuple(v if rng.random() < 0.5 else -v for v in vs))
        f = CnfFormula(n, tuple(clauses))
        out = schuler_branch(f, 3)
        truth = brute_force_cnf(f)
        found = None
        for leaf in out.result:
            assert leaf.instance.width <= 3
            if found is None:
                r = brute_force_cnf(leaf.instance)
                if r.satisfiable:
                    found = leaf.back_map(r.witness)
        assert (found is not None) == truth.satisfiable
        if found is not None:
            assert evaluate(f, found)
        assert out.stats.leaves <= schuler_leaf_bound(n, m, 3)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10 ** 9), st.integers(1, 4))
def test_schuler_invariants(seed, k):
    f = random_cnf(rng_for(seed), max_vars=8, max_clauses=6)
    out = schuler_branch(f, k)
    any_sat = False
    for leaf in out.result:
        assert leaf.instance.width <= k
        r = brute_force_cnf(leaf.instance)
        if r.satisfiable:
            any_sat = True
            assert evaluate(f, leaf.back_map(r.witness))
    assert any_sat == naive_cnf_sat(f)
    assert out.stats.leaves <= schuler_leaf_bound(f.num_vars, len(f.clauses), k)


def test_schuler_k_values():
    assert schuler_k(100, Fraction(1, 2), 1) == 12
    assert schuler_k(8, 1, 0) == 4
    with pytest.warns(RuntimeWarning):
        assert schuler_k(4, Fraction(1, 10), 1) == 0


def test_schuler_k_float_is_exact():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        # 0.1 * 40 / 2 would floor to 1 only if computed exactly
        assert schuler_k(40, 0.1, 1) == 1


# -- branching roots ----------------------------------------------------------

def test_branching_root_golden_ratio():
    assert abs(branching_root(2) - GOLDEN) <= 1e-9


def test_branching_root_three_and_four():
    assert abs(branching_root(3) - ROOT_3) <= 1e-9
    assert abs(branching_root(4) - ROOT_4) <= 1e-9


def test_branching_roots_decrease():
    roots = [branching_root(d) for d in range(2, 17)]
    assert all(a > b for a, b in zip(roots, roots[1:]))
    for d, x in zip(range(2, 17), roots):
        assert 1 < x <= 2
        assert abs(x ** d - x ** (d - 1) - 1) <= 1e-9


def test_smallest_d_for_budget():
    assert smallest_d_for_budget(1, 1) == 2
    assert smallest_d_for_budget(1, 0.5) == 4
    assert smallest_d_for_budget(1, 1000) == 2
    with pytest.raises(BudgetExceeded):
        smallest_d_for_budget(1000, Fraction(1, 1000))


# -- duplicate-column collapse --------------------------------------------------

def test_collapse_equal_pair():
    inst = CspInstance(3, 2, (Constraint((0, 1), [(0, 0), (1, 1)]),
                              Constraint((1, 2), [(0, 1), (1, 1), (1, 0)])))
    out = collapse_duplicate_variables(inst)
    assert out.result.constraints[1].scope == (0, 2)
    assert all(1 not in c.scope for c in out.result.constraints)
    assert out.back_map((1, 0, 0)) == (1, 1, 0)


def test_collapse_fixpoint():
    inst = CspInstance(2, 2, (Constraint((0, 1), [(0, 1), (1, 0)]),))
    out = collapse_duplicate_variables(inst)
    assert out.result == inst and out.stats.extra["merges"] == 0


def test_collapse_rejects():
    inst = CspInstance(2, 2, (Constraint((0, 1), [(0, 0), (1, 1)]),
                              Constraint((0, 1), [(0, 1), (1, 0)])))
    assert not brute_force_csp(inst).satisfiable
    out = collapse_duplicate_variables(inst)
    assert out.stats.extra["rejected"]
    assert not brute_force_csp(out.result).satisfiable


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10 ** 9))
def test_collapse_preserves_sat(seed):
    inst = random_instance(rng_for(seed), boolean=True, max_arity=4)
    out = collapse_duplicate_variables(inst)
    res = brute_force_csp(out.result)
    assert res.satisfiable == naive_sat(inst)
    if res.satisfiable:
        assert check(inst, out.back_map(res.witness))


# -- bounded tuple branching ----------------------------------------------------

def test_bounded_tuple_no_branching():
    inst = CspInstance(2, 2, (Constraint((0, 1), [(0, 1), (1, 0)]),))
    leaves = list(bounded_tuple_branch(inst, 2).result)
    assert len(leaves) == 1 and leaves[0].instance == inst


def test_bounded_tuple_one_step():
    rel = [(0, 0, 1), (0, 1, 0), (1, 0, 0), (1, 1, 1)]
    inst = CspInstance(3, 2, (Constraint((0, 1, 2), rel),))
    out = bounded_tuple_branch(inst, 3)
    leaves = list(out.result)
    assert len(leaves) == 2 and out.stats.leaves == 2
    for leaf in leaves:
        assert all(len(c.relation) <= 3 for c in leaf.instance.constraints)
    # satisfied branch fixes (0,0,1) and removes the constraint
    assert leaves[0].instance.constraints == ()
    assert leaves[0].back_map((1, 1, 1)) == (0, 0, 1)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10 ** 9), st.integers(2, 3))
def test_bounded_tuple_invariants(seed, d):
    rng = rng_for(seed)
    inst = random_instance(rng, boolean=True, max_vars=7, max_arity=4, max_tuples=6, max_cons=3)
    T = parameters(inst).tuples
    out = bounded_tuple_branch(inst, d)
    any_sat = False
    for leaf in out.result:
        assert all(len(c.relation) <= d for c in leaf.instance.constraints)
        assert parameters(leaf.instance).max_arity <= 2 ** d
        r = brute_force_csp(leaf.instance)
        if r.satisfiable:
            any_sat = True
            assert check(inst, leaf.back_map(r.witness))
    assert any_sat == naive_sat(inst)
    assert out.stats.leaves <= 2 * math.ceil(branching_root(d) ** T)


# -- merge ------------------------------------------------------------------------

def test_merge_two_unaries():
    inst = CspInstance(2, 2, (Constraint((0,), [(0,)]), Constraint((1,), [(1,)])))
    out = merge_constraints(inst, 1).result
    assert out.constraints == (Constraint((0, 1), [(0, 1)]),)


def test_merge_inconsistent_pair():
    inst = CspInstance(1, 2, (Constraint((0,), [(0,)]), Constraint((0,), [(1,)])))
    out = merge_constraints(inst, 1).result
    assert out.constraints[0].relation == ()


def test_merge_singleton_groups():
    inst = random_instance(rng_for(4), max_cons=6)
    while not inst.constraints:
        inst = random_instance(rng_for(5), max_cons=6)
    assert merge_constraints(inst, len(inst.constraints)).result == inst


def test_merge_group_sizes():
    inst = CspInstance(7, 2, tuple(Constraint((v,), [(0,), (1,)]) for v in range(7)))
    out = merge_constraints(inst, 3).result
    assert [c.arity for c in out.constraints] == [3, 2, 2]


def test_merge_budget():
    cons = tuple(Constraint((v,), [(0,), (1,)]) for v in range(12))
    with pytest.raises(BudgetExceeded):
        merge_constraints(CspInstance(12, 2, cons), 1, max_join=1000)


def brute_join(members):
    scope = []
    for c in members:
        scope += [v for v in c.scope if v not in scope]
    rel = []
    for vals in itertools.product(range(3), repeat=len(scope)):
        a = dict(zip(scope, vals))
        if all(tuple(a[v] for v in c.scope) in c.relation for c in members):
            rel.append(vals)
    return tuple(scope), tuple(rel)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10 ** 9))
def test_join_matches_enumeration(seed):
    inst = random_instance(rng_for(seed), max_dom=3, min_dom=3, max_cons=4)
    if not inst.constraints:
        return
    joined = join_constraints(inst.constraints)
    scope, rel = brute_join(inst.constraints)
    assert joined.scope == scope
    assert joined.relation == rel


# -- graph encodings -------------------------------------------------------------------

def triangle():
    return SimpleGraph(3, frozenset({(0, 1), (1, 2), (0, 2)}))


def test_clique_triangle():
    out = clique_to_2csp(triangle(), 3)
    res = brute_force_csp(out.result)
    assert res.satisfiable and out.back_map(res.witness) == (0, 1, 2)


def test_clique_path_has_none():
    path = SimpleGraph(3, frozenset({(0, 1), (1, 2)}))
    assert not brute_force_csp(clique_to_2csp(path, 3).result).satisfiable


def test_clique_k1():
    assert brute_force_csp(clique_to_2csp(SimpleGraph(2), 1).result).satisfiable
    assert not brute_force_csp(clique_to_2csp(SimpleGraph(0), 1).result).satisfiable
    with pytest.raises(ValueError):
        clique_to_2csp(triangle(), 0)


def test_clique_random_graphs():
    rng = rng_for(8)
    for _ in range(60):
        g = random_graph(rng, rng.randint(1, 6), rng.random())
        k = rng.randint(1, 4)
        out = clique_to_2csp(g, k)
        res = brute_force_csp(out.result)
        assert res.satisfiable == has_clique(g, k)
        if res.satisfiable:
            clique = out.back_map(res.witness)
            assert len(clique) == k
            assert all(g.has_edge(a, b) for a, b in itertools.combinations(clique, 2))


def test_coloring_edge_constraints():
    out = coloring3_to_2csp(triangle()).result
    assert all(len(c.relation) == 6 for c in out.constraints)


def test_coloring_k4_and_c5():
    k4 = SimpleGraph(4, frozenset(itertools.combinations(range(4), 2)))
    c5 = SimpleGraph(5, frozenset((i, (i + 1) % 5) for i in range(5)))
    assert not brute_force_csp(coloring3_to_2csp(k4).result).satisfiable
    res = brute_force_csp(coloring3_to_2csp(c5).result)
    assert res.satisfiable
    assert all(res.witness[u] != res.witness[v] for u, v in c5.edges)


def test_coloring_random():
    rng = rng_for(12)
    for _ in range(40):
        g = random_graph(rng, rng.randint(1, 6), rng.random())
        assert brute_force_csp(coloring3_to_2csp(g).result).satisfiable == three_colorable(g)


# -- degree gadget ---------------------------------------------------------------------

def test_degree_gadget_substitution():
    a = Constraint((0, 1), [(0, 0), (1, 1)])
    b = Constraint((0, 2), [(0, 1), (1, 0)])
    c = Constraint((0, 3), [(1, 1)])
    out = degree_reduce(CspInstance(4, 2, (a, b, c)))
    inst = out.result
    assert inst.num_vars == 6
    assert inst.constraints[0].scope == (0, 1)
    assert inst.constraints[1].scope == (4, 2)
    assert inst.constraints[2].scope == (5, 3)
    assert inst.constraints[3] == Constraint((0, 4, 5), [(0, 0, 0), (1, 1, 1)])
    assert parameters(inst).max_degree == 2
    deg = [len(o) for o in inst.occurrences()]
    assert deg[0] == deg[4] == deg[5] == 2


def test_degree_two_unchanged():
    inst = CspInstance(3, 2, (Constraint((0, 1), [(0, 0)]), Constraint((1, 2), [(0, 1)])))
    assert degree_reduce(inst).result == inst


def test_degree_rejects_high_degree():
    inst = CspInstance(2, 2, tuple(Constraint((0, 1), [(0, t)]) for t in range(2)) +
                       tuple(Constraint((0,), [(0,)]) for _ in range(2)))
    with pytest.raises(ValueError):
        degree_reduce(inst)


# -- padding --------------------------------------------------------------------------

def test_pad_identity():
    inst = random_instance(rng_for(2))
    assert pad_instance(inst, 1).result is inst


def test_pad_three_copies_keeps_tw():
    eq = [(0, 0), (1, 1)]
    inst = CspInstance(4, 2, tuple(Constraint((i, (i + 1) % 4), eq) for i in range(4)))
    out = pad_instance(inst, 3)
    assert out.result.num_vars == 12
    assert treewidth_exact(primal_graph(out.result))[0] == treewidth_exact(primal_graph(inst))[0]
    res = brute_force_csp(out.result)
    assert check(inst, out.back_map(res.witness))


def test_pad_unsat_stays_unsat():
    inst = CspInstance(1, 2, (Constraint((0,), []),))
    assert not brute_force_csp(pad_instance(inst, 2).result).satisfiable
