"""Constraint-satisfaction toolkit: CNF/CSP reductions, branching and
treewidth solvers, and search-tree bound experiments."""

from .core import (Assignment, BudgetExceeded, CnfFormula, Constraint, CspInstance,
                   InstanceParams, assign_and_simplify, check, disjoint_union, evaluate,
                   make_instance, normalize, parameters, validate)
from .solvers import (BranchStats, SolveResult, backtracking_solve, brute_force_cnf,
                      brute_force_csp, freuder_dp_solve, tuple_branching_solve)
from .structure import (SimpleGraph, TreeDecomposition, incidence_graph, primal_graph,
                        treewidth_exact, treewidth_heuristic, tw_params,
                        validate_decomposition)

__version__ = "0.1.0"
