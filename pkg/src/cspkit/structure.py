"""Primal/incidence graphs, tree decompositions and treewidth."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core import BudgetExceeded, CspInstance

EXACT_BUDGET = 24


@dataclass(frozen=True)
class SimpleGraph:
    num_vertices: int
    edges: frozenset = frozenset()

    def __post_init__(self):
        edges = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"loop at vertex {u}")
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise ValueError(f"edge {u}-{v} out of range")
            edges.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(edges))

    def adjacency(self) -> list:
        adj = [set() for _ in range(self.num_vertices)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def has_edge(self, u, v) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    def components(self) -> list:
        adj = self.adjacency()
        seen = [False] * self.num_vertices
        comps = []
        for s in range(self.num_vertices):
            if seen[s]:
                continue
            seen[s] = True
            comp, stack = [], [s]
            while stack:
                u = stack.pop()
                comp.append(u)
                for w in adj[u]:
                    if not seen[w]:
                        seen[w] = True
                        stack.append(w)
            comps.append(sorted(comp))
        return comps


@dataclass(frozen=True)
class TreeDecomposition:
    bags: tuple
    tree_edges: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "bags", tuple(frozenset(b) for b in self.bags))
        object.__setattr__(self, "tree_edges", tuple((int(a), int(b)) for a, b in self.tree_edges))

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=0) - 1


def primal_graph(instance: CspInstance) -> SimpleGraph:
    edges = set()
    for c in instance.constraints:
        s = c.scope
        for i in range(len(s)):
            for j in range(i + 1, len(s)):
                edges.add((s[i], s[j]))
    return SimpleGraph(instance.num_vars, frozenset(edges))


def incidence_graph(instance: CspInstance) -> SimpleGraph:
    """Variables are vertices ``0..n-1``, constraint ``i`` is vertex ``n+i``."""
    n = instance.num_vars
    edges = {(v, n + i) for i, c in enumerate(instance.constraints) for v in c.scope}
    return SimpleGraph(n + len(instance.constraints), frozenset(edges))


def validate_decomposition(graph: SimpleGraph, dec: TreeDecomposition) -> Optional[str]:
    """Return the first violated tree-decomposition condition, or None."""
    nb = len(dec.bags)
    n = graph.num_vertices
    if nb == 0:
        return None if n == 0 else "no bags"
    for b in dec.bags:
        if any(not (0 <= v < n) for v in b):
            return "bag contains an unknown vertex"
    if len(dec.tree_edges) != nb - 1:
        return "tree must have exactly bags-1 edges"
    adj = [[] for _ in range(nb)]
    for a, b in dec.tree_edges:
        if not (0 <= a < nb and 0 <= b < nb) or a == b:
            return f"bad tree edge {a}-{b}"
        adj[a].append(b)
        adj[b].append(a)
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    if len(seen) != nb:
        return "tree edges do not connect all bags"
    covered = set().union(*dec.bags)
    for v in range(n):
        if v not in covered:
            return f"vertex {v} is in no bag"
    for u, v in sorted(graph.edges):
        if not any(u in b and v in b for b in dec.bags):
            return f"edge {u}-{v} is in no bag"
    for v in range(n):
        holding = {i for i, b in enumerate(dec.bags) if v in b}
        start = min(holding)
        reach, stack = {start}, [start]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w in holding and w not in reach:
                    reach.add(w)
                    stack.append(w)
        if reach != holding:
            return f"bags containing vertex {v} are not connected"
    return None


def decomposition_from_ordering(graph: SimpleGraph, ordering) -> TreeDecomposition:
    """Tree decomposition induced by eliminating vertices in ``ordering``."""
    n = graph.num_vertices
    if n == 0:
        return TreeDecomposition((), ())
    adj = graph.adjacency()
    rank = {v: i for i, v in enumerate(ordering)}
    bags = []
    later_sets = []
    for v in ordering:
        later = {w for w in adj[v] if rank[w] > rank[v]}
        for a in later:
            adj[a] |= later - {a}
        bags.append(frozenset(later | {v}))
        later_sets.append(later)
    edges = []
    roots = []
    for i, later in enumerate(later_sets):
        if later:
            edges.append((i, min(rank[w] for w in later)))
        else:
            roots.append(i)
    # separate components share no vertices, so their roots can be chained freely
    for a, b in zip(roots, roots[1:]):
        edges.append((a, b))
    return TreeDecomposition(tuple(bags), tuple(edges))


def min_fill_ordering(graph: SimpleGraph) -> list:
    adj = graph.adjacency()
    alive = set(range(graph.num_vertices))
    order = []
    while alive:
        best, best_key = None, None
        for v in sorted(alive):
            nb = sorted(adj[v])
            fill = sum(1 for i in range(len(nb)) for j in range(i + 1, len(nb))
                       if nb[j] not in adj[nb[i]])
            key = (fill, len(nb))
            if best_key is None or key < best_key:
                best, best_key = v, key
        nb = adj[best]
        for a in nb:
            adj[a] |= nb - {a}
            adj[a].discard(best)
        alive.remove(best)
        order.append(best)
    return order


def treewidth_heuristic(graph: SimpleGraph) -> tuple:
    """Upper bound from a min-fill elimination ordering."""
    dec = decomposition_from_ordering(graph, min_fill_ordering(graph))
    return max(dec.width, 0) if graph.num_vertices else -1, dec


def _exact_component(adj_mask: list, verts: list, upper: int, upper_order: list):
    """Minimum over elimination orderings of the largest later-neighbourhood.

    Subset dynamic programme over eliminated sets, processed by size, keeping
    only sets whose running width is below ``upper``.
    """
    k = len(verts)
    local = {v: i for i, v in enumerate(verts)}
    nbr = [0] * k
    for v in verts:
        m = 0
        for w in adj_mask[v]:
            m |= 1 << local[w]
        nbr[local[v]] = m
    full = (1 << k) - 1

    def q_size(eliminated, v):
        # vertices outside eliminated+v reachable from v through eliminated vertices
        reach = 1 << v
        frontier = reach
        while frontier:
            nxt = 0
            f = frontier
            while f:
                low = f & -f
                nxt |= nbr[low.bit_length() - 1]
                f ^= low
            nxt &= ~reach
            reach |= nxt
            frontier = nxt & eliminated
        return bin(reach & ~eliminated & ~(1 << v)).count("1")

    best_width, best_order = upper, list(upper_order)
    level = {0: (-1, None)}
    parents = [level]
    for size in range(k):
        nxt = {}
        for s, (w, _) in level.items():
            remaining = k - size
            if max(w, remaining - 1) < best_width:
                # the rest can be eliminated in any order without exceeding max(w, remaining-1)
                best_width = max(w, remaining - 1)
                best_order = _trace(parents, s, size) + [i for i in range(k) if not s >> i & 1]
                best_order = [verts[i] for i in best_order]
            rest = full & ~s
            while rest:
                low = rest & -rest
                v = low.bit_length() - 1
                rest ^= low
                width = max(w, q_size(s, v))
                if width >= best_width:
                    continue
                t = s | low
                old = nxt.get(t)
                if old is None or width < old[0]:
                    nxt[t] = (width, v)
        if not nxt:
            break
        level = nxt
        parents.append(level)
    return best_width, best_order


def _trace(parents, s, size):
    order = []
    while size > 0:
        _, v = parents[size][s]
        order.append(v)
        s &= ~(1 << v)
        size -= 1
    return order[::-1]


def treewidth_exact(graph: SimpleGraph, budget: int = EXACT_BUDGET) -> tuple:
    """Exact treewidth with an optimal decomposition.

    Works per connected component; each component may have at most
    ``budget`` vertices.
    """
    n = graph.num_vertices
    if n == 0:
        return -1, TreeDecomposition((), ())
    comps = graph.components()
    if max(len(c) for c in comps) > budget:
        raise BudgetExceeded(f"component with more than {budget} vertices")
    adj = graph.adjacency()
    ordering = []
    width = 0
    for comp in comps:
        sub = SimpleGraph(len(comp), frozenset(
            (comp.index(u), comp.index(v)) for u, v in graph.edges if u in comp and v in comp))
        ub_order = min_fill_ordering(sub)
        ub = decomposition_from_ordering(sub, ub_order).width
        w, order = _exact_component(adj, comp, ub, [comp[i] for i in ub_order])
        width = max(width, w)
        ordering.extend(order)
    dec = decomposition_from_ordering(graph, ordering)
    assert dec.width == width
    return width, dec


@dataclass(frozen=True)
class TwParams:
    tw: int
    tw_star: int
    tw_exact: bool
    tw_star_exact: bool
    decomposition: TreeDecomposition


def best_decomposition(graph: SimpleGraph, budget: int = EXACT_BUDGET) -> tuple:
    """``(width, decomposition, exact)``: exact when affordable, else min-fill."""
    try:
        w, dec = treewidth_exact(graph, budget)
        return w, dec, True
    except BudgetExceeded:
        w, dec = treewidth_heuristic(graph)
        return w, dec, False


def tw_params(instance: CspInstance, budget: int = EXACT_BUDGET) -> TwParams:
    tw, dec, tw_ok = best_decomposition(primal_graph(instance), budget)
    tws, _, tws_ok = best_decomposition(incidence_graph(instance), budget)
    return TwParams(tw, tws, tw_ok, tws_ok, dec)


def write_graph(graph: SimpleGraph) -> str:
    lines = [f"p edge {graph.num_vertices} {len(graph.edges)}"]
    lines += [f"e {u + 1} {v + 1}" for u, v in sorted(graph.edges)]
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> SimpleGraph:
    n = None
    declared = 0
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        if parts[0] == "p":
            if len(parts) != 4 or parts[1] != "edge" or n is not None:
                raise ValueError(f"line {lineno}: bad header {line!r}")
            n, declared = int(parts[2]), int(parts[3])
        elif parts[0] == "e":
            if n is None or len(parts) != 3:
                raise ValueError(f"line {lineno}: bad edge line {line!r}")
            u, v = int(parts[1]) - 1, int(parts[2]) - 1
            edges.append((u, v))
        else:
            raise ValueError(f"line {lineno}: unexpected {line!r}")
    if n is None:
        raise ValueError("missing 'p edge' header")
    if len(edges) != declared:
        raise ValueError(f"header declares {declared} edges, found {len(edges)}")
    return SimpleGraph(n, frozenset(edges))
