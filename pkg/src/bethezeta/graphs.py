"""Hypergraphs, multigraphs and the structural operations everything else builds on.

Two representations coexist:

* ``FactorGraph`` -- a hypergraph H=(V,F) whose hyperedges (factors) are
  ordered tuples of distinct vertices.  Directed edges are the incidence
  pairs (factor -> vertex), indexed densely in (factor order, member order).
* ``Graph`` -- an undirected multigraph.  Loops and parallel edges are
  first class; every undirected edge owns a pair of opposite directed
  edges (2k, 2k+1).

A FactorGraph in which every factor has exactly two members converts
losslessly to a loop-free Graph and back.

Both carry the non-backtracking transition relation on directed edges.  We
use the receiving convention throughout: entry (e, e') of the relation
matrix is set when e' feeds e, i.e. a walk may step from e' to e.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class DirectedEdge:
    """One incidence pair (factor -> vertex) of a FactorGraph."""

    index: int
    factor: int
    vertex: int


class FactorGraph:
    """Hypergraph H=(V,F) with factors as ordered tuples of distinct vertices.

    Immutable after construction; all operations return new graphs.
    """

    def __init__(self, num_vertices, factors):
        factors = [tuple(f) for f in factors]
        for f in factors:
            if len(f) == 0:
                raise ValueError("empty factor")
            if len(set(f)) != len(f):
                raise ValueError("factor %r has a repeated vertex" % (f,))
            for v in f:
                if not (0 <= v < num_vertices):
                    raise ValueError("factor %r mentions unknown vertex" % (f,))
        self.num_vertices = num_vertices
        self.factors = factors
        self.directed_edges = []
        for a, members in enumerate(factors):
            for i in members:
                self.directed_edges.append(
                    DirectedEdge(len(self.directed_edges), a, i))
        self._vertex_factors = [[] for _ in range(num_vertices)]
        for a, members in enumerate(factors):
            for i in members:
                self._vertex_factors[i].append(a)

    # -- basic structure ---------------------------------------------------

    @property
    def num_factors(self):
        return len(self.factors)

    @property
    def num_directed_edges(self):
        return len(self.directed_edges)

    def vertex_degree(self, i):
        return len(self._vertex_factors[i])

    def factor_degree(self, a):
        return len(self.factors[a])

    def factors_of(self, i):
        """Indices of factors containing vertex i (with multiplicity 1 each)."""
        return list(self._vertex_factors[i])

    def edge_index(self, a, i):
        """Dense index of the directed edge (factor a -> vertex i)."""
        for e in self.directed_edges:
            if e.factor == a and e.vertex == i:
                return e.index
        raise KeyError((a, i))

    def __eq__(self, other):
        return (isinstance(other, FactorGraph)
                and self.num_vertices == other.num_vertices
                and self.factors == other.factors)

    def __repr__(self):
        return "FactorGraph(%d, %r)" % (self.num_vertices, self.factors)

    # -- relation ----------------------------------------------------------

    def transitions_into(self, e):
        """Directed edges e' that feed e: t(e') in s(e), t(e') != t(e), s(e') != s(e)."""
        members = set(self.factors[e.factor])
        out = []
        for ep in self.directed_edges:
            if (ep.vertex in members and ep.vertex != e.vertex
                    and ep.factor != e.factor):
                out.append(ep)
        return out

    def components(self):
        """Connected components as lists of vertex ids (via factor incidence)."""
        seen = [False] * self.num_vertices
        comps = []
        for start in range(self.num_vertices):
            if seen[start]:
                continue
            stack, comp = [start], []
            seen[start] = True
            while stack:
                v = stack.pop()
                comp.append(v)
                for a in self._vertex_factors[v]:
                    for w in self.factors[a]:
                        if not seen[w]:
                            seen[w] = True
                            stack.append(w)
            comps.append(sorted(comp))
        return comps

    def is_connected(self):
        return len(self.components()) <= 1

    # -- conversions ---------------------------------------------------------

    def to_graph(self):
        """Identify a FactorGraph whose factors all have degree 2 with a Graph."""
        for f in self.factors:
            if len(f) != 2:
                raise ValueError("factor %r does not have degree 2" % (f,))
        return Graph(self.num_vertices, [(f[0], f[1]) for f in self.factors])

    def bipartite_graph(self):
        """Bipartite representation B_H: vertices then factors, one edge per incidence."""
        edges = [(e.vertex, self.num_vertices + e.factor)
                 for e in self.directed_edges]
        return Graph(self.num_vertices + self.num_factors, edges)


class Graph:
    """Undirected multigraph; loops and parallel edges allowed.

    Edge k joins ``edges[k] = (u, v)`` (u == v for a loop) and owns the
    directed pair 2k (u -> v) and 2k+1 (v -> u).
    """

    def __init__(self, num_vertices, edges):
        edges = [tuple(e) for e in edges]
        for (u, v) in edges:
            if not (0 <= u < num_vertices and 0 <= v < num_vertices):
                raise ValueError("edge (%r, %r) mentions unknown vertex" % (u, v))
        self.num_vertices = num_vertices
        self.edges = edges
        self._incident = [[] for _ in range(num_vertices)]
        for k, (u, v) in enumerate(edges):
            self._incident[u].append(k)
            self._incident[v].append(k)

    # -- basic structure ---------------------------------------------------

    @property
    def num_edges(self):
        return len(self.edges)

    @property
    def num_directed_edges(self):
        return 2 * len(self.edges)

    def degree(self, v):
        """Number of edge ends at v; a loop counts twice."""
        return len(self._incident[v])

    def incident_edges(self, v):
        """Edge indices at v; loops appear twice."""
        return list(self._incident[v])

    def origin(self, e):
        u, v = self.edges[e // 2]
        return u if e % 2 == 0 else v

    def terminus(self, e):
        u, v = self.edges[e // 2]
        return v if e % 2 == 0 else u

    def reverse(self, e):
        return e ^ 1

    def is_loop(self, k):
        u, v = self.edges[k]
        return u == v

    def __eq__(self, other):
        return (isinstance(other, Graph)
                and self.num_vertices == other.num_vertices
                and self.edges == other.edges)

    def __repr__(self):
        return "Graph(%d, %r)" % (self.num_vertices, self.edges)

    # -- relation ------------------------------------------------------------

    def transitions_into(self, e):
        """Directed edges e' feeding e: t(e') == o(e) and e' != reverse(e)."""
        o = self.origin(e)
        out = []
        for k in self._incident[o]:
            for ep in (2 * k, 2 * k + 1):
                if self.terminus(ep) == o and ep != self.reverse(e):
                    out.append(ep)
        return out

    def components(self):
        seen = [False] * self.num_vertices
        comps = []
        for start in range(self.num_vertices):
            if seen[start]:
                continue
            stack, comp = [start], []
            seen[start] = True
            while stack:
                v = stack.pop()
                comp.append(v)
                for k in self._incident[v]:
                    for w in self.edges[k]:
                        if not seen[w]:
                            seen[w] = True
                            stack.append(w)
            comps.append(sorted(comp))
        return comps

    def is_connected(self):
        return len(self.components()) <= 1

    def to_factor_graph(self):
        """Each edge becomes a degree-2 factor. Loops have no hypergraph image."""
        for (u, v) in self.edges:
            if u == v:
                raise ValueError("a loop cannot become a factor (repeated member)")
        return FactorGraph(self.num_vertices, [list(e) for e in self.edges])


# -- constructors ------------------------------------------------------------

def cycle_graph(n):
    """C_n; n == 1 is a single loop, n == 2 a parallel pair."""
    if n < 1:
        raise ValueError("n >= 1 required")
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def path_graph(n):
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def complete_graph(n):
    return Graph(n, list(itertools.combinations(range(n), 2)))


def bouquet_graph(n):
    """B_n: one vertex, n loops."""
    return Graph(1, [(0, 0)] * n)


def theta_graph(n_parallel=3):
    """Two vertices joined by n parallel edges (n = 3 is the theta graph)."""
    return Graph(2, [(0, 1)] * n_parallel)


def dumbbell_graph():
    """Two loops joined by a bridge (the X_2 fixture)."""
    return Graph(2, [(0, 0), (0, 1), (1, 1)])


def complete_bipartite_graph(m, n):
    return Graph(m + n, [(i, m + j) for i in range(m) for j in range(n)])


# -- structural operations ----------------------------------------------------

def nullity(g):
    """Cycle-space dimension: |E| - |V| + k for graphs, via B_H for hypergraphs."""
    if isinstance(g, Graph):
        return g.num_edges - g.num_vertices + len(g.components())
    return (g.num_directed_edges - g.num_vertices - g.num_factors
            + len(g.components()))


def core(g):
    """Strip degree-1 vertices/factors until none remain.

    Preserves the prime cycles, hence the zeta function.  Isolated
    vertices (degree 0) are dropped as well; surviving vertex/factor ids
    are re-densified in increasing order of the original ids.
    """
    if isinstance(g, Graph):
        return _core_graph(g)
    return _core_factor_graph(g)


def _core_graph(g):
    alive_edges = set(range(g.num_edges))
    deg = [g.degree(v) for v in range(g.num_vertices)]
    changed = True
    while changed:
        changed = False
        for k in list(alive_edges):
            u, v = g.edges[k]
            if u == v:
                continue
            if deg[u] == 1 or deg[v] == 1:
                alive_edges.remove(k)
                deg[u] -= 1
                deg[v] -= 1
                changed = True
    alive_vertices = sorted(v for v in range(g.num_vertices)
                            if deg[v] > 0)
    relabel = {v: i for i, v in enumerate(alive_vertices)}
    edges = [(relabel[g.edges[k][0]], relabel[g.edges[k][1]])
             for k in sorted(alive_edges)]
    return Graph(len(alive_vertices), edges)


def _core_factor_graph(g):
    # directed edges as (factor, vertex) incidences; strip until stable
    incid = {(e.factor, e.vertex) for e in g.directed_edges}
    fdeg = [g.factor_degree(a) for a in range(g.num_factors)]
    vdeg = [g.vertex_degree(i) for i in range(g.num_vertices)]
    changed = True
    while changed:
        changed = False
        for (a, i) in list(incid):
            if fdeg[a] == 1 or vdeg[i] == 1:
                incid.remove((a, i))
                fdeg[a] -= 1
                vdeg[i] -= 1
                changed = True
    alive_factors = sorted(a for a in range(g.num_factors) if fdeg[a] > 0)
    alive_vertices = sorted(i for i in range(g.num_vertices) if vdeg[i] > 0)
    relabel = {v: i for i, v in enumerate(alive_vertices)}
    factors = []
    for a in alive_factors:
        members = [relabel[i] for i in g.factors[a] if (a, i) in incid]
        factors.append(members)
    return FactorGraph(len(alive_vertices), factors)


def delete_edge(g, k):
    if not (0 <= k < g.num_edges):
        raise KeyError("unknown edge id %r" % (k,))
    return Graph(g.num_vertices, g.edges[:k] + g.edges[k + 1:])


def contract_edge(g, k):
    """Contract edge k, merging its endpoints into the smaller id.

    Contracting a loop equals deleting it.  Remaining vertex ids shift
    down to stay dense.
    """
    if not (0 <= k < g.num_edges):
        raise KeyError("unknown edge id %r" % (k,))
    u, v = g.edges[k]
    if u == v:
        return delete_edge(g, k)
    lo, hi = min(u, v), max(u, v)

    def newid(w):
        if w == hi:
            return lo
        return w - 1 if w > hi else w

    edges = [(newid(a), newid(b))
             for j, (a, b) in enumerate(g.edges) if j != k]
    return Graph(g.num_vertices - 1, edges)


def delete_contract(g, k, mode):
    """Dispatch on mode: 'delete' or 'contract'."""
    if mode == "delete":
        return delete_edge(g, k)
    if mode == "contract":
        return contract_edge(g, k)
    raise ValueError("mode must be 'delete' or 'contract'")


def subdivide(g, m):
    """Replace each edge by a path of m edges (m = 1 is the identity)."""
    if m < 1:
        raise ValueError("m >= 1 required")
    if m == 1:
        return Graph(g.num_vertices, list(g.edges))
    edges = []
    nxt = g.num_vertices
    for (u, v) in g.edges:
        chain = [u] + [nxt + j for j in range(m - 1)] + [v]
        nxt += m - 1
        edges.extend((chain[j], chain[j + 1]) for j in range(m))
    return Graph(nxt, edges)


def spanning_tree_count(g):
    """Kirchhoff's matrix-tree theorem, exact over the integers.

    Loops never enter spanning trees and cancel out of the Laplacian;
    parallel edges add up in the off-diagonal entries.
    """
    if not g.is_connected():
        raise ValueError("graph is not connected")
    n = g.num_vertices
    if n == 1:
        return 1
    lap = [[0] * n for _ in range(n)]
    for (u, v) in g.edges:
        if u == v:
            continue
        lap[u][u] += 1
        lap[v][v] += 1
        lap[u][v] -= 1
        lap[v][u] -= 1
    minor = [[Fraction(lap[i][j]) for j in range(1, n)] for i in range(1, n)]
    det = _fraction_det(minor)
    assert det.denominator == 1
    return int(det)


def _fraction_det(rows):
    """Exact determinant by fraction-free-ish Gaussian elimination."""
    n = len(rows)
    rows = [list(r) for r in rows]
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            rows[col], rows[piv] = rows[piv], rows[col]
            det = -det
        det *= rows[col][col]
        inv = 1 / rows[col][col]
        for r in range(col + 1, n):
            factor = rows[r][col] * inv
            if factor:
                for c in range(col, n):
                    rows[r][c] -= factor * rows[col][c]
    return det


def suppress_degree_two(g, edge_signs=None):
    """Smooth out degree-2 vertices, composing path edges (and their signs).

    Returns (reduced graph, reduced signs or None).  Used to find the
    homeomorphism type of small cores; vertices with a single loop are
    left alone (an isolated cycle has no degree-3 anchor).
    """
    edges = [list(e) for e in g.edges]
    signs = list(edge_signs) if edge_signs is not None else [1] * len(edges)
    alive = [True] * len(edges)
    deg = [g.degree(v) for v in range(g.num_vertices)]

    def incident(v):
        out = []
        for k, e in enumerate(edges):
            if alive[k] and v in e:
                out.append(k)
        return out

    changed = True
    while changed:
        changed = False
        for v in range(g.num_vertices):
            if deg[v] != 2:
                continue
            inc = incident(v)
            if len(inc) != 2:
                continue  # a single loop at v
            k1, k2 = inc
            a = edges[k1][0] if edges[k1][1] == v else edges[k1][1]
            b = edges[k2][0] if edges[k2][1] == v else edges[k2][1]
            alive[k1] = alive[k2] = False
            edges.append([a, b])
            signs.append(signs[k1] * signs[k2])
            alive.append(True)
            deg[v] = 0
            changed = True

    alive_vertices = sorted(v for v in range(g.num_vertices) if deg[v] > 0)
    if not alive_vertices:
        alive_vertices = [0]
    relabel = {v: i for i, v in enumerate(alive_vertices)}
    new_edges, new_signs = [], []
    for k, e in enumerate(edges):
        if alive[k]:
            new_edges.append((relabel[e[0]], relabel[e[1]]))
            new_signs.append(signs[k])
    red = Graph(len(alive_vertices), new_edges)
    return (red, new_signs if edge_signs is not None else None)
