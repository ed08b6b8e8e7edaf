"""Brute-force ground truth: partition functions, marginals, Gibbs free
energy, tree covariance chains, and perfect-matching enumeration.

Deliberately exponential.  All sums run in the log domain with a running
max shift, so couplings up to |J| ~ 20 stay in range.  State iteration is
row-major over vertex ids, which fixes the reduction order bit-for-bit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_STATE_CAP = 2 ** 24


@dataclass
class ExactSummary:
    log_z: float
    vertex_marginals: list
    factor_marginals: list
    z: float = field(init=False)

    def __post_init__(self):
        self.z = math.exp(self.log_z)


def _log_joint(model):
    """Dense log sum of all factor tables, axes ordered by vertex id."""
    qs = model.cardinalities
    with np.errstate(divide="ignore"):
        out = np.zeros(tuple(qs))
        for a, table in enumerate(model.potentials):
            members = model.graph.factors[a]
            logt = np.log(table)
            # expand to the joint's axes
            perm = np.argsort(members)
            expanded = np.transpose(logt, axes=perm)
            shape = [1] * len(qs)
            for i in members:
                shape[i] = qs[i]
            out = out + expanded.reshape(shape)
    return out


def brute_force(model, state_cap=DEFAULT_STATE_CAP):
    """Exact Z and all vertex/factor marginals of a DiscreteModel."""
    if model.state_space_size > state_cap:
        raise ValueError("state space %d exceeds cap %d"
                         % (model.state_space_size, state_cap))
    logj = _log_joint(model)
    shift = logj.max()
    w = np.exp(logj - shift)
    total = w.sum()
    log_z = shift + math.log(total)
    p = w / total
    n = model.graph.num_vertices
    vmarg = []
    for i in range(n):
        axes = tuple(j for j in range(n) if j != i)
        vmarg.append(p.sum(axis=axes))
    fmarg = []
    for members in model.graph.factors:
        axes = tuple(j for j in range(n) if j not in members)
        t = p.sum(axis=axes)
        sorted_members = sorted(members)
        perm = [sorted_members.index(i) for i in members]
        fmarg.append(np.transpose(t, axes=perm))
    return ExactSummary(log_z, vmarg, fmarg)


def brute_force_log_z_reordered(model, order):
    """Independent check: eliminate variables one at a time in `order`."""
    qs = model.cardinalities
    logj = _log_joint(model)
    shift = logj.max()
    w = np.exp(logj - shift)
    for i in sorted(order, reverse=True):
        w = w.sum(axis=i)
    return shift + math.log(float(w))


def pair_covariance(model, i, j, stats=None):
    """Cov_p(phi_i, phi_j) under the exact distribution; indicator stats
    of the first q-1 states unless explicit per-vertex stats are given."""
    logj = _log_joint(model)
    w = np.exp(logj - logj.max())
    p = w / w.sum()
    n = model.graph.num_vertices

    def stat_matrix(v):
        q = model.cardinalities[v]
        if stats is not None:
            return np.asarray(stats[v], dtype=float)
        return np.eye(q)[:, :-1]  # indicators of states 0..q-2

    si, sj = stat_matrix(i), stat_matrix(j)
    axes_i = tuple(a for a in range(n) if a != i)
    axes_j = tuple(a for a in range(n) if a != j)
    pi = p.sum(axis=axes_i)
    pj = p.sum(axis=axes_j)
    if i == j:
        mean = si.T @ pi
        sec = np.einsum("x,xa,xb->ab", pi, si, si)
        return sec - np.outer(mean, mean)
    axes_ij = tuple(a for a in range(n) if a not in (i, j))
    pij = p.sum(axis=axes_ij)
    if i > j:
        pij = pij.T
    mean_i = si.T @ pi
    mean_j = sj.T @ pj
    sec = np.einsum("xy,xa,yb->ab", pij, si, sj)
    return sec - np.outer(mean_i, mean_j)


def gibbs_free_energy(model, q, tol=1e-9):
    """F_Gibbs(q) = sum_x q(x) log(q(x) / prod Psi); min over q is -log Z."""
    q = np.asarray(q, dtype=float)
    if abs(q.sum() - 1.0) > tol:
        raise ValueError("q is not normalized")
    logj = _log_joint(model)
    out = 0.0
    it = np.nditer(q, flags=["multi_index"])
    for val in it:
        val = float(val)
        if val == 0.0:
            continue
        lp = logj[it.multi_index]
        if lp == -np.inf:
            return math.inf
        out += val * (math.log(val) - lp)
    return out


def tree_covariance_chain(model, i, j):
    """Covariance of sufficient statistics on a tree via the walk product:

        Cov(phi_i, phi_j) = Cov_{a_n}(phi_j, phi_{i_n}) Var^{-1} ...
                            Var_{i_2}^{-1} Cov_{a_1}(phi_{i_2}, phi_i)

    alternating neighbor covariances and inverted vertex variances along
    the unique factor walk from i to j.  Marginals come from brute force
    (the oracle module owns ground truth); equality with the direct
    covariance is the tested identity.
    """
    from .graphs import nullity
    g = model.graph
    if nullity(g) != 0:
        raise ValueError("factor graph is not a forest")
    walk = _factor_walk(g, i, j)
    if walk is None:
        raise ValueError("vertices %d and %d are disconnected" % (i, j))
    summary = brute_force(model)

    def vertex_stat(v):
        return np.eye(model.cardinalities[v])[:, :-1]

    def var(v):
        pv = summary.vertex_marginals[v]
        s = vertex_stat(v)
        mean = s.T @ pv
        return np.einsum("x,xa,xb->ab", pv, s, s) - np.outer(mean, mean)

    def cov(a, tgt, src):
        members = g.factors[a]
        t = summary.factor_marginals[a]
        axes = {v: pos for pos, v in enumerate(members)}
        keep = (axes[tgt], axes[src])
        other = tuple(p for p in range(len(members)) if p not in keep)
        pts = t.sum(axis=other) if other else t
        # result axes ordered by member position; reorder to (tgt, src)
        if axes[tgt] > axes[src]:
            pts = pts.T
        st, ss = vertex_stat(tgt), vertex_stat(src)
        mean_t = st.T @ pts.sum(axis=1)
        mean_s = ss.T @ pts.sum(axis=0)
        sec = np.einsum("xy,xa,yb->ab", pts, st, ss)
        return sec - np.outer(mean_t, mean_s)

    if i == j:
        return var(i)
    verts, facts = walk
    out = None
    for step in range(len(facts)):
        c = cov(facts[step], verts[step + 1], verts[step])
        out = c if out is None else c @ np.linalg.inv(var(verts[step])) @ out
    return out


def _factor_walk(g, i, j):
    """Unique walk (vertices, factors) from i to j on a tree factor graph."""
    if i == j:
        return ([i], [])
    prev = {i: (None, None)}
    queue = [i]
    while queue:
        v = queue.pop(0)
        for a in g.factors_of(v):
            for w in g.factors[a]:
                if w not in prev:
                    prev[w] = (v, a)
                    queue.append(w)
    if j not in prev:
        return None
    verts, facts = [j], []
    v = j
    while v != i:
        pv, pa = prev[v]
        verts.append(pv)
        facts.append(pa)
        v = pv
    return (verts[::-1], facts[::-1])


def enumerate_perfect_matchings(g, weights, edge_cap=24):
    """Exact sum over perfect matchings of the product of edge weights."""
    if g.num_edges > edge_cap:
        raise ValueError("edge count %d exceeds cap %d" % (g.num_edges, edge_cap))
    weights = [float(w) for w in weights]
    covered = [False] * g.num_vertices

    def rec(v):
        while v < g.num_vertices and covered[v]:
            v += 1
        if v == g.num_vertices:
            return 1.0
        total = 0.0
        for k in g.incident_edges(v):
            u, w = g.edges[k]
            other = w if u == v else u
            if other == v or covered[other]:
                continue
            covered[v] = covered[other] = True
            total += weights[k] * rec(v + 1)
            covered[v] = covered[other] = False
        return total

    return rec(0)


def enumerate_matchings(g):
    """All matchings of a multigraph as lists of edge indices (incl. [])."""
    out = []

    def rec(k, used, current):
        if k == g.num_edges:
            out.append(list(current))
            return
        rec(k + 1, used, current)
        u, v = g.edges[k]
        if u != v and u not in used and v not in used:
            used.add(u)
            used.add(v)
            current.append(k)
            rec(k + 1, used, current)
            current.pop()
            used.remove(u)
            used.remove(v)

    rec(0, set(), [])
    return out


def ising_brute_force_log_z(model):
    """Direct +-1 spin summation, independent of the factor-table path."""
    g = model.graph
    n = g.num_vertices
    energies = []
    for bits in itertools.product((1, -1), repeat=n):
        energies.append(model.energy(bits))
    shift = max(energies)
    return shift + math.log(sum(math.exp(e - shift) for e in energies))
