"""Loop series expansions of Z and of marginals, and the perfect-matching
specialization with its Bethe solver.

For a converged binary model the finite identity is

    Z = Z_B * sum_s r(s),
    r(s) = (-1)^{|s|} prod_a beta^a_{I_a(s)} prod_i f_{d_i(s)}(gamma_i)

summed over sub-coregraphs s of the bipartite representation (no vertex
or factor of degree one).  The marginal expansion swaps f for g at the
distinguished vertex.  For perfect matchings the terms collapse to
prod (1 - d_i(s)) prod v/(1-v), and three independent evaluations of
Z/Z_B (term sum, ratio identity, determinant average) must agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .polynomial import Poly


def f_poly(n):
    """f_0 = 1, f_1 = 0, f_{n+1} = x f_n + f_{n-1}; exact coefficients."""
    if n < 0:
        raise ValueError("n >= 0 required")
    x = Poly.x()
    fs = [Poly([1]), Poly([])]
    for _ in range(max(0, n - 1)):
        fs.append(x * fs[-1] + fs[-2])
    return fs[n]


def g_poly(n):
    """g_0 = x, g_1 = -2, g_{n+1} = x g_n + g_{n-1}."""
    if n < 0:
        raise ValueError("n >= 0 required")
    x = Poly.x()
    gs = [x, Poly([-2])]
    for _ in range(max(0, n - 1)):
        gs.append(x * gs[-1] + gs[-2])
    return gs[n]


def enumerate_sub_coregraphs(graph, edge_cap=24, exempt_vertex=None):
    """All incidence subsets with no degree-one vertex or factor.

    For a FactorGraph the ground set is its directed-edge (incidence)
    list; for a Graph it is the undirected edge list and only the vertex
    condition applies.  ``exempt_vertex`` lifts the degree-one exclusion
    at one vertex (used by the marginal expansion).  Backtracking prunes
    branches whose remaining edges cannot lift a stuck degree past one.
    """
    from .graphs import Graph
    if isinstance(graph, Graph):
        # a loop contributes 2 to its vertex's subgraph degree
        incidences = [((None, k), (u, v))
                      for k, (u, v) in enumerate(graph.edges)]
        num_items = graph.num_edges
        nv = graph.num_vertices
        fdeg_slots = 0
    else:
        incidences = [((e.factor, e.index), (e.vertex,))
                      for e in graph.directed_edges]
        num_items = graph.num_directed_edges
        nv = graph.num_vertices
        fdeg_slots = graph.num_factors
    if num_items > edge_cap:
        raise ValueError("%d edges exceed enumeration cap %d"
                         % (num_items, edge_cap))

    vdeg = [0] * nv
    fdeg = [0] * max(fdeg_slots, 1)
    remaining_v = [0] * nv
    remaining_f = [0] * max(fdeg_slots, 1)
    for (fac, _), verts in incidences:
        for v in verts:
            remaining_v[v] += 1
        if fac is not None:
            remaining_f[fac] += 1
    out = []
    chosen = []

    def viable():
        for v in range(nv):
            if v != exempt_vertex and vdeg[v] == 1 and remaining_v[v] == 0:
                return False
        for a in range(fdeg_slots):
            if fdeg[a] == 1 and remaining_f[a] == 0:
                return False
        return True

    def ok_final():
        if any(vdeg[v] == 1 for v in range(nv) if v != exempt_vertex):
            return False
        return all(fdeg[a] != 1 for a in range(fdeg_slots))

    def rec(k):
        if k == num_items:
            if ok_final():
                out.append(frozenset(chosen))
            return
        (fac, idx), verts = incidences[k]
        for v in verts:
            remaining_v[v] -= 1
        if fac is not None:
            remaining_f[fac] -= 1
        # branch: skip item k
        if viable():
            rec(k + 1)
        # branch: take item k
        for v in verts:
            vdeg[v] += 1
        if fac is not None:
            fdeg[fac] += 1
        chosen.append(idx)
        if viable():
            rec(k + 1)
        chosen.pop()
        for v in verts:
            vdeg[v] -= 1
        if fac is not None:
            fdeg[fac] -= 1
        for v in verts:
            remaining_v[v] += 1
        if fac is not None:
            remaining_f[fac] += 1

    rec(0)
    return sorted(out, key=lambda s: (len(s), sorted(s)))


@dataclass
class LoopSeriesReport:
    log_z_bethe: float
    terms: list                  # (edge subset, r(s)) in evaluation order
    term_sum: float
    partial_sums: list
    z_ratio_exact: float = math.nan   # Z / Z_B from the oracle, if known
    discrepancy: float = math.nan


def _subset_degrees(graph, subset):
    vdeg = [0] * graph.num_vertices
    fmembers = {a: [] for a in range(graph.num_factors)}
    for idx in subset:
        e = graph.directed_edges[idx]
        vdeg[e.vertex] += 1
        fmembers[e.factor].append(e.vertex)
    return vdeg, fmembers


def _beta_multi(model, beliefs, a, subset_vertices, means, sigmas):
    """beta^a_I = E_{b_a}[ prod_{i in I} (x_i - m_i)/sigma_i ], spins +-1."""
    if not subset_vertices:
        return 1.0
    members = model.graph.factors[a]
    b = beliefs.factor[a]
    spin = np.array([1.0, -1.0])
    t = b
    for pos, i in enumerate(members):
        if i in subset_vertices:
            w = (spin - means[i]) / sigmas[i]
        else:
            w = np.ones(2)
        shape = [1] * b.ndim
        shape[pos] = 2
        t = t * w.reshape(shape)
    return float(t.sum())


def loop_series_z(model, report, edge_cap=24):
    """Loop series of the partition function for a converged binary model."""
    if not report.converged:
        raise ValueError("loop series requires a converged fixed point")
    if any(q != 2 for q in model.cardinalities):
        raise ValueError("loop series applies to binary variables only")
    g = model.graph
    beliefs = report.beliefs
    means = [float(b[0] - b[1]) for b in beliefs.vertex]
    sigmas = [math.sqrt(max(1 - m * m, 0.0)) for m in means]
    if any(s == 0 for s in sigmas):
        raise ValueError("belief on the boundary; gamma undefined")
    gammas = [2 * m / s for m, s in zip(means, sigmas)]
    fvals = {}

    def f_at(n, i):
        key = (n, i)
        if key not in fvals:
            fvals[key] = float(f_poly(n)(gammas[i]))
        return fvals[key]

    subsets = enumerate_sub_coregraphs(g, edge_cap=edge_cap)
    terms = []
    for s in subsets:
        vdeg, fmembers = _subset_degrees(g, s)
        r = (-1) ** len(s)
        for a, verts in fmembers.items():
            r *= _beta_multi(model, beliefs, a, set(verts), means, sigmas)
            if r == 0.0:
                break
        else:
            for i in range(g.num_vertices):
                r *= f_at(vdeg[i], i)
        terms.append((s, float(r)))
    terms.sort(key=lambda t: -abs(t[1]))
    total = math.fsum(r for _, r in terms)
    partial, acc = [], 0.0
    for _, r in terms:
        acc += r
        partial.append(acc)
    return LoopSeriesReport(report.log_z_bethe, terms, total, partial)


def loop_series_marginal(model, report, vertex, edge_cap=24):
    """Marginal expansion: g_{d_v(s)}(gamma_v) at the distinguished vertex.

    Evaluates (Z/Z_B) * (p_v(+) - p_v(-)) / sqrt(b_v(+) b_v(-)) as the
    term sum; compare against the brute-force left side.
    """
    if not report.converged:
        raise ValueError("loop series requires a converged fixed point")
    g = model.graph
    beliefs = report.beliefs
    means = [float(b[0] - b[1]) for b in beliefs.vertex]
    sigmas = [math.sqrt(max(1 - m * m, 0.0)) for m in means]
    if any(s == 0 for s in sigmas):
        raise ValueError("belief on the boundary; gamma undefined")
    gammas = [2 * m / s for m, s in zip(means, sigmas)]
    subsets = enumerate_sub_coregraphs(g, edge_cap=edge_cap,
                                       exempt_vertex=vertex)
    terms = []
    for s in subsets:
        vdeg, fmembers = _subset_degrees(g, s)
        r = (-1) ** len(s)
        for a, verts in fmembers.items():
            r *= _beta_multi(model, beliefs, a, set(verts), means, sigmas)
            if r == 0.0:
                break
        else:
            for i in range(g.num_vertices):
                if i == vertex:
                    r *= float(g_poly(vdeg[i])(gammas[i]))
                else:
                    r *= float(f_poly(vdeg[i])(gammas[i]))
        terms.append((s, float(r)))
    terms.sort(key=lambda t: -abs(t[1]))
    total = math.fsum(r for _, r in terms)
    partial, acc = [], 0.0
    for _, r in terms:
        acc += r
        partial.append(acc)
    return LoopSeriesReport(report.log_z_bethe, terms, total, partial)


# -- perfect matchings -----------------------------------------------------------


@dataclass
class MatchingBetheSolution:
    edge_marginals: np.ndarray   # v_ij, one per edge
    multipliers: np.ndarray      # mu_i, one per vertex
    log_z_bethe: float
    residual: float              # worst violation of the quadratic equation
    iterations: int


def matching_bethe_solve(g, weights, tol=1e-12, max_iter=5000):
    """Stationary point of the perfect-matching Bethe free energy.

    Solves  v_ij (1 - v_ij) = w_ij exp(mu_i + mu_j),  sum_j v_ij = 1
    by sweeping the vertex multipliers mu_i: given the neighbors' mu,
    each row sum is monotone in mu_i on the v < 1/2 branch, so mu_i is
    found by bisection.  Z_B = prod (1-v) * prod (w / v(1-v))^v.
    """
    weights = np.asarray(weights, dtype=float)
    if (weights <= 0).any():
        raise ValueError("edge weights must be positive")
    if any(u == v for (u, v) in g.edges):
        raise ValueError("loops cannot participate in matchings")
    for v in range(g.num_vertices):
        if g.degree(v) < 2:
            raise ValueError("vertex %d has degree < 2; the v < 1/2 branch "
                             "cannot reach a unit row sum" % v)
    mu = np.full(g.num_vertices, -1.0)
    logw = np.log(weights)

    def v_of(k, s):
        # smaller root of v(1-v) = exp(s), clamped at the branch point
        disc = 1.0 - 4.0 * math.exp(s)
        if disc <= 0:
            return 0.5
        return (1.0 - math.sqrt(disc)) / 2.0

    def row_sum(i, mu_i):
        total = 0.0
        for k in g.incident_edges(i):
            u, w = g.edges[k]
            other = w if u == i else u
            total += v_of(k, logw[k] + mu_i + mu[other])
        return total

    iterations = 0
    for iterations in range(1, max_iter + 1):
        biggest = 0.0
        for i in range(g.num_vertices):
            # bracket: row_sum is increasing in mu_i
            lo, hi = mu[i] - 40.0, mu[i]
            while row_sum(i, hi) < 1.0:
                hi += 1.0
                if hi > 60:
                    raise RuntimeError("matching solver failed to bracket")
            while row_sum(i, lo) > 1.0:
                lo -= 10.0
            for _ in range(80):
                mid = (lo + hi) / 2
                if row_sum(i, mid) < 1.0:
                    lo = mid
                else:
                    hi = mid
            biggest = max(biggest, abs(mu[i] - hi))
            mu[i] = hi
        if biggest < 1e-14:
            break
    v = np.array([v_of(k, logw[k] + mu[g.edges[k][0]] + mu[g.edges[k][1]])
                  for k in range(g.num_edges)])
    residual = max(
        max(abs(v[k] * (1 - v[k])
                - weights[k] * math.exp(mu[g.edges[k][0]] + mu[g.edges[k][1]]))
            for k in range(g.num_edges)),
        max(abs(sum(v[k] for k in g.incident_edges(i)) - 1.0)
            for i in range(g.num_vertices)))
    log_zb = float(np.sum(np.log1p(-v))
                   + np.sum(v * (logw - np.log(v) - np.log1p(-v))))
    return MatchingBetheSolution(v, mu, log_zb, residual, iterations)


def matching_loop_series(g, weights, solution, mc_samples=0, seed=0):
    """Three-way check of the matching loop series.

    (a) term sum over sub-coregraphs of r(s) = prod (1 - d_i(s))
        prod_{e in s} v/(1-v);
    (b) ratio identity  Z(w)/Z_B = Z(v.*(1-v)) * prod (1-v)^{-1};
    (c) optional Monte-Carlo average E_x det(I - i V M) of the zeta-type
        determinant (returns mean and standard error).
    """
    from .exact import enumerate_perfect_matchings
    from .zeta import directed_edge_matrix
    v = solution.edge_marginals
    ratios = v / (1 - v)
    subsets = enumerate_sub_coregraphs(g)
    terms = []
    for s in subsets:
        vdeg = [0] * g.num_vertices
        r = 1.0
        for k in s:
            u, w = g.edges[k]
            vdeg[u] += 1
            vdeg[w] += 1
            r *= ratios[k]
        for i in range(g.num_vertices):
            r *= (1 - vdeg[i])
        terms.append((s, r))
    terms.sort(key=lambda t: -abs(t[1]))
    term_sum = math.fsum(r for _, r in terms)
    partial, acc = [], 0.0
    for _, r in terms:
        acc += r
        partial.append(acc)
    report = LoopSeriesReport(solution.log_z_bethe, terms, term_sum, partial)

    z_exact = enumerate_perfect_matchings(g, list(weights))
    z_tilted = enumerate_perfect_matchings(g, list(v * (1 - v)))
    ratio_identity = z_tilted * float(np.prod(1.0 / (1 - v)))
    report.z_ratio_exact = z_exact / math.exp(solution.log_z_bethe)
    report.discrepancy = abs(term_sum - report.z_ratio_exact) \
        / max(abs(report.z_ratio_exact), 1e-300)

    mc = None
    if mc_samples:
        rng = np.random.default_rng(seed)
        m = np.real(directed_edge_matrix(g))
        dim = m.shape[0]
        scale = np.empty(dim)
        for k in range(g.num_edges):
            scale[2 * k] = scale[2 * k + 1] = math.sqrt(ratios[k])
        signs = rng.choice([-1.0, 1.0], size=(mc_samples, g.num_edges))
        diag = np.repeat(signs, 2, axis=1) * scale
        mats = np.eye(dim) - 1j * diag[:, :, None] * m[None, :, :]
        dets = np.linalg.det(mats).real
        mc = (float(dets.mean()),
              float(dets.std(ddof=1) / math.sqrt(mc_samples)))
    return report, ratio_identity, mc
