"""The loop-series graph polynomials Theta, theta and omega.

    Theta_G(beta, gamma) = sum_{s subset E} prod_{e in s} beta_e
                           prod_i f_{d_i(s)}(gamma_i)

theta is the two-variable specialization, omega(beta) =
theta(beta, 2i) / (1-beta)^{|E|-|V|} with integer coefficients.  Both
satisfy deletion-contraction (theta with coefficients (1-beta), beta;
omega with 1, beta) and are multiplicative over disjoint unions, i.e.
they are Tutte V-functions; theta at gamma=0 is a Tutte-polynomial
specialization, but no field embedding identifies the two V-functions
themselves (recorded here, not tested).

Every polynomial has two independent evaluators (direct subgraph
enumeration and memoized deletion-contraction); the test suite holds
them against each other and against the monomer-dimer, determinant-sum,
matching-polynomial and root-location identities.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from .exact import enumerate_matchings
from .graphs import (Graph, bouquet_graph, contract_edge, core, delete_edge,
                     nullity, subdivide)
from .loopseries import enumerate_sub_coregraphs, f_poly
from .polynomial import Poly, Poly2


# -- direct enumeration ----------------------------------------------------------


def theta_multivariate(g, edge_weights, vertex_weights, edge_cap=24):
    """Theta_G by direct enumeration over all edge subsets.

    Weights may be numbers or Fractions; vertex weights enter through
    f_{d_i(s)}.  Subsets with a degree-one vertex contribute zero, so
    only sub-coregraphs are visited.
    """
    if g.num_edges > edge_cap:
        raise ValueError("edge count exceeds enumeration cap")
    fcache = {}

    def f_at(n, gamma):
        if (n, gamma) not in fcache:
            fcache[(n, gamma)] = f_poly(n)(gamma)
        return fcache[(n, gamma)]

    total = 0
    for s in enumerate_sub_coregraphs(g, edge_cap=edge_cap):
        term = 1
        deg = [0] * g.num_vertices
        for k in s:
            u, v = g.edges[k]
            deg[u] += 1
            deg[v] += 1
            term = term * edge_weights[k]
        for i in range(g.num_vertices):
            term = term * f_at(deg[i], vertex_weights[i])
        total = total + term
    return total


def theta_bivariate_direct(g, edge_cap=24):
    """theta_G(beta, gamma) as an exact Poly2, by subgraph enumeration."""
    if g.num_edges > edge_cap:
        raise ValueError("edge count exceeds enumeration cap")
    total = Poly2()
    for s in enumerate_sub_coregraphs(g, edge_cap=edge_cap):
        deg = [0] * g.num_vertices
        for k in s:
            u, v = g.edges[k]
            deg[u] += 1
            deg[v] += 1
        term = Poly2({(len(s), 0): 1})
        for i in range(g.num_vertices):
            term = term * Poly2.from_poly_in_y(f_poly(deg[i]))
        total = total + term
    return total


# -- canonical multigraph keys for memoized deletion-contraction ------------------


def _canonical_key(g, perm_budget=50_000):
    """Isomorphism-invariant key: minimal edge multiset over relabelings.

    Permutations are restricted to degree classes (a degree-refined
    brute-force canonical form); if the class product exceeds the
    budget, fall back to an order-dependent key, costing only memo hits.
    """
    n = g.num_vertices
    degs = [g.degree(v) for v in range(n)]
    classes = {}
    for v in range(n):
        classes.setdefault(degs[v], []).append(v)
    total = 1
    for vs in classes.values():
        total *= math.factorial(len(vs))
    if total > perm_budget:
        return ("raw", n, tuple(degs),
                tuple(sorted(tuple(sorted(e)) for e in g.edges)))
    groups = sorted(classes.items())
    best = None
    for placing in itertools.product(
            *[itertools.permutations(vs) for _, vs in groups]):
        perm = [0] * n
        pos = 0
        for arrangement in placing:
            for v in arrangement:
                perm[v] = pos
                pos += 1
        key = tuple(sorted(tuple(sorted((perm[u], perm[v])))
                           for (u, v) in g.edges))
        if best is None or key < best:
            best = key
    return ("canon", n, tuple(sorted(degs)), best)


def _bouquet_counts(g):
    """None unless every edge is a loop; else loop count per vertex."""
    counts = [0] * g.num_vertices
    for (u, v) in g.edges:
        if u != v:
            return None
        counts[u] += 1
    return counts


def theta_bouquet(n):
    """theta_{B_n} = sum_k C(n, k) f_{2k}(gamma) beta^k."""
    total = Poly2()
    for k in range(n + 1):
        total = total + math.comb(n, k) * Poly2.from_poly_in_y(
            f_poly(2 * k), x_power=k)
    return total


def theta_bivariate_dc(g, _memo=None):
    """theta_G by deletion-contraction, terminal at bouquets.

    theta_G = (1-beta) theta_{G\\e} + beta theta_{G/e} for non-loop e.
    """
    memo = _memo if _memo is not None else {}
    counts = _bouquet_counts(g)
    if counts is not None:
        total = Poly2.constant(1)
        for c in counts:
            total = total * theta_bouquet(c)
        return total
    key = _canonical_key(g)
    if key in memo:
        return memo[key]
    k = next(j for j, (u, v) in enumerate(g.edges) if u != v)
    one_minus_beta = Poly2({(0, 0): 1, (1, 0): -1})
    beta = Poly2.x()
    out = one_minus_beta * theta_bivariate_dc(delete_edge(g, k), memo) \
        + beta * theta_bivariate_dc(contract_edge(g, k), memo)
    memo[key] = out
    return out


def theta_bivariate(g, method="auto", edge_cap=24):
    if method == "direct":
        return theta_bivariate_direct(g, edge_cap)
    if method == "dc":
        return theta_bivariate_dc(g)
    return theta_bivariate_dc(g) if g.num_edges > edge_cap \
        else theta_bivariate_direct(g, edge_cap)


def omega_dc(g, _memo=None):
    """omega_G by deletion-contraction: omega = omega_{G\\e} + beta omega_{G/e}.

    Terminal graphs are disjoint unions of bouquets, where
    omega_{B_n} = 1 + (2n-1) beta.
    """
    memo = _memo if _memo is not None else {}
    counts = _bouquet_counts(g)
    if counts is not None:
        total = Poly([1])
        for c in counts:
            total = total * Poly([1, 2 * c - 1])
        return total
    key = _canonical_key(g)
    if key in memo:
        return memo[key]
    k = next(j for j, (u, v) in enumerate(g.edges) if u != v)
    out = omega_dc(delete_edge(g, k), memo) \
        + Poly.x() * omega_dc(contract_edge(g, k), memo)
    memo[key] = out
    return out


def omega_via_theta(g, edge_cap=24):
    """Cross-check route: theta(beta, 2i) / (1-beta)^{|E|-|V|}.

    theta has only even powers of gamma, so gamma^2 -> -4 stays integer;
    for |E| < |V| the division becomes a multiplication.
    """
    th = theta_bivariate(g, edge_cap=edge_cap)
    p = th.substitute_y_squared(-4)
    exponent = g.num_edges - g.num_vertices
    if exponent >= 0:
        return p.divide_exact(Poly([1, -1]) ** exponent)
    return p * Poly([1, -1]) ** (-exponent)


def omega(g, method="dc"):
    if method == "dc":
        return omega_dc(g)
    if method == "theta":
        return omega_via_theta(g)
    raise ValueError("method must be 'dc' or 'theta'")


# -- Tutte polynomial oracle -------------------------------------------------------


def tutte_polynomial(g, _memo=None):
    """T_G(x, y) by its own deletion-contraction (bridge/loop rules)."""
    memo = _memo if _memo is not None else {}
    if g.num_edges == 0:
        return Poly2.constant(1)
    key = _canonical_key(g)
    if key in memo:
        return memo[key]
    x, y = Poly2.x(), Poly2.y()
    k, kind = None, None
    for j, (u, v) in enumerate(g.edges):
        if u == v:
            if kind is None:
                k, kind = j, "loop"
        elif _is_bridge(g, j):
            if kind != "regular":
                k, kind = j, "bridge"
        else:
            k, kind = j, "regular"
            break
    if kind == "loop":
        out = y * tutte_polynomial(delete_edge(g, k), memo)
    elif kind == "bridge":
        out = x * tutte_polynomial(contract_edge(g, k), memo)
    else:
        out = tutte_polynomial(delete_edge(g, k), memo) \
            + tutte_polynomial(contract_edge(g, k), memo)
    memo[key] = out
    return out


def _is_bridge(g, k):
    return len(delete_edge(g, k).components()) > len(g.components())


def theta_gamma0_tutte_check(g, beta_values):
    """theta(beta, 0) vs (1-b)^n b^r T(1/b, (1+b)/(1-b)) at rational points.

    Returns the worst absolute difference as an exact Fraction (0 when
    the identity holds); beta in {0, 1} is rejected.
    """
    th = theta_bivariate(g)
    tutte = tutte_polynomial(g)
    n, r = nullity(g), g.num_vertices - len(g.components())
    worst = Fraction(0)
    for b in beta_values:
        b = Fraction(b)
        if b in (Fraction(0), Fraction(1)):
            raise ValueError("beta in {0, 1} is outside the transform's domain")
        lhs = th(b, Fraction(0))
        rhs = (1 - b) ** n * b ** r * tutte(1 / b, (1 + b) / (1 - b))
        worst = max(worst, abs(lhs - rhs))
    return worst


# -- counting sub-coregraphs --------------------------------------------------------


def count_sub_coregraphs(g, edge_cap=24):
    return len(enumerate_sub_coregraphs(g, edge_cap=edge_cap))


def sub_coregraph_count_bounds(g):
    """(lower, upper) from theta: 2^n and the golden-ratio-flavored bound."""
    if not g.is_connected():
        raise ValueError("bounds stated for connected graphs")
    n = nullity(g)
    lower = 2 ** n
    upper = ((5 - math.sqrt(5)) / 2) ** (n - 1) \
        + ((5 + math.sqrt(5)) / 2) ** (n - 1)
    return lower, upper


def c_nl_coefficients(g):
    """C_{n,l} table: theta(1, gamma) = sum_l C_{n,l} gamma^{2l}.

    Valid when core(G) is a subdivision of a graph with max degree <= 3;
    C_{n,l} then counts sub-coregraphs with exactly 2l degree-3 vertices.
    """
    cg = core(g)
    if cg.num_vertices and max(cg.degree(v)
                               for v in range(cg.num_vertices)) > 3:
        raise ValueError("core has a vertex of degree > 3")
    n = nullity(g)
    out = {0: 2 ** n}
    for ell in range(1, n):
        out[ell] = sum(math.comb(n, k) * math.comb(k + ell - 1, 2 * ell)
                       for k in range(ell + 1, n + 1))
    return out


def degree3_census(g, edge_cap=24):
    """Sub-coregraph counts keyed by their number of degree-3 vertices / 2."""
    census = {}
    for s in enumerate_sub_coregraphs(g, edge_cap=edge_cap):
        deg = [0] * g.num_vertices
        for k in s:
            u, v = g.edges[k]
            deg[u] += 1
            deg[v] += 1
        three = sum(1 for d in deg if d == 3)
        if three % 2:
            raise AssertionError("odd number of degree-3 vertices")
        census[three // 2] = census.get(three // 2, 0) + 1
    return census


# -- monomer-dimer, matching polynomial, determinant sum ----------------------------


def monomer_dimer_partition(g, edge_weight, vertex_weights):
    """Xi_G(mu, lambda): sum over matchings of prod mu prod uncovered lambda."""
    total = 0
    for matching in enumerate_matchings(g):
        covered = set()
        term = 1
        for k in matching:
            u, v = g.edges[k]
            covered.update((u, v))
            term = term * edge_weight
        for i in range(g.num_vertices):
            if i not in covered:
                term = term * vertex_weights[i]
        total = total + term
    return total


def omega_monomer_dimer_check(g, beta_values):
    """omega(beta) = Xi_G(-beta, 1 + (d_i - 1) beta) exactly at sample points."""
    om = omega(g)
    worst = Fraction(0)
    for b in beta_values:
        b = Fraction(b)
        lam = [1 + (g.degree(i) - 1) * b for i in range(g.num_vertices)]
        worst = max(worst, abs(om(b) - monomer_dimer_partition(g, -b, lam)))
    return worst


def matching_polynomial(g):
    """alpha_G(x) = sum_k (-1)^k p_k x^{|V| - 2k} by matching enumeration."""
    counts = {}
    for matching in enumerate_matchings(g):
        counts[len(matching)] = counts.get(len(matching), 0) + 1
    coeffs = [0] * (g.num_vertices + 1)
    for k, p_k in counts.items():
        coeffs[g.num_vertices - 2 * k] += (-1) ** k * p_k
    return Poly(coeffs)


def omega_regular_matching_check(g, u_values):
    """For a (q+1)-regular graph: omega(u^2) = alpha_G(1/u + q u) u^{|V|}."""
    degs = {g.degree(v) for v in range(g.num_vertices)}
    if len(degs) != 1:
        raise ValueError("graph is not regular")
    q = degs.pop() - 1
    om = omega(g)
    alpha = matching_polynomial(g)
    worst = Fraction(0)
    for u in u_values:
        u = Fraction(u)
        if u == 0:
            raise ValueError("u = 0 is singular in the transform")
        worst = max(worst,
                    abs(om(u * u) - alpha(1 / u + q * u) * u ** g.num_vertices))
    return worst


def _disjoint_cycle_unions(g):
    """Edge subsets whose spanning subgraph has all degrees 0 or 2."""
    out = []
    for r in range(g.num_edges + 1):
        for combo in itertools.combinations(range(g.num_edges), r):
            deg = [0] * g.num_vertices
            for k in combo:
                u, v = g.edges[k]
                deg[u] += 1
                deg[v] += 1
            if all(d in (0, 2) for d in deg):
                out.append(combo)
    return out


def omega_determinant_sum_check(g, u_values):
    """omega(u^2) as a sum of Ihara-Bass-matrix minors over cycle unions:

        omega(u^2) = sum_C 2^{k(C)} det([I - uA + u^2(D-I)]|_{G-C}) u^{|C|}

    with A, D of the full graph and the minor on the vertices missed by
    C.  Exact at rational u.
    """
    om = omega(g)
    n = g.num_vertices
    cycle_unions = _disjoint_cycle_unions(g)
    worst = Fraction(0)
    for u in u_values:
        u = Fraction(u)
        base = [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            base[i][i] = 1 + u * u * (g.degree(i) - 1)
        for (p, q) in g.edges:
            if p == q:
                base[p][p] -= 2 * u  # loop: A_pp = 2 (D already via degree)
            else:
                base[p][q] -= u
                base[q][p] -= u
        total = Fraction(0)
        for combo in cycle_unions:
            covered = set()
            for k in combo:
                covered.update(g.edges[k])
            keep = [i for i in range(n) if i not in covered]
            sub = [[base[i][j] for j in keep] for i in keep]
            comp = _count_components(g, combo)
            total += 2 ** comp * _fraction_det(sub) * u ** len(combo)
        worst = max(worst, abs(om(u * u) - total))
    return worst


def _count_components(g, edge_subset):
    if not edge_subset:
        return 0
    verts = set()
    for k in edge_subset:
        verts.update(g.edges[k])
    parent = {v: v for v in verts}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for k in edge_subset:
        u, v = g.edges[k]
        parent[find(u)] = find(v)
    return len({find(v) for v in verts})


def _fraction_det(rows):
    from .graphs import _fraction_det as det
    return det(rows) if rows else Fraction(1)


def omega_root_annulus(g, tol=1e-8):
    """Roots of omega against 1/(d_M - 1) <= |beta| <= 1/(d_m - 1) on the core.

    Returns (roots, annulus, all_inside).  Raises for forests (omega is
    1 - beta per tree component; no constraint is claimed).
    """
    cg = core(g)
    if cg.num_vertices == 0:
        raise ValueError("forest: no annulus is claimed")
    degs = [cg.degree(v) for v in range(cg.num_vertices)]
    d_m, d_max = min(degs), max(degs)
    if d_m < 2:
        raise ValueError("core has a degree-1 vertex")
    om = omega(g)
    coeffs = [float(c) for c in om.coeffs]
    roots = np.roots(coeffs[::-1]) if len(coeffs) > 1 else np.zeros(0)
    lo, hi = 1.0 / (d_max - 1), (math.inf if d_m == 1 else 1.0 / (d_m - 1))
    ok = all(lo - tol <= abs(r) <= hi + tol for r in roots)
    return roots, (lo, hi), ok


def omega_at_one_counting(g, edge_cap=24):
    """omega(1) vs the census of matchings of G^(2) covering the original
    vertices; returns (value, census count)."""
    om = omega(g)
    value = om(1)
    g2 = subdivide(g, 2)
    if g2.num_edges > edge_cap:
        raise ValueError("subdivided graph exceeds enumeration cap")
    original = set(range(g.num_vertices))
    count = 0
    for matching in enumerate_matchings(g2):
        covered = set()
        for k in matching:
            covered.update(g2.edges[k])
        if original <= covered:
            count += 1
    return value, count
