"""Discrete graphical models and points of the local polytope.

``DiscreteModel`` carries one dense non-negative table per factor;
``BinaryPairwiseModel`` is the (J, h) spin parametrization on a multigraph
and converts losslessly to factor form.  ``BinaryPseudomarginals`` /
``MultinomialPseudomarginals`` are points of the local polytope L in the
two coordinate systems the analysis uses.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .graphs import FactorGraph, Graph, core, nullity, suppress_degree_two


class DiscreteModel:
    """Compatibility tables over finite state spaces on a FactorGraph."""

    def __init__(self, graph, cardinalities, potentials,
                 allow_zero_slices=False):
        if len(cardinalities) != graph.num_vertices:
            raise ValueError("one cardinality per vertex required")
        if any(q < 2 for q in cardinalities):
            raise ValueError("cardinalities must be >= 2")
        if len(potentials) != graph.num_factors:
            raise ValueError("one table per factor required")
        self.graph = graph
        self.cardinalities = list(cardinalities)
        self.potentials = []
        for a, table in enumerate(potentials):
            shape = tuple(cardinalities[i] for i in graph.factors[a])
            arr = np.asarray(table, dtype=float).reshape(shape)
            if (arr < 0).any():
                raise ValueError("negative potential entry in factor %d" % a)
            if arr.max() <= 0:
                raise ValueError("factor %d is identically zero" % a)
            if not allow_zero_slices and (arr == 0).any():
                raise ValueError(
                    "factor %d has zero entries; pass allow_zero_slices=True "
                    "for hard-constraint models" % a)
            self.potentials.append(arr)

    @property
    def state_space_size(self):
        return int(np.prod([float(q) for q in self.cardinalities]))

    def log_potentials(self):
        with np.errstate(divide="ignore"):
            return [np.log(p) for p in self.potentials]


class BinaryPairwiseModel:
    """Spin model exp(sum J_ij x_i x_j + sum h_i x_i), x_i in {-1, +1}.

    The graph may have parallel edges (each is its own factor) but no
    loops.  States are indexed 0 -> +1, 1 -> -1 in table form.
    """

    def __init__(self, graph, couplings, fields):
        if any(u == v for (u, v) in graph.edges):
            raise ValueError("loops carry no pairwise interaction")
        if len(couplings) != graph.num_edges:
            raise ValueError("one coupling per edge required")
        if len(fields) != graph.num_vertices:
            raise ValueError("one field per vertex required")
        self.graph = graph
        self.couplings = [float(j) for j in couplings]
        self.fields = [float(h) for h in fields]

    def to_discrete(self, fold="smallest-edge"):
        """Factor form; vertex potentials fold into one incident edge factor.

        With fold="split", exp(h_i x_i) spreads evenly over all incident
        factors instead (LBP outputs are invariant to the choice).
        """
        g = self.graph
        if any(g.degree(v) == 0 and self.fields[v] != 0.0
               for v in range(g.num_vertices)):
            raise ValueError("field on an isolated vertex cannot be folded")
        spins = np.array([1.0, -1.0])
        tables = []
        for k, (u, v) in enumerate(g.edges):
            logt = self.couplings[k] * np.outer(spins, spins)
            for pos, w in ((0, u), (1, v)):
                h = self._fold_share(k, w, fold)
                if h:
                    shape = [1, 1]
                    shape[pos] = 2
                    logt = logt + (h * spins).reshape(shape)
            tables.append(np.exp(logt))
        factors = [list(e) for e in g.edges]
        # isolated vertices with h = 0 keep a trivial singleton factor
        for v in range(g.num_vertices):
            if g.degree(v) == 0:
                factors.append([v])
                tables.append(np.ones(2))
        fg = FactorGraph(g.num_vertices, factors)
        return DiscreteModel(fg, [2] * g.num_vertices, tables)

    def _fold_share(self, k, v, fold):
        incident = sorted(self.graph.incident_edges(v))
        if fold == "split":
            return self.fields[v] / len(incident)
        if fold == "smallest-edge":
            return self.fields[v] if k == incident[0] else 0.0
        raise ValueError("unknown fold mode %r" % (fold,))

    def energy(self, x):
        """sum J x x + sum h x for a +-1 configuration."""
        out = sum(self.couplings[k] * x[u] * x[v]
                  for k, (u, v) in enumerate(self.graph.edges))
        out += sum(h * xi for h, xi in zip(self.fields, x))
        return out


def attractive(model):
    """True iff every coupling is non-negative."""
    return all(j >= 0 for j in model.couplings)


# -- pseudomarginals -----------------------------------------------------------


@dataclass
class BinaryPseudomarginals:
    """Point of L for a binary pairwise model: means m_i and pair moments chi_ij."""

    graph: Graph
    means: list = field(default_factory=list)
    pair_moments: list = field(default_factory=list)

    def __post_init__(self):
        self.means = [float(m) for m in self.means]
        self.pair_moments = [float(c) for c in self.pair_moments]
        if len(self.means) != self.graph.num_vertices:
            raise ValueError("one mean per vertex required")
        if len(self.pair_moments) != self.graph.num_edges:
            raise ValueError("one pair moment per edge required")
        for k, (u, v) in enumerate(self.graph.edges):
            for xu, xv in itertools.product((1, -1), repeat=2):
                val = 1 + self.means[u] * xu + self.means[v] * xv \
                    + self.pair_moments[k] * xu * xv
                if val <= 0:
                    raise ValueError(
                        "pseudomarginal outside the local polytope at edge %d" % k)

    def edge_belief(self, k):
        """2x2 table b_ij, states ordered (+1, -1)."""
        u, v = self.graph.edges[k]
        m_u, m_v, chi = self.means[u], self.means[v], self.pair_moments[k]
        spins = (1, -1)
        return np.array([[
            (1 + m_u * xu + m_v * xv + chi * xu * xv) / 4 for xv in spins]
            for xu in spins])

    def vertex_belief(self, i):
        return np.array([(1 + self.means[i]) / 2, (1 - self.means[i]) / 2])

    def as_vector(self):
        return np.array(self.means + self.pair_moments)

    @classmethod
    def from_vector(cls, graph, vec):
        n = graph.num_vertices
        return cls(graph, list(vec[:n]), list(vec[n:]))


@dataclass
class MultinomialPseudomarginals:
    """Point of L for a DiscreteModel: positive, normalized, locally consistent."""

    graph: FactorGraph
    factor_beliefs: list
    vertex_beliefs: list
    tol: float = 1e-8

    def __post_init__(self):
        g = self.graph
        self.factor_beliefs = [np.asarray(b, dtype=float)
                               for b in self.factor_beliefs]
        self.vertex_beliefs = [np.asarray(b, dtype=float)
                               for b in self.vertex_beliefs]
        for a, b in enumerate(self.factor_beliefs):
            if b.min() <= 0:
                raise ValueError("factor belief %d not strictly positive" % a)
            if abs(b.sum() - 1.0) > self.tol:
                raise ValueError("factor belief %d not normalized" % a)
            for pos, i in enumerate(g.factors[a]):
                axes = tuple(ax for ax in range(b.ndim) if ax != pos)
                marg = b.sum(axis=axes)
                if np.abs(marg - self.vertex_beliefs[i]).max() > self.tol:
                    raise ValueError(
                        "belief of factor %d inconsistent at vertex %d" % (a, i))

    @classmethod
    def from_joint(cls, graph, cardinalities, joint):
        """Marginals of a strictly positive joint table always lie in L."""
        joint = np.asarray(joint, dtype=float)
        joint = joint / joint.sum()
        # joint axes are vertex-ordered; permute each table to member order
        fb = []
        for members in graph.factors:
            axes = tuple(i for i in range(graph.num_vertices)
                         if i not in members)
            t = joint.sum(axis=axes)  # axes ordered by increasing vertex id
            sorted_members = sorted(members)
            perm = [sorted_members.index(i) for i in members]
            fb.append(np.transpose(t, axes=perm))
        vb = []
        for i in range(graph.num_vertices):
            axes = tuple(j for j in range(graph.num_vertices) if j != i)
            vb.append(joint.sum(axis=axes))
        return cls(graph, fb, vb)


def random_binary_pseudomarginals(graph, rng, margin=0.0):
    """Uniform interior point of L; margin > 0 keeps away from the boundary."""
    m = rng.uniform(-1 + margin, 1 - margin, size=graph.num_vertices)
    chi = []
    for (u, v) in graph.edges:
        lo = -1 + abs(m[u] + m[v])
        hi = 1 - abs(m[u] - m[v])
        pad = margin * (hi - lo) / 2
        chi.append(rng.uniform(lo + pad, hi - pad))
    return BinaryPseudomarginals(graph, list(m), chi)


def correlation_data(pm, graph=None):
    """Per-edge correlation coefficients beta and per-vertex scaled means gamma.

    beta_ij = (chi_ij - m_i m_j) / sqrt((1-m_i^2)(1-m_j^2)), in (-1, 1);
    gamma_i = 2 m_i / sqrt(1-m_i^2).
    """
    g = graph if graph is not None else pm.graph
    for i in range(g.num_vertices):
        if abs(pm.means[i]) >= 1:
            raise ValueError("boundary point: |m_%d| = 1" % i)
    betas = []
    for k, (u, v) in enumerate(g.edges):
        denom = math.sqrt((1 - pm.means[u] ** 2) * (1 - pm.means[v] ** 2))
        beta = (pm.pair_moments[k] - pm.means[u] * pm.means[v]) / denom
        if abs(beta) >= 1:
            raise ValueError("boundary point: |beta| = 1 at edge %d" % k)
        betas.append(beta)
    gammas = [2 * m / math.sqrt(1 - m * m) for m in pm.means]
    return betas, gammas


# -- gauge equivalence and the nullity-two classification ----------------------


def gauge_transform(model, signs):
    """x_i -> s_i x_i: J'_uv = J s_u s_v, h' = h s; Z is invariant."""
    g = model.graph
    new_j = [model.couplings[k] * signs[u] * signs[v]
             for k, (u, v) in enumerate(g.edges)]
    new_h = [model.fields[i] * signs[i] for i in range(g.num_vertices)]
    return BinaryPairwiseModel(g, new_j, new_h)


def is_equivalent_to_attractive(model):
    """Exhaustive gauge search on the core's coupling signs.

    Equivalent to checking that every independent cycle has a positive
    sign product, done per connected component via a BFS tree gauge.
    """
    g = model.graph
    sign = [None] * g.num_vertices
    for comp in g.components():
        root = comp[0]
        sign[root] = 1
        queue = [root]
        while queue:
            v = queue.pop()
            for k in g.incident_edges(v):
                u, w = g.edges[k]
                other = w if u == v else u
                if other == v:
                    continue
                s = 1 if model.couplings[k] >= 0 else -1
                if sign[other] is None:
                    sign[other] = sign[v] * s
                    queue.append(other)
    for k, (u, v) in enumerate(g.edges):
        val = model.couplings[k] * sign[u] * sign[v]
        if val < 0:
            return False
    return True


@dataclass
class Nullity2Classification:
    label: str                # "equivalent-to-attractive" or "case-1".."case-5"
    reduced_type: str         # "theta", "dumbbell", "figure-eight"
    cycle_signs: tuple        # canonical signs  on the reduced structure
    gauge_signs: list         # witness gauge on the original vertices


def frustrated_nullity2_class(model):
    """Classify a nullity-two binary pairwise model up to gauge equivalence.

    The core of the graph must be connected with nullity two; it then
    reduces (by smoothing degree-2 vertices) to one of the three
    homeomorphism types: theta (3 parallel edges), dumbbell (two loops
    plus a bridge), or figure-eight (B_2).  The frustrated classes are
    numbered as the thesis's catalogue: case 1 = frustrated theta;
    cases 2/3 = dumbbell with one/both cycles negative; cases 4/5 =
    figure-eight with one/both loops negative.
    """
    g = model.graph
    cg = core(g)
    if nullity(cg) != 2:
        raise ValueError("core nullity is %d, not 2" % nullity(cg))
    if not cg.is_connected() or cg.num_vertices == 0:
        raise ValueError("core must be a connected nullity-2 graph")

    # signs of the core's edges, in core edge order
    core_signs = _core_edge_signs(model)
    reduced, red_signs = suppress_degree_two(cg, core_signs)

    loops = sum(1 for (u, v) in reduced.edges if u == v)
    if reduced.num_vertices == 2 and loops == 0 and reduced.num_edges == 3:
        rtype = "theta"
        # cycle signs: products of edge-sign pairs; frustrated iff edges
        # do not all share one sign up to global flip
        s = tuple(red_signs)
        neg = min(s.count(-1), s.count(1))
        label = "equivalent-to-attractive" if neg == 0 else "case-1"
        cyc = tuple(sorted(s, reverse=True)) if s.count(-1) <= 1 else \
            tuple(sorted([-x for x in s], reverse=True))
    elif reduced.num_vertices == 2 and loops == 2:
        rtype = "dumbbell"
        loop_signs = [red_signs[k] for k, (u, v) in enumerate(reduced.edges)
                      if u == v]
        cyc = tuple(sorted(loop_signs, reverse=True))
        neg = cyc.count(-1)
        label = {0: "equivalent-to-attractive", 1: "case-2",
                 2: "case-3"}[neg]
    elif reduced.num_vertices == 1 and loops == 2:
        rtype = "figure-eight"
        cyc = tuple(sorted(red_signs, reverse=True))
        neg = cyc.count(-1)
        label = {0: "equivalent-to-attractive", 1: "case-4",
                 2: "case-5"}[neg]
    else:
        raise AssertionError("unexpected nullity-2 reduction %r" % (reduced,))

    return Nullity2Classification(label, rtype, cyc,
                                  _tree_gauge_signs(model))


def _core_edge_signs(model):
    """Signs of the couplings surviving into core(graph), in core edge order.

    Cycle-sign products are gauge invariant, so the raw signs suffice; the
    classifier only consumes gauge-invariant combinations of them.
    """
    g = model.graph
    cg = core(g)
    # map core edges back to original edges by multiset matching on a
    # relabeled copy: rebuild the core with bookkeeping instead
    alive = _surviving_edges(g)
    signs = []
    for k in alive:
        signs.append(1 if model.couplings[k] >= 0 else -1)
    assert len(signs) == cg.num_edges
    return signs


def _surviving_edges(g):
    deg = [g.degree(v) for v in range(g.num_vertices)]
    alive = set(range(g.num_edges))
    changed = True
    while changed:
        changed = False
        for k in list(alive):
            u, v = g.edges[k]
            if u == v:
                continue
            if deg[u] == 1 or deg[v] == 1:
                alive.remove(k)
                deg[u] -= 1
                deg[v] -= 1
                changed = True
    return sorted(alive)


def _tree_gauge_signs(model):
    """BFS tree gauge making every spanning-tree coupling non-negative."""
    g = model.graph
    sign = [1] * g.num_vertices
    seen = [False] * g.num_vertices
    for comp in g.components():
        root = comp[0]
        seen[root] = True
        queue = [root]
        while queue:
            v = queue.pop(0)
            for k in sorted(g.incident_edges(v)):
                u, w = g.edges[k]
                other = w if u == v else u
                if other == v or seen[other]:
                    continue
                seen[other] = True
                s = 1 if model.couplings[k] >= 0 else -1
                sign[other] = sign[v] * s
                queue.append(other)
    return sign
