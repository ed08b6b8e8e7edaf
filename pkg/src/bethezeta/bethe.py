"""Executable checks on the Bethe free energy: Hessians, the Bethe-zeta
identity, positive-definiteness certificates, fixed-point stability, the
index-sum audit, and uniqueness certificates.

The load-bearing identity, valid at every interior point of the local
polytope (not just fixed points), is

    zeta(u)^{-1} = det(grad^2 F) * prod_a det Var_{b_a}(phi_a)
                                 * prod_i det Var_{b_i}(phi_i)^{1-d_i}

with edge weights u^a_{i->j} = Var_{b_j}(phi_j)^{-1} Cov_{b_a}(phi_j, phi_i).
For binary pairwise models everything is written in the {m_i, chi_ij}
coordinates with spin statistics (x_i x_j, x_i, x_j); the Hessian never
depends on (J, h).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .graphs import Graph, core, nullity
from .lbp import (MessageSet, beliefs_from_messages, lbp_linearization,
                  run_lbp)
from .models import (BinaryPseudomarginals, MultinomialPseudomarginals,
                     correlation_data, frustrated_nullity2_class)
from .zeta import (EdgeWeightAssignment, GraphEdgeWeights,
                   directed_edge_matrix, spectral_radius,
                   zeta_first_determinant)

_SPINS = (1, -1)


# -- binary pairwise free energy in (m, chi) coordinates -----------------------


def bethe_free_energy_binary(model, pm):
    """F({m, chi}) for a binary pairwise model; -log Z_B at fixed points."""
    g = model.graph

    def ent(x):
        return x * math.log(x)

    out = 0.0
    for k in range(g.num_edges):
        out -= model.couplings[k] * pm.pair_moments[k]
    for i in range(g.num_vertices):
        out -= model.fields[i] * pm.means[i]
    for k in range(g.num_edges):
        b = pm.edge_belief(k)
        out += sum(ent(b[s, t]) for s in range(2) for t in range(2))
    for i in range(g.num_vertices):
        b = pm.vertex_belief(i)
        out += (1 - g.degree(i)) * (ent(b[0]) + ent(b[1]))
    return out


def bethe_gradient_binary(model, pm):
    """Closed-form gradient of F in (m, chi); zero exactly at fixed points."""
    g = model.graph
    grad_m = np.zeros(g.num_vertices)
    grad_c = np.zeros(g.num_edges)
    logv = [np.log(pm.vertex_belief(i)) for i in range(g.num_vertices)]
    for i in range(g.num_vertices):
        grad_m[i] = -model.fields[i] + (1 - g.degree(i)) * 0.5 \
            * (logv[i][0] - logv[i][1])
    for k, (u, v) in enumerate(g.edges):
        b = np.log(pm.edge_belief(k))
        s = np.array([1.0, -1.0])
        grad_c[k] = -model.couplings[k] + 0.25 * float(np.einsum(
            "s,t,st->", s, s, b))
        grad_m[u] += 0.25 * float(np.einsum("s,st->", s, b))
        grad_m[v] += 0.25 * float(np.einsum("t,st->", s, b))
    return np.concatenate([grad_m, grad_c])


@dataclass
class HessianReport:
    matrix: np.ndarray
    determinant: float
    min_eigenvalue: float
    max_eigenvalue: float
    positive_definite: bool


def bethe_hessian(graph_or_model, pm):
    """Analytic Hessian of F at a point of L, in {m_i, chi_ij} coordinates.

    Accepts the Graph directly (the Hessian does not depend on the
    model's couplings or fields) or anything with a ``.graph``.
    """
    g = graph_or_model if isinstance(graph_or_model, Graph) \
        else graph_or_model.graph
    n, ne = g.num_vertices, g.num_edges
    h = np.zeros((n + ne, n + ne))
    for i in range(n):
        bi = pm.vertex_belief(i)
        h[i, i] += (1 - g.degree(i)) * 0.25 * float((1.0 / bi).sum())
    s = np.array([1.0, -1.0])
    for k, (u, v) in enumerate(g.edges):
        inv_b = 1.0 / pm.edge_belief(k)
        h[u, u] += float(inv_b.sum()) / 16
        h[v, v] += float(inv_b.sum()) / 16
        huv = float(np.einsum("s,t,st->", s, s, inv_b)) / 16
        h[u, v] += huv
        h[v, u] += huv
        hc = n + k
        h[hc, hc] = float(inv_b.sum()) / 16
        hum = float(np.einsum("t,st->", s, inv_b)) / 16
        hvm = float(np.einsum("s,st->", s, inv_b)) / 16
        h[u, hc] += hum
        h[hc, u] += hum
        h[v, hc] += hvm
        h[hc, v] += hvm
    eig = np.linalg.eigvalsh(h)
    return HessianReport(h, float(np.linalg.det(h)), float(eig.min()),
                         float(eig.max()), bool(eig.min() > 0))


# -- edge weights from pseudomarginals ------------------------------------------


def edge_weights_from_binary(pm):
    """u per directed edge: Cov(x_t, x_o) / Var(x_t) from the beliefs."""
    g = pm.graph
    vals = []
    for k, (u, v) in enumerate(g.edges):
        cov = pm.pair_moments[k] - pm.means[u] * pm.means[v]
        vals.append(cov / (1 - pm.means[v] ** 2))  # into v
        vals.append(cov / (1 - pm.means[u] ** 2))  # into u
    return GraphEdgeWeights.scalar(g, vals)


def correlation_weights_from_binary(pm):
    """Symmetric correlation coefficients beta per directed edge."""
    betas, _ = correlation_data(pm)
    return GraphEdgeWeights.per_undirected_edge(pm.graph, betas)


def _indicator_stats(q):
    return np.eye(q)[:, :-1]


def _interaction_basis(members, cards):
    """Tensor-product sufficient statistics of a multinomial factor family.

    Columns: all products over member subsets of size >= 2, then the
    per-member indicator blocks; spans every function on the factor's
    state space together with the constant.
    """
    shape = tuple(cards[i] for i in members)
    states = list(itertools.product(*[range(cards[i]) for i in members]))
    cols = []
    layout = {"interaction": [], "vertex": {}}
    for size in range(2, len(members) + 1):
        for positions in itertools.combinations(range(len(members)), size):
            choices = [range(cards[members[p]] - 1) for p in positions]
            for combo in itertools.product(*choices):
                col = np.array([
                    1.0 if all(st[p] == c for p, c in zip(positions, combo))
                    else 0.0 for st in states])
                layout["interaction"].append(len(cols))
                cols.append(col)
    for pos, i in enumerate(members):
        idxs = []
        for k in range(cards[i] - 1):
            col = np.array([1.0 if st[pos] == k else 0.0 for st in states])
            idxs.append(len(cols))
            cols.append(col)
        layout["vertex"][i] = idxs
    return np.array(cols).T, layout, shape


def multinomial_factor_covariances(graph, cards, pm):
    """Per-factor covariance of the full tensor-basis statistics."""
    out = []
    for a, members in enumerate(graph.factors):
        basis, layout, shape = _interaction_basis(members, cards)
        p = np.asarray(pm.factor_beliefs[a]).reshape(-1)
        mean = basis.T @ p
        sec = basis.T @ (basis * p[:, None])
        out.append((sec - np.outer(mean, mean), layout))
    return out


def edge_weights_from_multinomial(graph, cards, pm):
    """u^a_{i->j} = Var_{b_j}(phi_j)^{-1} Cov_{b_a}(phi_j, phi_i)."""
    dims = [q - 1 for q in cards]
    weights = {}
    for a, members in enumerate(graph.factors):
        bf = np.asarray(pm.factor_beliefs[a])
        for pi, i in enumerate(members):
            for pj, j in enumerate(members):
                if i == j:
                    continue
                other = tuple(p for p in range(len(members))
                              if p not in (pi, pj))
                pij = bf.sum(axis=other) if other else bf
                if pi > pj:
                    pij = pij.T
                si, sj = _indicator_stats(cards[i]), _indicator_stats(cards[j])
                mean_i = si.T @ pij.sum(axis=1)
                mean_j = sj.T @ pij.sum(axis=0)
                cov_ji = np.einsum("xy,yb,xa->ba", pij, sj, si) \
                    - np.outer(mean_j, mean_i)
                bj = pm.vertex_beliefs[j]
                var_j = np.einsum("x,xa,xb->ab", bj, sj, sj) \
                    - np.outer(sj.T @ bj, sj.T @ bj)
                weights[(a, i, j)] = np.linalg.solve(var_j, cov_ji)
    return EdgeWeightAssignment(graph, dims, weights)


def bethe_hessian_multinomial(graph, cards, pm):
    """Hessian of F in the eta coordinates {eta_a(interaction), eta_i}."""
    covs = multinomial_factor_covariances(graph, cards, pm)
    pa_sizes = [len(layout["interaction"]) for _, layout in covs]
    pa_offs = np.concatenate([[0], np.cumsum(pa_sizes)]).astype(int)
    v_sizes = [q - 1 for q in cards]
    v_offs = (pa_offs[-1]
              + np.concatenate([[0], np.cumsum(v_sizes)])).astype(int)
    dim = int(v_offs[-1])
    h = np.zeros((dim, dim))
    for i in range(graph.num_vertices):
        b = pm.vertex_beliefs[i]
        s = _indicator_stats(cards[i])
        var = np.einsum("x,xa,xb->ab", b, s, s) - np.outer(s.T @ b, s.T @ b)
        sl = slice(v_offs[i], v_offs[i + 1])
        h[sl, sl] += (1 - graph.vertex_degree(i)) * np.linalg.inv(var)
    for a, members in enumerate(graph.factors):
        var, layout = covs[a]
        prec = np.linalg.inv(var)
        idx = list(layout["interaction"]) \
            + [k for i in members for k in layout["vertex"][i]]
        slices = [slice(pa_offs[a], pa_offs[a + 1])] \
            + [slice(v_offs[i], v_offs[i + 1]) for i in members]
        bounds = np.concatenate(
            [[0], np.cumsum([pa_sizes[a]] + [cards[i] - 1 for i in members])])
        reordered = prec[np.ix_(idx, idx)]
        for bi, sl_i in enumerate(slices):
            for bj, sl_j in enumerate(slices):
                h[sl_i, sl_j] += reordered[bounds[bi]:bounds[bi + 1],
                                           bounds[bj]:bounds[bj + 1]]
    return h


@dataclass
class BetheZetaReport:
    zeta_inverse: float
    hessian_side: float
    residual: float
    condition_estimate: float
    ill_conditioned: bool


def verify_bethe_zeta(graph_or_model, pm, cards=None, ill_threshold=1e12):
    """Evaluate both sides of the Bethe-zeta identity at a point of L.

    Binary pairwise path: pm is BinaryPseudomarginals on a Graph, spin
    statistics.  Multinomial path: pm is MultinomialPseudomarginals,
    indicator statistics.  Returns relative residual between
    det(I - M(u)) and det(grad^2 F) * variance determinant products.
    """
    if isinstance(pm, BinaryPseudomarginals):
        return _verify_bethe_zeta_binary(pm)
    graph = graph_or_model.graph if hasattr(graph_or_model, "graph") \
        else graph_or_model
    return _verify_bethe_zeta_multinomial(graph, cards, pm, ill_threshold)


def _verify_bethe_zeta_binary(pm, ill_threshold=1e12):
    g = pm.graph
    u = edge_weights_from_binary(pm)
    lhs = float(np.real(zeta_first_determinant(g, u)))
    hrep = bethe_hessian(g, pm)
    rhs = hrep.determinant
    cond = abs(hrep.max_eigenvalue / hrep.min_eigenvalue) \
        if hrep.min_eigenvalue != 0 else math.inf
    for k in range(g.num_edges):
        b = pm.edge_belief(k)
        spins = np.array([1.0, -1.0])
        stats = np.array([
            [su * sv, su, sv] for su in spins for sv in spins])
        p = b.reshape(-1)
        mean = stats.T @ p
        var = stats.T @ (stats * p[:, None]) - np.outer(mean, mean)
        rhs *= float(np.linalg.det(var))
    for i in range(g.num_vertices):
        rhs *= (1 - pm.means[i] ** 2) ** (1 - g.degree(i))
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return BetheZetaReport(lhs, rhs, abs(lhs - rhs) / scale, cond,
                           cond > ill_threshold)


def _verify_bethe_zeta_multinomial(graph, cards, pm, ill_threshold):
    u = edge_weights_from_multinomial(graph, cards, pm)
    lhs = float(np.real(zeta_first_determinant(graph, u)))
    h = bethe_hessian_multinomial(graph, cards, pm)
    rhs = float(np.linalg.det(h))
    eig = np.linalg.eigvalsh(h)
    cond = abs(eig).max() / abs(eig).min() if abs(eig).min() > 0 else math.inf
    for (var, _layout) in multinomial_factor_covariances(graph, cards, pm):
        rhs *= float(np.linalg.det(var))
    for i in range(graph.num_vertices):
        b = pm.vertex_beliefs[i]
        s = _indicator_stats(cards[i])
        var = np.einsum("x,xa,xb->ab", b, s, s) - np.outer(s.T @ b, s.T @ b)
        rhs *= float(np.linalg.det(var)) ** (1 - graph.vertex_degree(i))
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return BetheZetaReport(lhs, rhs, abs(lhs - rhs) / scale, cond,
                           cond > ill_threshold)


# -- positive definiteness region -----------------------------------------------


@dataclass
class PdCertificate:
    holds: bool
    max_correlation_norm: float
    relation_spectral_radius: float
    spectrum_condition: bool  # spec(M(u)) avoids the real ray >= 1


def pd_region_certificate(pm):
    """Sufficient condition for a PD Hessian: max ||corr||_2 < 1 / rho(M(1)).

    One-directional; also reports whether spec(M(u)) misses the real ray
    [1, inf), which is the sharper sufficient condition.
    """
    g = pm.graph
    betas, _ = correlation_data(pm)
    kappa = max((abs(b) for b in betas), default=0.0)
    rho = spectral_radius(np.real(directed_edge_matrix(g)))
    holds = kappa * rho < 1
    m_u = np.real(directed_edge_matrix(g, edge_weights_from_binary(pm)))
    eigs = np.linalg.eigvals(m_u) if m_u.size else np.zeros(0)
    spectrum_ok = not any(abs(ev.imag) < 1e-12 and ev.real >= 1 - 1e-12
                          for ev in eigs)
    return PdCertificate(holds, kappa, rho, spectrum_ok)


# -- stability -------------------------------------------------------------------


@dataclass
class StabilityReport:
    classification: str  # stable | damped-stable | unstable | marginal
    spectral_radius: float
    max_real_part: float
    spectrum: np.ndarray


def stability_classify(model, report, tol=1e-6, marginal_eps=1e-8):
    """Classify a converged fixed point from spec(T')."""
    if not report.converged or report.residual >= tol:
        raise ValueError("not at a fixed point (residual %.3g)"
                         % report.residual)
    t_prime = lbp_linearization(model, report.beliefs)
    eigs = np.linalg.eigvals(t_prime) if t_prime.size else np.zeros(0)
    rho = float(np.abs(eigs).max()) if eigs.size else 0.0
    max_re = float(eigs.real.max()) if eigs.size else 0.0
    if eigs.size and np.abs(np.abs(eigs) - 1.0).min() < marginal_eps:
        cls = "marginal"
    elif rho < 1:
        cls = "stable"
    elif max_re < 1:
        cls = "damped-stable"
    else:
        cls = "unstable"
    return StabilityReport(cls, rho, max_re, eigs)


def empirical_stability(model, report, rng, trials=20, perturbation=1e-3,
                        tol=1e-9, max_iter=2000):
    """Perturb-and-reconverge probe: does LBP return to the fixed point?"""
    base = report.messages
    for _ in range(trials):
        tables = []
        for t in base.tables:
            noisy = t * np.exp(rng.uniform(-perturbation, perturbation,
                                           size=t.shape))
            tables.append(noisy / noisy.sum())
        rerun = run_lbp(model, init=MessageSet(model, tables), tol=tol,
                        max_iter=max_iter)
        if not rerun.converged:
            return False
        dist = max(float(np.abs(a - b).max()) for a, b in
                   zip(rerun.beliefs.vertex, report.beliefs.vertex))
        if dist > 100 * perturbation:
            return False
    return True


# -- fixed point discovery and the index sum audit -------------------------------


@dataclass
class FixedPointEntry:
    pseudomarginals: BinaryPseudomarginals
    index: int
    determinant: float
    stability_radius: float
    discovery_count: int = 1


@dataclass
class FixedPointCatalog:
    entries: list = field(default_factory=list)
    status: str = "PASS"  # PASS | MISSED-FIXED-POINT | INCONCLUSIVE
    index_sum: int = 0
    dedup_radius: float = 1e-6

    def __len__(self):
        return len(self.entries)


def newton_fixed_point(model, start, gtol=1e-11, max_iter=200):
    """Newton's method on grad F from an interior starting point."""
    x = start.as_vector().copy()
    g = model.graph
    for _ in range(max_iter):
        try:
            pm = BinaryPseudomarginals.from_vector(g, x)
        except ValueError:
            return None
        grad = bethe_gradient_binary(model, pm)
        if np.abs(grad).max() < gtol:
            return pm
        hess = bethe_hessian(g, pm).matrix
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            return None
        t = 1.0
        for _ in range(50):
            try:
                cand = BinaryPseudomarginals.from_vector(g, x - t * step)
                new_grad = bethe_gradient_binary(model, cand)
                if np.abs(new_grad).max() < np.abs(grad).max() or t < 1e-6:
                    break
            except ValueError:
                pass
            t /= 2
        else:
            return None
        x = x - t * step
    return None


def index_sum_audit(model, restarts=50, seed=0, dedup_radius=1e-6,
                    degenerate_tol=1e-10, lbp_max_iter=800,
                    damping_grid=(0.0, 0.3, 0.6, 0.9)):
    """Multi-start fixed-point discovery plus the index-sum completeness check.

    Discovery is heuristic (damped LBP starts plus Newton on grad F);
    the audit is the falsifiable part: the indices of all fixed points
    must sum to 1, so a different sum proves a missed point.
    """
    rng = np.random.default_rng(seed)
    g = model.graph
    discrete = model.to_discrete()
    catalog = FixedPointCatalog(dedup_radius=dedup_radius)

    def consider(pm):
        if pm is None:
            return
        polished = newton_fixed_point(model, pm)
        if polished is None:
            return
        vec = polished.as_vector()
        for entry in catalog.entries:
            if np.abs(entry.pseudomarginals.as_vector() - vec).max() \
                    < dedup_radius:
                entry.discovery_count += 1
                return
        hrep = bethe_hessian(g, polished)
        m_u = np.real(directed_edge_matrix(
            g, edge_weights_from_binary(polished)))
        rho = spectral_radius(m_u)
        idx = 1 if hrep.determinant > 0 else -1
        catalog.entries.append(FixedPointEntry(
            polished, idx, hrep.determinant, rho))

    # damped LBP starts
    n_lbp = max(1, restarts // (2 * len(damping_grid)))
    for damping in damping_grid:
        for trial in range(n_lbp):
            init = MessageSet.uniform(discrete) if trial == 0 \
                else MessageSet.random(discrete, rng, scale=2.0)
            rep = run_lbp(discrete, damping=damping, init=init,
                          tol=1e-10, max_iter=lbp_max_iter)
            try:
                consider(fixed_point_from_report_binary(model, discrete, rep))
            except ValueError:
                pass
    # direct Newton from random interior seeds
    remaining = max(0, restarts - n_lbp * len(damping_grid))
    from .models import random_binary_pseudomarginals
    for _ in range(remaining):
        consider(random_binary_pseudomarginals(g, rng, margin=0.2))

    catalog.index_sum = sum(e.index for e in catalog.entries)
    if any(abs(e.determinant) <= degenerate_tol for e in catalog.entries):
        catalog.status = "INCONCLUSIVE"
    elif catalog.index_sum != 1:
        catalog.status = "MISSED-FIXED-POINT"
    else:
        catalog.status = "PASS"
    return catalog


def fixed_point_from_report_binary(model, discrete, report):
    """Map factor-form beliefs of the converted model back to (m, chi)."""
    g = model.graph
    means = [float(b[0] - b[1]) for b in report.beliefs.vertex]
    chis = []
    for k in range(g.num_edges):
        b = report.beliefs.factor[k]
        chis.append(float(b[0, 0] - b[0, 1] - b[1, 0] + b[1, 1]))
    return BinaryPseudomarginals(g, means, chis)


# -- uniqueness certificates -----------------------------------------------------


@dataclass
class UniquenessCertificate:
    holds: bool
    method: str
    spectral_radius: float = math.nan
    detail: str = ""


def mooij_uniqueness(model):
    """rho(M(tanh |J|)) < 1 certifies a unique LBP fixed point."""
    g = model.graph
    t = [math.tanh(abs(j)) for j in model.couplings]
    m = np.real(directed_edge_matrix(
        g, GraphEdgeWeights.per_undirected_edge(g, t)))
    rho = spectral_radius(m)
    return UniquenessCertificate(rho < 1, "mooij-spectral", rho)


def nullity2_uniqueness(model, grid_points=21):
    """Frustrated nullity-two models have a unique fixed point.

    Applies when core(graph) is connected with nullity 2 and the signs
    are not gauge-equivalent to attractive.  As a sanity check of the
    case analysis, the closed-form determinant of the reduced zeta is
    re-verified positive on a sign-constrained grid of correlation
    magnitudes.
    """
    cls = frustrated_nullity2_class(model)
    if cls.label == "equivalent-to-attractive":
        return UniquenessCertificate(
            False, "nullity2-frustration",
            detail="interaction is equivalent to attractive; "
                   "certificate not applicable")
    grid_min = _nullity2_grid_min(cls, grid_points)
    return UniquenessCertificate(
        grid_min > 0, "nullity2-frustration",
        detail="%s, min grid det %.3g" % (cls.label, grid_min))


def _nullity2_grid_min(cls, n):
    pos = np.linspace(0.0, 0.99, n)
    neg = -pos
    best = math.inf
    if cls.reduced_type == "theta":
        # one negative path product, two positive (case 1)
        for q1 in neg:
            for q2 in pos:
                for q3 in pos:
                    s = q1 * q2 + q1 * q3 + q2 * q3
                    val = (1 - s - 2 * q1 * q2 * q3) * (1 - s + 2 * q1 * q2 * q3)
                    best = min(best, val)
    elif cls.reduced_type == "dumbbell":
        signs = cls.cycle_signs
        ranges = [pos if s > 0 else neg for s in signs]
        for b1 in ranges[0]:
            for b2 in pos:
                for b3 in ranges[1]:
                    val = (1 - b1) * (1 - b3) * (
                        1 - b1 - b3 + b1 * b3 - 4 * b1 * b2 ** 2 * b3)
                    best = min(best, val)
    else:  # figure-eight
        signs = cls.cycle_signs
        ranges = [pos if s > 0 else neg for s in signs]
        for b1 in ranges[0]:
            for b2 in ranges[1]:
                val = (1 - b1) * (1 - b2) * (1 - b1 - b2 - 3 * b1 * b2)
                best = min(best, val)
    return best


def gradient_norm_binary(model, pm):
    """||grad F||_inf; diverges along any ray approaching the boundary of L."""
    return float(np.abs(bethe_gradient_binary(model, pm)).max())
