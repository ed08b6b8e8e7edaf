"""The loopy belief propagation engine.

Messages live on directed edges (factor -> vertex) as positive tables
over the vertex's states, normalized to sum 1.  One synchronous sweep
applies

    m'_{a->i}(x_i) ~ sum_{x_a\\i} Psi_a(x_a) prod_{j in a\\i}
                                   prod_{b in N_j \\ a} m_{b->j}(x_j)

Damping acts in natural-parameter (log-ratio) space; the residual is the
max L-inf change of log messages.  Beliefs, the Bethe free energy and
log Z_B are computed from the message set; the update's linearization at
a fixed point is the block matrix with entries
Var(phi_i)^{-1} Cov(phi_i, phi_j) on feeding edge pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class MessageSet:
    """One positive, sum-1 table per directed edge (factor -> vertex)."""

    def __init__(self, model, tables):
        self.model = model
        self.tables = [np.asarray(t, dtype=float) for t in tables]

    @classmethod
    def uniform(cls, model):
        g = model.graph
        return cls(model, [np.full(model.cardinalities[e.vertex],
                                   1.0 / model.cardinalities[e.vertex])
                           for e in g.directed_edges])

    @classmethod
    def random(cls, model, rng, scale=1.0):
        g = model.graph
        tables = []
        for e in g.directed_edges:
            q = model.cardinalities[e.vertex]
            t = np.exp(rng.uniform(-scale, scale, size=q))
            tables.append(t / t.sum())
        return cls(model, tables)

    def copy(self):
        return MessageSet(self.model, [t.copy() for t in self.tables])

    def log_residual(self, other):
        return max(float(np.abs(np.log(a) - np.log(b)).max())
                   for a, b in zip(self.tables, other.tables))


@dataclass
class Beliefs:
    vertex: list
    factor: list

    def local_consistency_error(self, model):
        g = model.graph
        worst = 0.0
        for a, members in enumerate(g.factors):
            b = self.factor[a]
            for pos, i in enumerate(members):
                axes = tuple(ax for ax in range(b.ndim) if ax != pos)
                worst = max(worst,
                            float(np.abs(b.sum(axis=axes) - self.vertex[i]).max()))
        return worst


@dataclass
class LbpRunReport:
    converged: bool
    iterations: int
    residual: float
    schedule: str
    damping: float
    messages: MessageSet
    beliefs: Beliefs
    log_z_bethe: float
    residual_history: list = field(default_factory=list, repr=False)


def _incoming(model, j, excluding_factor):
    """Indices of directed edges (b -> j) with b != excluding_factor."""
    g = model.graph
    return [e.index for e in g.directed_edges
            if e.vertex == j and e.factor != excluding_factor]


class _UpdatePlan:
    """Precomputed contraction structure for each directed edge."""

    def __init__(self, model):
        g = model.graph
        self.model = model
        self.steps = []
        for e in g.directed_edges:
            members = g.factors[e.factor]
            pos_i = members.index(e.vertex)
            inputs = []  # (axis position, vertex, feeding edge indices)
            for pos, j in enumerate(members):
                if j == e.vertex:
                    continue
                inputs.append((pos, j, _incoming(model, j, e.factor)))
            self.steps.append((e.index, e.factor, pos_i, inputs))

    def update_edge(self, tables, step):
        _, a, pos_i, inputs = step
        t = self.model.potentials[a]
        for pos, _, feeds in inputs:
            prod = None
            for f in feeds:
                prod = tables[f] if prod is None else prod * tables[f]
            if prod is not None:
                shape = [1] * t.ndim
                shape[pos] = prod.shape[0]
                t = t * prod.reshape(shape)
        axes = tuple(ax for ax in range(t.ndim) if ax != pos_i)
        out = t.sum(axis=axes)
        s = out.sum()
        if s <= 0 or not np.isfinite(s):
            raise FloatingPointError(
                "message (%d -> %d) collapsed to zero" % (a, step[0]))
        return out / s


def lbp_update(model, messages, plan=None):
    """One synchronous (parallel) sweep; returns a new normalized MessageSet."""
    plan = plan or _UpdatePlan(model)
    old = messages.tables
    new = [plan.update_edge(old, step) for step in plan.steps]
    return MessageSet(model, new)


def _damp(new, old, eps):
    if eps == 0.0:
        return new
    out = []
    for a, b in zip(new, old):
        t = np.exp((1 - eps) * np.log(a) + eps * np.log(b))
        out.append(t / t.sum())
    return out


def run_lbp(model, schedule="parallel", damping=0.0, init=None,
            tol=1e-10, max_iter=10_000):
    """Iterate LBP until the log-domain residual drops below tol.

    Non-convergence is reported in the LbpRunReport, not raised.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not 0.0 <= damping < 1.0:
        raise ValueError("damping must lie in [0, 1)")
    if schedule not in ("parallel", "sequential"):
        raise ValueError("schedule must be 'parallel' or 'sequential'")
    plan = _UpdatePlan(model)
    msgs = (init or MessageSet.uniform(model)).copy()
    residual = math.inf
    history = []
    iterations = 0
    for iterations in range(1, max_iter + 1):
        if schedule == "parallel":
            new_tables = [plan.update_edge(msgs.tables, step)
                          for step in plan.steps]
            new_tables = _damp(new_tables, msgs.tables, damping)
            new = MessageSet(model, new_tables)
        else:
            tables = [t.copy() for t in msgs.tables]
            for step in plan.steps:
                upd = plan.update_edge(tables, step)
                tables[step[0]] = _damp([upd], [tables[step[0]]], damping)[0]
            new = MessageSet(model, tables)
        residual = new.log_residual(msgs)
        history.append(residual)
        msgs = new
        if residual < tol:
            break
    beliefs = beliefs_from_messages(model, msgs)
    log_zb = -bethe_free_energy(model, beliefs)
    return LbpRunReport(converged=residual < tol, iterations=iterations,
                        residual=residual, schedule=schedule, damping=damping,
                        messages=msgs, beliefs=beliefs, log_z_bethe=log_zb,
                        residual_history=history)


def beliefs_from_messages(model, messages):
    g = model.graph
    vertex = []
    for i in range(g.num_vertices):
        b = np.ones(model.cardinalities[i])
        for e in g.directed_edges:
            if e.vertex == i:
                b = b * messages.tables[e.index]
        vertex.append(b / b.sum())
    factor = []
    for a, members in enumerate(g.factors):
        t = model.potentials[a].copy()
        for pos, j in enumerate(members):
            prod = None
            for f in _incoming(model, j, a):
                prod = messages.tables[f] if prod is None \
                    else prod * messages.tables[f]
            if prod is not None:
                shape = [1] * t.ndim
                shape[pos] = prod.shape[0]
                t = t * prod.reshape(shape)
        factor.append(t / t.sum())
    return Beliefs(vertex, factor)


def bethe_free_energy(model, beliefs):
    """Type-1 Bethe free energy of a set of pseudomarginals.

    F = -sum_a b_a log Psi_a + sum_a b_a log b_a
        + sum_i (1 - d_i) b_i log b_i;  at an LBP fixed point
    F = -log Z_B.
    """
    g = model.graph
    out = 0.0
    for a in range(g.num_factors):
        b = beliefs.factor[a]
        if b.min() <= 0:
            raise ValueError("factor belief %d touches the boundary" % a)
        psi = model.potentials[a]
        with np.errstate(divide="ignore"):
            term = b * (np.log(b) - np.log(psi))
        term = np.where(b > 0, term, 0.0)
        if not np.isfinite(term).all():
            raise ValueError("belief has mass outside the support of Psi")
        out += float(term.sum())
    for i in range(g.num_vertices):
        b = beliefs.vertex[i]
        if b.min() <= 0:
            raise ValueError("vertex belief %d touches the boundary" % i)
        out += (1 - g.vertex_degree(i)) * float((b * np.log(b)).sum())
    return out


def _vertex_stat(q):
    """Indicator statistics of states 0..q-2 (columns)."""
    return np.eye(q)[:, :-1]


def lbp_linearization(model, beliefs, residual_check=None, tol=1e-6):
    """Block matrix T' of the update map at a fixed point.

    Row block (a -> i), column block (b -> j) equals
    Var_{b_i}(phi_i)^{-1} Cov_{b_a}(phi_i, phi_j) when (b -> j) feeds
    (a -> i), else zero.  Indicator sufficient statistics match the
    log-ratio message parametrization.
    """
    if residual_check is not None and residual_check >= tol:
        raise ValueError("beliefs are not at a fixed point "
                         "(residual %.3g >= %.3g)" % (residual_check, tol))
    g = model.graph
    qs = model.cardinalities
    sizes = [qs[e.vertex] - 1 for e in g.directed_edges]
    offs = np.concatenate([[0], np.cumsum(sizes)])
    dim = int(offs[-1])
    out = np.zeros((dim, dim))
    for e in g.directed_edges:
        i = e.vertex
        si = _vertex_stat(qs[i])
        bi = beliefs.vertex[i]
        mean_i = si.T @ bi
        var_i = np.einsum("x,xa,xb->ab", bi, si, si) - np.outer(mean_i, mean_i)
        var_inv = np.linalg.inv(var_i)
        members = g.factors[e.factor]
        pos_i = members.index(i)
        bf = beliefs.factor[e.factor]
        for ep in g.transitions_into(e):
            j = ep.vertex
            sj = _vertex_stat(qs[j])
            pos_j = members.index(j)
            other = tuple(p for p in range(len(members))
                          if p not in (pos_i, pos_j))
            pij = bf.sum(axis=other) if other else bf
            if pos_i > pos_j:
                pij = pij.T
            mean_j = sj.T @ pij.sum(axis=0)
            cov = np.einsum("xy,xa,yb->ab", pij, si, sj) \
                - np.outer(mean_i, mean_j)
            block = var_inv @ cov
            r0, r1 = offs[e.index], offs[e.index + 1]
            c0, c1 = offs[ep.index], offs[ep.index + 1]
            out[r0:r1, c0:c1] = block
    return out


def natural_parameters(messages):
    """Log-ratio coordinates (against the last state) of every message."""
    out = []
    for t in messages.tables:
        out.append(np.log(t[:-1]) - math.log(t[-1]))
    return np.concatenate(out) if out else np.zeros(0)


def messages_from_natural(model, vec):
    g = model.graph
    tables = []
    pos = 0
    for e in g.directed_edges:
        q = model.cardinalities[e.vertex]
        mu = vec[pos:pos + q - 1]
        pos += q - 1
        t = np.exp(np.concatenate([mu, [0.0]]))
        tables.append(t / t.sum())
    return MessageSet(model, tables)


def update_map_natural(model, vec, plan=None):
    """The update map T in natural-parameter coordinates (for derivatives)."""
    msgs = messages_from_natural(model, vec)
    new = lbp_update(model, msgs, plan=plan)
    return natural_parameters(new)
