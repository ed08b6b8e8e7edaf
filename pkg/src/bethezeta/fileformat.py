"""Text format for models and graphs.

Sections start with a bare keyword line and run until the next section:

    variables            # one "<id> <cardinality>" per line
    0 2
    1 2
    factors              # "<name> <member ids...> : <row-major table>"
    f0 0 1 : 2.0 0.5 0.5 2.0
    ising                # shorthand: "edge <u> <v> <J>" / "vertex <i> <h>"
    edge 0 1 0.75
    vertex 0 0.2
    graph                # bare multigraph: "edge <u> <v>" (loops u == v)
    edge 0 1

'#' starts a comment.  A model file carries (variables, factors) or
(ising); a graph file carries (graph).  Parsing is lossless against the
matching serializer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import FactorGraph, Graph
from .models import BinaryPairwiseModel, DiscreteModel

_SECTIONS = ("variables", "factors", "ising", "graph")


class ParseError(ValueError):
    def __init__(self, line_no, message):
        super().__init__("line %d: %s" % (line_no, message))
        self.line_no = line_no


@dataclass
class ModelFile:
    discrete: DiscreteModel | None = None
    ising: BinaryPairwiseModel | None = None
    graph: Graph | None = None

    def best_model(self):
        if self.ising is not None:
            return self.ising.to_discrete()
        if self.discrete is not None:
            return self.discrete
        raise ValueError("file carries no model")


def parse_text(text):
    sections = {}
    current = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line in _SECTIONS:
            current = line
            sections.setdefault(current, [])
            continue
        if current is None:
            raise ParseError(line_no, "content before any section header")
        sections[current].append((line_no, line))
    out = ModelFile()
    if "variables" in sections or "factors" in sections:
        out.discrete = _parse_discrete(sections)
    if "ising" in sections:
        out.ising = _parse_ising(sections["ising"])
    if "graph" in sections:
        out.graph = _parse_graph(sections["graph"])
    if out.discrete is None and out.ising is None and out.graph is None:
        raise ParseError(0, "no recognized sections")
    return out


def parse_file(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_text(fh.read())


def _parse_discrete(sections):
    if "variables" not in sections:
        raise ParseError(0, "factors given without a variables section")
    if "factors" not in sections:
        raise ParseError(0, "variables given without a factors section")
    cards = {}
    for line_no, line in sections["variables"]:
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(line_no, "expected '<id> <cardinality>'")
        try:
            vid, card = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(line_no, "ids and cardinalities are integers")
        if vid in cards:
            raise ParseError(line_no, "duplicate variable id %d" % vid)
        cards[vid] = card
    n = len(cards)
    if sorted(cards) != list(range(n)):
        raise ParseError(sections["variables"][0][0],
                         "variable ids must be dense 0..n-1")
    factors, tables = [], []
    for line_no, line in sections["factors"]:
        if ":" not in line:
            raise ParseError(line_no, "expected '<name> <members> : <table>'")
        head, tail = line.split(":", 1)
        head_parts = head.split()
        if len(head_parts) < 2:
            raise ParseError(line_no, "factor needs a name and members")
        try:
            members = [int(p) for p in head_parts[1:]]
        except ValueError:
            raise ParseError(line_no, "member ids are integers")
        for m in members:
            if m not in cards:
                raise ParseError(line_no, "unknown variable id %d" % m)
        try:
            values = [float(p) for p in tail.split()]
        except ValueError:
            raise ParseError(line_no, "table entries are numbers")
        expect = int(np.prod([cards[m] for m in members]))
        if len(values) != expect:
            raise ParseError(line_no, "table has %d entries, expected %d"
                             % (len(values), expect))
        factors.append(members)
        tables.append(values)
    try:
        fg = FactorGraph(n, factors)
        return DiscreteModel(fg, [cards[i] for i in range(n)], tables,
                             allow_zero_slices=True)
    except ValueError as exc:
        raise ParseError(sections["factors"][0][0], str(exc))


def _parse_ising(lines):
    edges, js = [], []
    fields = {}
    max_vertex = -1
    for line_no, line in lines:
        parts = line.split()
        if parts[0] == "edge":
            if len(parts) != 4:
                raise ParseError(line_no, "expected 'edge <u> <v> <J>'")
            try:
                u, v, j = int(parts[1]), int(parts[2]), float(parts[3])
            except ValueError:
                raise ParseError(line_no, "bad edge line")
            edges.append((u, v))
            js.append(j)
            max_vertex = max(max_vertex, u, v)
        elif parts[0] == "vertex":
            if len(parts) != 3:
                raise ParseError(line_no, "expected 'vertex <i> <h>'")
            try:
                i, h = int(parts[1]), float(parts[2])
            except ValueError:
                raise ParseError(line_no, "bad vertex line")
            fields[i] = h
            max_vertex = max(max_vertex, i)
        else:
            raise ParseError(line_no, "unknown ising directive %r" % parts[0])
    n = max_vertex + 1
    try:
        g = Graph(n, edges)
        return BinaryPairwiseModel(g, js, [fields.get(i, 0.0)
                                           for i in range(n)])
    except ValueError as exc:
        raise ParseError(lines[0][0] if lines else 0, str(exc))


def _parse_graph(lines):
    edges = []
    max_vertex = -1
    for line_no, line in lines:
        parts = line.split()
        if parts[0] == "edge" and len(parts) == 3:
            try:
                u, v = int(parts[1]), int(parts[2])
            except ValueError:
                raise ParseError(line_no, "bad edge line")
        elif parts[0] == "loop" and len(parts) == 2:
            try:
                u = v = int(parts[1])
            except ValueError:
                raise ParseError(line_no, "bad loop line")
        else:
            raise ParseError(line_no, "expected 'edge <u> <v>' or 'loop <v>'")
        edges.append((u, v))
        max_vertex = max(max_vertex, u, v)
    try:
        return Graph(max_vertex + 1, edges)
    except ValueError as exc:
        raise ParseError(lines[0][0] if lines else 0, str(exc))


def serialize_discrete(model):
    out = ["variables"]
    for i, q in enumerate(model.cardinalities):
        out.append("%d %d" % (i, q))
    out.append("factors")
    for a, members in enumerate(model.graph.factors):
        table = " ".join("%.17g" % x for x in model.potentials[a].reshape(-1))
        out.append("f%d %s : %s" % (a, " ".join(map(str, members)), table))
    return "\n".join(out) + "\n"


def serialize_ising(model):
    out = ["ising"]
    for k, (u, v) in enumerate(model.graph.edges):
        out.append("edge %d %d %.17g" % (u, v, model.couplings[k]))
    for i, h in enumerate(model.fields):
        if h != 0.0:
            out.append("vertex %d %.17g" % (i, h))
    if all(h == 0.0 for h in model.fields) and model.graph.num_vertices:
        out.append("vertex %d 0" % (model.graph.num_vertices - 1))
    return "\n".join(out) + "\n"


def serialize_graph(g):
    out = ["graph"]
    for (u, v) in g.edges:
        out.append("loop %d" % u if u == v else "edge %d %d" % (u, v))
    return "\n".join(out) + "\n"
