"""CSS decoder graphs with bias-adjusted weights, edge classification and export.

The X-side graph has one vertex per X stabilizer and detects the Z components
of errors; the Z-side graph is the mirror image. Each graph adds one virtual
boundary vertex and has exactly one edge per qubit.
"""
import json
import logging
import math
from dataclasses import dataclass
from functools import cached_property

import graphviz
import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix

from modules import config
from modules.errors import ConfigError, StructureError, WeightError

logger = logging.getLogger(__name__)

LOW = "LOW"
HIGH = "HIGH"
UNIFORM = "UNIFORM"

SIDES = ("X", "Z")
EXPORT_FORMATS = ("DOT", "JSON")

_EDGE_STYLES = {
    LOW: {"style": "solid", "penwidth": "2.0"},
    HIGH: {"style": "dashed", "penwidth": "1.0"},
    UNIFORM: {"style": "dotted", "penwidth": "1.0"},
    None: {"style": "solid", "penwidth": "1.0"},
}
_SIDE_COLORS = {"X": "blue", "Z": "red"}


@dataclass(frozen=True)
class GraphEdge:
    qubit: int
    u: int
    v: int
    p_edge: float
    weight: float


@dataclass(frozen=True, eq=False)
class DecoderGraph:
    side: str
    L: int
    num_checks: int
    edges: tuple
    check_positions: tuple

    @property
    def boundary(self):
        return self.num_checks

    @property
    def num_vertices(self):
        return self.num_checks + 1

    @property
    def n(self):
        return len(self.edges)

    @cached_property
    def weights(self):
        return np.array([e.weight for e in self.edges], dtype=float)

    @cached_property
    def probabilities(self):
        return np.array([e.p_edge for e in self.edges], dtype=float)

    @cached_property
    def pair_qubits(self):
        """Cheapest qubit realising each vertex pair; ties go to the lowest qubit index."""
        best = {}
        for e in self.edges:
            key = (min(e.u, e.v), max(e.u, e.v))
            current = best.get(key)
            if current is None or e.weight < self.edges[current].weight - config.WEIGHT_EPSILON:
                best[key] = e.qubit
        return best

    @cached_property
    def csgraph(self):
        """Symmetric sparse adjacency over the deduplicated vertex pairs."""
        rows, cols, data = [], [], []
        for (a, b), q in sorted(self.pair_qubits.items()):
            w = self.edges[q].weight
            rows += [a, b]
            cols += [b, a]
            data += [w, w]
        return csr_matrix((data, (rows, cols)), shape=(self.num_vertices, self.num_vertices))

    def degree(self, vertex):
        return sum((e.u == vertex) + (e.v == vertex) for e in self.edges)

    def vertex_position(self, vertex):
        if vertex == self.boundary:
            return (-1.0, -1.0) if self.side == "X" else (float(self.L), float(self.L))
        return self.check_positions[vertex]


def edge_probability(rates, side, y_in_weights=True):
    """Per-qubit probability that an error flips the checks of one side.

    The X side sees Z components (Z and Y errors), the Z side sees X components.
    """
    rates = np.asarray(rates, dtype=float)
    component = rates[:, 2] if side == "X" else rates[:, 0]
    if y_in_weights:
        component = component + rates[:, 1]
    return component


def edge_weight(p_edge):
    """Log-likelihood weight ln((1 - p) / p) of an edge with error probability p.

    Raises:
        WeightError: p >= 0.5, where the weight would not be positive
    """
    if p_edge >= 0.5:
        raise WeightError(f"edge probability {p_edge} >= 0.5 gives a non-positive weight")
    p = max(float(p_edge), config.MIN_EDGE_PROBABILITY)
    return math.log((1.0 - p) / p)


def build_decoder_graph(code, side, effective_rates, y_in_weights=None):
    """Decoder graph of one CSS side with weights from CSS-frame rates.

    Args:
        code: StabilizerCode
        side: "X" or "Z"
        effective_rates: (n, 3) per-qubit rates from deformation.effective_noise
        y_in_weights: include p_y in the edge probability (default config.Y_IN_WEIGHTS)

    Returns:
        DecoderGraph

    Raises:
        StructureError: a check-matrix column has weight 0 or more than 2
        WeightError: an edge probability reaches 0.5
    """
    if side not in SIDES:
        raise ConfigError(f"side must be 'X' or 'Z', got {side!r}")
    if y_in_weights is None:
        y_in_weights = config.Y_IN_WEIGHTS
    h = code.check_matrix(side)
    probabilities = edge_probability(effective_rates, side, y_in_weights)
    if probabilities.shape[0] != h.cols:
        raise StructureError(f"rates cover {probabilities.shape[0]} qubits, code has {h.cols}")

    boundary = h.rows
    edges = []
    for q in range(h.cols):
        checks = [int(c) for c in np.flatnonzero(h.bits[:, q])]
        if len(checks) == 1:
            u, v = checks[0], boundary
        elif len(checks) == 2:
            u, v = checks
        else:
            raise StructureError(
                f"qubit {code.coordinates(q)} has column weight {len(checks)} in h_{side.lower()}",
                {"qubit": q, "side": side},
            )
        p_edge = float(probabilities[q])
        edges.append(GraphEdge(q, u, v, p_edge, edge_weight(p_edge)))

    positions = []
    for s in code.checks(side):
        coords = np.array([code.coordinates(q) for q in s.support()], dtype=float)
        positions.append(tuple(float(x) for x in coords.mean(axis=0)))

    return DecoderGraph(side, code.L, h.rows, tuple(edges), tuple(positions))


@dataclass(frozen=True)
class LabeledEdge:
    side: str
    edge: GraphEdge
    label: str


@dataclass(frozen=True, eq=False)
class CombinedGraph:
    """Union of labelled edges from both sides (the low- or high-weight graph)."""

    name: str
    graphs: tuple
    edges: tuple

    def graph(self, side):
        return self.graphs[SIDES.index(side)]


@dataclass(frozen=True, eq=False)
class ClassifiedGraphs:
    gx: DecoderGraph
    gz: DecoderGraph
    labels: dict
    uniform: bool
    p_max: float

    def graph(self, side):
        return self.gx if side == "X" else self.gz

    def labeled_edges(self, label=None):
        out = []
        for side in SIDES:
            for edge, lab in zip(self.graph(side).edges, self.labels[side]):
                if label is None or lab == label:
                    out.append(LabeledEdge(side, edge, lab))
        return tuple(out)

    @property
    def low_graph(self):
        return CombinedGraph("low", (self.gx, self.gz), self.labeled_edges(LOW))

    @property
    def high_graph(self):
        return CombinedGraph("high", (self.gx, self.gz), self.labeled_edges(HIGH))


def classify_edges(gx, gz):
    """Label each edge LOW (most likely error, low weight) or HIGH.

    An edge is LOW iff its p_edge equals the largest p_edge over both graphs.
    When every edge shares that value the result is flagged uniform and every
    edge is labelled UNIFORM.
    """
    probabilities = np.concatenate([gx.probabilities, gz.probabilities])
    p_max = float(probabilities.max()) if probabilities.size else 0.0
    is_max = np.isclose(probabilities, p_max, rtol=1e-9, atol=1e-15)
    uniform = bool(is_max.all())
    labels = {}
    offset = 0
    for side, g in (("X", gx), ("Z", gz)):
        part = is_max[offset:offset + g.n]
        offset += g.n
        if uniform:
            labels[side] = tuple(UNIFORM for _ in range(g.n))
        else:
            labels[side] = tuple(LOW if flag else HIGH for flag in part)
    if uniform:
        logger.info("Edge classification is uniform (all p_edge = %.6g)", p_max)
    return ClassifiedGraphs(gx, gz, labels, uniform, p_max)


def _vertex_id(side, graph, vertex):
    return f"{side}B" if vertex == graph.boundary else f"{side}{vertex}"


def _labeled_edges_of(g, labels=None):
    if isinstance(g, DecoderGraph):
        labs = labels or [None] * g.n
        return (g,), tuple(LabeledEdge(g.side, e, lab) for e, lab in zip(g.edges, labs))
    if isinstance(g, ClassifiedGraphs):
        return (g.gx, g.gz), g.labeled_edges()
    if isinstance(g, CombinedGraph):
        return g.graphs, g.edges
    raise ConfigError(f"Cannot export object of type {type(g).__name__}")


def to_networkx(g, split_boundary=True):
    """MultiGraph over check vertices; with ``split_boundary`` every boundary
    edge ends on its own leaf instead of one shared boundary vertex."""
    graphs, edges = _labeled_edges_of(g)
    by_side = {graph.side: graph for graph in graphs}
    nxg = nx.MultiGraph()
    for item in edges:
        graph = by_side[item.side]
        e = item.edge
        u = _vertex_id(item.side, graph, e.u)
        if e.v == graph.boundary and split_boundary:
            v = f"{item.side}B:{e.qubit}"
        else:
            v = _vertex_id(item.side, graph, e.v)
        nxg.add_edge(u, v, qubit=e.qubit, weight=e.weight, label=item.label)
    return nxg


def _is_check_vertex(name):
    return "B" not in name


def max_check_degree(g):
    nxg = to_networkx(g)
    degrees = [d for node, d in nxg.degree() if _is_check_vertex(node)]
    return max(degrees, default=0)


def is_disjoint_paths(g):
    """True iff every connected component is a simple path (boundary ends split)."""
    nxg = to_networkx(g)
    for component in nx.connected_components(nxg):
        sub = nxg.subgraph(component)
        if sub.number_of_edges() != sub.number_of_nodes() - 1:
            return False
        if max((d for _, d in sub.degree()), default=0) > 2:
            return False
    return True


def _graph_document(g, labels=None):
    graphs, edges = _labeled_edges_of(g, labels)
    vertices = []
    for graph in graphs:
        for vertex in range(graph.num_vertices):
            row, col = graph.vertex_position(vertex)
            vertices.append({
                "id": _vertex_id(graph.side, graph, vertex),
                "side": graph.side,
                "boundary": vertex == graph.boundary,
                "position": [row, col],
            })
    L = graphs[0].L
    edge_docs = []
    for item in edges:
        graph = next(gr for gr in graphs if gr.side == item.side)
        e = item.edge
        edge_docs.append({
            "side": item.side,
            "qubit": e.qubit,
            "position": list(divmod(e.qubit, L)),
            "u": _vertex_id(item.side, graph, e.u),
            "v": _vertex_id(item.side, graph, e.v),
            "p_edge": e.p_edge,
            "weight": e.weight,
            "label": item.label,
        })
    kind = type(g).__name__
    document = {
        "format_version": config.FORMAT_VERSION,
        "kind": kind,
        "L": L,
        "sides": [graph.side for graph in graphs],
        "vertices": vertices,
        "edges": edge_docs,
    }
    if isinstance(g, ClassifiedGraphs):
        document["uniform"] = g.uniform
    if isinstance(g, CombinedGraph):
        document["name"] = g.name
    return document


def _dot_source(document):
    dot = graphviz.Graph(
        name=f"{document['kind']}_{'_'.join(document['sides'])}",
        engine="neato",
        graph_attr={"overlap": "true", "splines": "line"},
        node_attr={"shape": "point", "width": "0.12"},
    )
    for v in document["vertices"]:
        row, col = v["position"]
        attrs = {"pos": f"{col:g},{-row:g}!", "color": _SIDE_COLORS[v["side"]]}
        if v["boundary"]:
            attrs.update(shape="box", label=v["id"], width="0.3")
        dot.node(v["id"], **attrs)
    for e in document["edges"]:
        attrs = dict(_EDGE_STYLES[e["label"]])
        attrs["color"] = _SIDE_COLORS[e["side"]]
        attrs["tooltip"] = f"q{e['qubit']} p={e['p_edge']:.6g} w={e['weight']:.6g}"
        if e["label"] is not None:
            attrs["comment"] = e["label"]
        dot.edge(e["u"], e["v"], **attrs)
    return dot.source


def export_graph(g, fmt="DOT", labels=None):
    """Serialise a decoder graph, a classified pair or a combined low/high graph.

    Args:
        g: DecoderGraph, ClassifiedGraphs or CombinedGraph
        fmt: "DOT" (neato positions follow the lattice) or "JSON"
        labels: optional per-edge labels when exporting a single DecoderGraph

    Returns:
        bytes, identical for identical inputs
    """
    fmt = str(fmt).upper()
    if fmt not in EXPORT_FORMATS:
        raise ConfigError(f"Unknown export format {fmt!r}; expected one of {EXPORT_FORMATS}")
    document = _graph_document(g, labels)
    if fmt == "JSON":
        return (json.dumps(document, indent=2, sort_keys=True) + "\n").encode("utf-8")
    return _dot_source(document).encode("utf-8")
