"""Minimum-weight perfect matching decoder.

A syndrome is decoded on one DecoderGraph by
  1. running Dijkstra from every defect to get defect-defect and
     defect-boundary distances with their qubit paths, dropping defect pairs
     that are no closer to each other than to the boundary,
  2. matching the defects and one boundary copy per defect exactly,
  3. XOR-ing the qubit paths of the matched pairs into a correction.
"""
import logging
import weakref
from dataclasses import dataclass
from functools import cached_property

import networkx as nx
import numpy as np
from scipy.sparse.csgraph import dijkstra

from modules import config
from modules.errors import ConfigError, DecodeError, DimensionError, StructureError

logger = logging.getLogger(__name__)

# relative slack when comparing a pair distance with its two boundary distances
PRUNE_RTOL = 1e-12


@dataclass(frozen=True)
class SyndromeEdge:
    u: int
    v: int
    weight: float
    qubits: tuple = ()


@dataclass(frozen=True, eq=False)
class SyndromeGraph:
    """Complete matching problem over defects and their boundary copies.

    Vertices 0..k-1 are defects and k..2k-1 their boundary copies, so copy
    ``k + i`` belongs to defect ``i``.
    """

    num_vertices: int
    edges: tuple
    defects: tuple = ()

    @classmethod
    def from_weights(cls, num_vertices, weights):
        """Plain weighted graph, e.g. ``{(0, 1): 1.0, (2, 3): 1.0}``."""
        edges = tuple(SyndromeEdge(int(u), int(v), float(w)) for (u, v), w in sorted(weights.items()))
        return cls(num_vertices, edges)

    @cached_property
    def _index(self):
        return {(min(e.u, e.v), max(e.u, e.v)): e for e in self.edges}

    def edge(self, u, v):
        return self._index.get((min(u, v), max(u, v)))


@dataclass(frozen=True)
class Matching:
    pairs: tuple
    total_weight: float

    def __len__(self):
        return len(self.pairs)


def _path_qubits(g, predecessors, source, target):
    qubits = []
    node = target
    while node != source:
        prev = int(predecessors[node])
        if prev < 0:
            raise StructureError(f"broken predecessor chain from {source} to {target}")
        qubits.append(g.pair_qubits[(min(prev, node), max(prev, node))])
        node = prev
    return tuple(sorted(qubits))


def all_pairs_defect_distances(g, defects):
    """Build the syndrome graph of ``defects`` on decoder graph ``g``.

    Args:
        g: DecoderGraph
        defects: check indices with a flipped syndrome bit

    Returns:
        SyndromeGraph with defect-defect, defect-own-copy and zero-weight
        copy-copy edges; every non-copy edge stores its qubit path
        Defect pairs at least as far apart as their summed boundary
        distances get no edge; matching both to the boundary is as cheap.

    Raises:
        StructureError: a defect reaches neither the boundary nor another defect
    """
    defects = tuple(sorted(int(d) for d in defects))
    k = len(defects)
    if k == 0:
        return SyndromeGraph(0, (), ())
    if any(d < 0 or d >= g.num_checks for d in defects):
        raise DimensionError(f"defects must be check indices below {g.num_checks}")

    dist, predecessors = dijkstra(g.csgraph, directed=False, indices=list(defects), return_predecessors=True)
    boundary = g.boundary
    to_boundary = dist[:, boundary]
    edges = []
    for i, source in enumerate(defects):
        reachable = False
        for j in range(i + 1, k):
            d = dist[i, defects[j]]
            if np.isfinite(d):
                reachable = True
                # paths may run through the boundary vertex, so d <= b_i + b_j;
                # a pair that is no shorter adds nothing over two boundary edges
                if d >= (to_boundary[i] + to_boundary[j]) * (1.0 - PRUNE_RTOL):
                    continue
                edges.append(SyndromeEdge(i, j, float(d), _path_qubits(g, predecessors[i], source, defects[j])))
        if np.isfinite(to_boundary[i]):
            reachable = True
            edges.append(SyndromeEdge(i, k + i, float(to_boundary[i]), _path_qubits(g, predecessors[i], source, boundary)))
        if not reachable and not any(np.isfinite(dist[j, source]) for j in range(i)):
            raise StructureError(f"defect {source} on the {g.side} side is disconnected", {"check": source})
        for j in range(i + 1, k):
            edges.append(SyndromeEdge(k + i, k + j, 0.0))
    return SyndromeGraph(2 * k, tuple(edges), defects)


def min_weight_perfect_matching(sg):
    """Exact minimum-weight perfect matching via the blossom algorithm.

    Weights are mapped to ``W + 1 - w`` and handed to a maximum-cardinality
    maximum-weight matcher, which then returns the minimum-weight perfect
    matching whenever one exists. Edges are inserted in sorted order so ties
    resolve the same way on every run.

    Raises:
        DimensionError: odd vertex count
        StructureError: the graph has no perfect matching
    """
    if sg.num_vertices % 2:
        raise DimensionError(f"perfect matching needs an even vertex count, got {sg.num_vertices}")
    if sg.num_vertices == 0:
        return Matching((), 0.0)
    if any(e.weight < 0 for e in sg.edges):
        raise ConfigError("matching weights must be non-negative")

    ceiling = max((e.weight for e in sg.edges), default=0.0) + 1.0
    graph = nx.Graph()
    graph.add_nodes_from(range(sg.num_vertices))
    for e in sorted(sg.edges, key=lambda e: (min(e.u, e.v), max(e.u, e.v))):
        graph.add_edge(e.u, e.v, weight=ceiling - e.weight)

    matched = nx.max_weight_matching(graph, maxcardinality=True, weight="weight")
    if 2 * len(matched) != sg.num_vertices:
        raise StructureError(
            f"no perfect matching on {sg.num_vertices} vertices (matched {2 * len(matched)})"
        )
    pairs = tuple(sorted((min(u, v), max(u, v)) for u, v in matched))
    total = sum(sg.edge(u, v).weight for u, v in pairs)
    return Matching(pairs, float(total))


def graph_syndrome(g, correction):
    """Checks of ``g`` flipped by a qubit bit-vector (boundary endpoints ignored)."""
    out = np.zeros(g.num_checks, dtype=np.uint8)
    for q in np.flatnonzero(correction):
        e = g.edges[int(q)]
        for v in (e.u, e.v):
            if v != g.boundary:
                out[v] ^= 1
    return out


_PYMATCHING_GRAPHS = weakref.WeakKeyDictionary()


def _pymatching_graph(g):
    matcher = _PYMATCHING_GRAPHS.get(g)
    if matcher is None:
        import pymatching

        matcher = pymatching.Matching()
        for e in g.edges:
            if e.v == g.boundary:
                matcher.add_boundary_edge(e.u, fault_ids={e.qubit}, weight=e.weight,
                                          merge_strategy="smallest-weight")
            else:
                matcher.add_edge(e.u, e.v, fault_ids={e.qubit}, weight=e.weight,
                                 merge_strategy="smallest-weight")
        _PYMATCHING_GRAPHS[g] = matcher
    return matcher


def _decode_blossom(g, defects):
    correction = np.zeros(g.n, dtype=np.uint8)
    sg = all_pairs_defect_distances(g, defects)
    matching = min_weight_perfect_matching(sg)
    for u, v in matching.pairs:
        for q in sg.edge(u, v).qubits:
            correction[q] ^= 1
    return correction


def _decode_pymatching(g, syndrome):
    prediction = np.asarray(_pymatching_graph(g).decode(syndrome), dtype=np.uint8)[: g.n]
    correction = np.zeros(g.n, dtype=np.uint8)
    correction[: prediction.size] = prediction
    return correction


def decode(g, syndrome, backend=None):
    """Most likely correction for ``syndrome`` on decoder graph ``g``.

    Args:
        g: DecoderGraph
        syndrome: bit-vector with one entry per check of ``g``
        backend: "blossom" or "pymatching" (default config.DECODER_BACKEND)

    Returns:
        uint8 qubit bit-vector whose syndrome equals the input

    Raises:
        DecodeError: matching failed or the correction misses the syndrome
    """
    backend = backend or config.DECODER_BACKEND
    if backend not in config.DECODER_BACKENDS:
        raise ConfigError(f"Unknown decoder backend {backend!r}")
    syndrome = np.asarray(syndrome, dtype=np.uint8) & 1
    if syndrome.shape != (g.num_checks,):
        raise DimensionError(f"syndrome length {syndrome.size} != {g.num_checks} checks")
    defects = np.flatnonzero(syndrome)
    if defects.size == 0:
        return np.zeros(g.n, dtype=np.uint8)

    try:
        if backend == "pymatching":
            correction = _decode_pymatching(g, syndrome)
        else:
            correction = _decode_blossom(g, defects)
    except StructureError as e:
        raise DecodeError(f"{g.side}-side decoding failed: {e.message}", e.details) from e

    if not np.array_equal(graph_syndrome(g, correction), syndrome):
        raise DecodeError(f"{g.side}-side correction does not reproduce the syndrome")
    logger.debug("Decoded %d defects on the %s side with %s", defects.size, g.side, backend)
    return correction
