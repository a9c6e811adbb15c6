"""
Minimum spanning forest of a point cloud under a maximum edge length.

Borůvka rounds over a cKDTree: every component picks its cheapest edge to
another component, the picks are added Kruskal-style so ties cannot close a
cycle, and the rounds repeat until no component has an outgoing edge no
longer than max_gap. Nearest-neighbour lists are computed once and reused;
a point only searches deeper when its cached list holds no foreign neighbour
and could still beat its component's best edge.
"""
from dataclasses import dataclass
import logging

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial import cKDTree

from catenary.curve_utils.core import points_array

logger = logging.getLogger(__name__)

CACHED_NEIGHBOURS = 16
QUERY_CHUNK = 4096


@dataclass
class WireGraph:
    """
    Minimum spanning forest over the input points.

    Attributes:
        points: (n, 3) coordinates, node i is row i
        edges: (e, 2) node index pairs, smaller index first
        lengths: (e,) edge lengths in meters
        max_gap: the length cap the forest was built with
    """
    points: np.ndarray
    edges: np.ndarray
    lengths: np.ndarray
    max_gap: float

    @property
    def n_nodes(self):
        return len(self.points)

    @property
    def total_length(self):
        return float(self.lengths.sum())

    def adjacency(self):
        n = self.n_nodes
        if not len(self.edges):
            return sparse.csr_matrix((n, n))
        ones = np.ones(len(self.edges))
        graph = sparse.coo_matrix((ones, (self.edges[:, 0], self.edges[:, 1])), shape=(n, n))
        return (graph + graph.T).tocsr().sorted_indices()

    def components(self):
        """(count, labels) of the forest's connected components."""
        if not self.n_nodes:
            return 0, np.zeros(0, dtype=int)
        return csgraph.connected_components(self.adjacency(), directed=False)

    def neighbours(self):
        """Per-node arrays of adjacent nodes, in ascending order."""
        adjacency = self.adjacency()
        return [adjacency.indices[adjacency.indptr[i]:adjacency.indptr[i + 1]] for i in range(self.n_nodes)]


class _ForestBuilder:
    def __init__(self, xyz, max_gap):
        self.xyz = xyz
        self.max_gap = float(max_gap)
        self.n = len(xyz)
        self.tree = cKDTree(xyz)
        k = min(CACHED_NEIGHBOURS + 1, self.n)
        dist, idx = self.tree.query(xyz, k=k, distance_upper_bound=self._bound(self.max_gap))
        self.knn_dist = np.atleast_2d(dist).reshape(self.n, -1)
        self.knn_idx = np.atleast_2d(idx).reshape(self.n, -1)
        self.edges = []
        self.lengths = []

    @staticmethod
    def _bound(value):
        # cKDTree keeps only neighbours strictly closer than the bound
        return np.nextafter(value, np.inf)

    def _labels(self):
        if not self.edges:
            return self.n, np.arange(self.n)
        edges = np.array(self.edges)
        graph = sparse.coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(self.n, self.n))
        return csgraph.connected_components(graph, directed=False)

    @staticmethod
    def _first_foreign(dist, idx, labels, own):
        padded = np.append(labels, -1)
        foreign = (padded[idx] != own[:, None]) & np.isfinite(dist)
        found = foreign.any(axis=1)
        first = np.argmax(foreign, axis=1)
        rows = np.arange(len(idx))
        return found, idx[rows, first], dist[rows, first]

    def _deep_search(self, points, labels, best):
        """Escalating k-nearest queries for points whose cached list is all same-component."""
        found_u, found_v, found_w = [], [], []
        order = points[np.argsort(-self.knn_dist[points, -1], kind='stable')]
        for start in range(0, len(order), QUERY_CHUNK):
            chunk = order[start:start + QUERY_CHUNK]
            radius = self.knn_dist[chunk, -1]
            k = self.knn_idx.shape[1]
            while chunk.size and k < self.n:
                # a point whose k-th neighbour is already no closer than its
                # component's best edge cannot improve on it
                keep = radius < np.minimum(best[labels[chunk]], self.max_gap)
                chunk = chunk[keep]
                if not chunk.size:
                    break
                k = min(2 * k, self.n)
                dist, idx = self.tree.query(self.xyz[chunk], k=k,
                                            distance_upper_bound=self._bound(self.max_gap))
                found, v, w = self._first_foreign(dist, idx, labels, labels[chunk])
                found_u.append(chunk[found])
                found_v.append(v[found])
                found_w.append(w[found])
                np.minimum.at(best, labels[chunk[found]], w[found])
                # a row with a free slot already lists every neighbour within max_gap
                more = ~found & np.isfinite(dist[:, -1])
                chunk, radius = chunk[more], dist[more, -1]
        if not found_u:
            return np.zeros(0, dtype=int), np.zeros(0, dtype=int), np.zeros(0)
        return np.concatenate(found_u), np.concatenate(found_v), np.concatenate(found_w)

    def _round(self):
        count, labels = self._labels()
        found, v, w = self._first_foreign(self.knn_dist, self.knn_idx, labels, labels)
        u = np.flatnonzero(found)
        v, w = v[found], w[found]

        best = np.full(count, np.inf)
        np.minimum.at(best, labels[u], w)
        full = np.isfinite(self.knn_dist[:, -1]) & (self.knn_idx.shape[1] < self.n)
        pending = np.flatnonzero(~found & full & (self.knn_dist[:, -1] < np.minimum(best[labels], self.max_gap)))
        if pending.size:
            du, dv, dw = self._deep_search(pending, labels, best)
            u, v, w = np.concatenate([u, du]), np.concatenate([v, dv]), np.concatenate([w, dw])
        if not u.size:
            return False

        lo, hi = np.minimum(u, v), np.maximum(u, v)
        order = np.lexsort((hi, lo, w))
        # cheapest candidate per component, ties by node indices
        comp = labels[u[order]]
        _, first = np.unique(comp, return_index=True)
        picks = order[first]
        picks = picks[np.lexsort((hi[picks], lo[picks], w[picks]))]

        parent = np.arange(count)

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        added = 0
        for p in picks:
            ra, rb = find(labels[lo[p]]), find(labels[hi[p]])
            if ra == rb:
                continue
            parent[ra] = rb
            self.edges.append((int(lo[p]), int(hi[p])))
            self.lengths.append(float(np.linalg.norm(self.xyz[lo[p]] - self.xyz[hi[p]])))
            added += 1
        logger.debug('boruvka round: %d components, %d edges added', count, added)
        return added > 0

    def build(self):
        while self._round():
            pass
        edges = np.array(self.edges, dtype=int).reshape(-1, 2)
        return WireGraph(self.xyz, edges, np.array(self.lengths, dtype=float), self.max_gap)


def build_mst(points, max_gap):
    """
    Minimum spanning forest of the Euclidean graph restricted to edges no
    longer than max_gap. Its components are exactly the max_gap-connectivity
    clusters of the points.

    Args:
        points: (n, 3) array or iterable of Point3
        max_gap: maximum edge length in meters, positive

    Returns:
        WireGraph
    """
    if not max_gap > 0:
        raise ValueError(f'max_gap must be positive, got {max_gap}')
    xyz = points_array(points)
    if len(xyz) < 2:
        return WireGraph(xyz, np.zeros((0, 2), dtype=int), np.zeros(0), float(max_gap))
    graph = _ForestBuilder(xyz, max_gap).build()
    logger.info('spanning forest: %d points, %d edges, total length %.1f m',
                graph.n_nodes, len(graph.edges), graph.total_length)
    return graph
