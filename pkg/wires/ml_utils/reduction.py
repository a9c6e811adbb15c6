"""
Reduce a spanning forest to combined polylines.

End nodes are peeled off the forest pass by pass. Each end node either
stores the non-small polylines that met there, or hands one polyline on to
its neighbour with the node point (and any stray points) appended as a new
combined point. Once every node is isolated, the polylines meeting at each
node are merged through it or stored.
"""
from dataclasses import dataclass, field
from itertools import chain
import logging

import numpy as np
from sklearn.decomposition import PCA

from catenary.curve_utils.core import Point3

logger = logging.getLogger(__name__)

SMALL = 'small'
NEITHER = 'neither'
NOT_SMALL = 'not_small'


@dataclass(frozen=True)
class CombinedPoint:
    """Source points that segmentation and refinement never split."""
    point_indices: tuple
    representative: Point3

    def __post_init__(self):
        if not self.point_indices:
            raise ValueError('a combined point needs at least one source point')

    @classmethod
    def from_indices(cls, indices, xyz):
        indices = tuple(int(i) for i in indices)
        centroid = xyz[list(indices)].mean(axis=0)
        return cls(indices, Point3.from_array(centroid))

    def __len__(self):
        return len(self.point_indices)


@dataclass(eq=False)
class CombinedPolyline:
    """
    Ordered combined points along a candidate wire.

    A blocking polyline stands in for a junction that already stored its
    polylines; it counts as not small so nothing merges through it.
    """
    combined_points: list = field(default_factory=list)
    blocking: bool = False

    def __len__(self):
        return len(self.combined_points)

    def point_indices(self):
        return np.fromiter(chain.from_iterable(cp.point_indices for cp in self.combined_points), dtype=int)

    def smallest_index(self):
        return min(min(cp.point_indices) for cp in self.combined_points) if self.combined_points else -1

    def size_class(self, n_min, n_max):
        """SMALL, NEITHER or NOT_SMALL from the combined point count alone."""
        if len(self) <= n_min:
            return SMALL
        if len(self) > n_max:
            return NOT_SMALL
        return NEITHER


@dataclass(frozen=True)
class ReductionConfig:
    n_min: int = 5
    n_max: int = 50
    ratio_threshold: float = 0.25

    def __post_init__(self):
        if self.n_min < 1 or self.n_max < self.n_min:
            raise ValueError('need 1 <= n_min <= n_max')
        if not 0 < self.ratio_threshold <= 1:
            raise ValueError('ratio_threshold must lie in (0, 1]')


def axis_ratio(xyz):
    """Median over largest axis of the covariance ellipse of xyz; None below two distinct points."""
    xyz = np.asarray(xyz, dtype=float)
    if len(xyz) < 2:
        return None
    pca = PCA(n_components=min(3, len(xyz))).fit(xyz)
    variances = np.zeros(3)
    variances[:len(pca.explained_variance_)] = np.clip(pca.explained_variance_, 0.0, None)
    if variances[0] <= 0:
        return None
    return float(np.sqrt(variances[1] / variances[0]))


def is_prolongated(poly, xyz, ratio_threshold):
    """
    True when the member points of poly are elongated: the ratio of the
    median to the largest axis of their covariance ellipse is at most
    ratio_threshold. Fewer than two distinct points are never prolongated.
    """
    ratio = axis_ratio(xyz[poly.point_indices()])
    return ratio is not None and ratio <= ratio_threshold


class GraphReducer:
    """
    Turns a WireGraph into combined polylines.

    Usage:
        polylines = GraphReducer(config).reduce(graph)
    """

    def __init__(self, config=None):
        self.config = config or ReductionConfig()

    def not_small(self, poly, xyz):
        if poly.blocking:
            return True
        size = poly.size_class(self.config.n_min, self.config.n_max)
        if size == NEITHER:
            return is_prolongated(poly, xyz, self.config.ratio_threshold)
        return size == NOT_SMALL

    def _ranked(self, polys, xyz):
        """Polylines ordered longest first, non-small before small, ties by smallest source index."""
        keyed = [((not self.not_small(p, xyz)), -len(p), p.smallest_index(), p) for p in polys]
        keyed.sort(key=lambda item: item[:3])
        return [item[3] for item in keyed], [item[:2] for item in keyed]

    @staticmethod
    def _gather(polys, node):
        return list(chain.from_iterable(p.point_indices().tolist() for p in polys)) + [node]

    def _end_node(self, node, polys, xyz, stored):
        """Process one end node and return the polyline handed to its neighbour."""
        nonsmall = [p for p in polys if self.not_small(p, xyz)]
        if len(nonsmall) > 1:
            stored.extend(nonsmall)
            rest = [p for p in polys if not any(p is q for q in nonsmall)]
            return CombinedPolyline([CombinedPoint.from_indices(self._gather(rest, node), xyz)], blocking=True)

        ranked, keys = self._ranked(polys, xyz)
        if len(ranked) == 1 or (len(ranked) > 1 and keys[0] != keys[1]):
            longest = ranked[0]
            stray = self._gather(ranked[1:], node)
            longest.combined_points.append(CombinedPoint.from_indices(stray, xyz))
            return longest
        # no polyline yet, or two of them tie for longest
        return CombinedPolyline([CombinedPoint.from_indices(self._gather(polys, node), xyz)])

    def _isolated_node(self, node, polys, xyz, stored):
        nonsmall = [p for p in polys if self.not_small(p, xyz)]
        if len(nonsmall) > 2:
            stored.extend(nonsmall)
            rest = [p for p in polys if not any(p is q for q in nonsmall)]
            stored.append(CombinedPolyline([CombinedPoint.from_indices(self._gather(rest, node), xyz)]))
            return
        through = nonsmall or self._ranked(polys, xyz)[0][:2]
        rest = [p for p in polys if not any(p is q for q in through)]
        hub = CombinedPoint.from_indices(self._gather(rest, node), xyz)
        merged = CombinedPolyline()
        if through:
            merged.combined_points.extend(through[0].combined_points)
        merged.combined_points.append(hub)
        if len(through) == 2:
            merged.combined_points.extend(reversed(through[1].combined_points))
        stored.append(merged)

    def reduce(self, graph):
        """
        Args:
            graph: WireGraph from build_mst

        Returns:
            list of CombinedPolyline; every source point belongs to exactly
            one combined point of exactly one polyline
        """
        xyz = graph.points
        n = graph.n_nodes
        neighbours = [set(a.tolist()) for a in graph.neighbours()]
        polys = [[] for _ in range(n)]
        consumed = np.zeros(n, dtype=bool)
        stored = []

        leaves = [v for v in range(n) if len(neighbours[v]) == 1]
        passes = 0
        while leaves:
            passes += 1
            next_leaves = []
            for v in leaves:
                # its last neighbour may have been peeled earlier in this pass
                if len(neighbours[v]) != 1:
                    continue
                (u,) = neighbours[v]
                polys[u].append(self._end_node(v, polys[v], xyz, stored))
                polys[v] = []
                consumed[v] = True
                neighbours[v].clear()
                neighbours[u].discard(v)
                if len(neighbours[u]) == 1:
                    next_leaves.append(u)
            leaves = next_leaves

        for v in np.flatnonzero(~consumed):
            self._isolated_node(int(v), polys[v], xyz, stored)
        logger.info('graph reduction: %d nodes, %d passes, %d combined polylines', n, passes, len(stored))
        return stored


def reduce_graph(graph, n_min=5, n_max=50, ratio_threshold=0.25):
    """Combined polylines of a WireGraph; see GraphReducer."""
    return GraphReducer(ReductionConfig(n_min, n_max, ratio_threshold)).reduce(graph)
