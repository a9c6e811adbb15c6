"""
k-means over catenaries: points go to their nearest curve, curves are refit
to their points, and near-duplicate curves are merged, until the
memberships stop changing.
"""
from dataclasses import dataclass, field
from functools import cached_property
from itertools import chain
import logging
import math

from joblib import Parallel, delayed
import numpy as np
from scipy.spatial import cKDTree

from catenary.curve_utils.fitting import CatenaryFitter, FitConfig
from catenary.exceptions import CatenaryError, NotCatenaryError
from wires.ml_utils.segmentation import straight_deviations

logger = logging.getLogger(__name__)

UNASSIGNED = -1
CURVE_SAMPLES = 64


@dataclass
class WireCluster:
    curve: object
    member_indices: np.ndarray
    rms: float
    max_abs_deviation: float = 0.0
    stable: bool = False
    cluster_id: int = -1
    fit: object = field(default=None, repr=False)
    outlier_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int), repr=False)
    fitted_members: np.ndarray = field(default=None, repr=False)

    @property
    def size(self):
        return int(self.member_indices.size)

    @property
    def current(self):
        """True while the members are the points the curve was fitted to."""
        return self.fitted_members is not None and np.array_equal(self.member_indices, self.fitted_members)


@dataclass(eq=False)
class _SeedGroup:
    """An initial group while seeding; cluster stays None until the group fits."""
    cluster_id: int
    indices: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    cluster: WireCluster = None
    reason: str = None
    merged: bool = False


@dataclass(frozen=True)
class RefineConfig:
    deviation_threshold: float = 0.8
    wire_separation: float = 1.0
    max_rounds: int = 20
    merge_rms_factor: float = 1.25
    min_wire_length: float = 5.0
    end_point_search_radius: float = 10.0
    # share of an unfitted group's points a join may lose as outliers
    max_seed_loss: float = 0.2
    fit: FitConfig = field(default_factory=FitConfig)

    def __post_init__(self):
        if not self.wire_separation > 0:
            raise ValueError('wire_separation must be positive')
        if self.max_rounds < 1:
            raise ValueError('max_rounds must be at least 1')
        if not self.merge_rms_factor > 0 or not self.deviation_threshold > 0:
            raise ValueError('merge_rms_factor and deviation_threshold must be positive')
        if not 0 <= self.max_seed_loss < 1:
            raise ValueError('max_seed_loss must lie in [0, 1)')


def _robust_fit(xyz, config):
    """Fit for a worker process; failures come back as values."""
    try:
        return CatenaryFitter(config).fit(xyz), None
    except NotCatenaryError as e:
        return None, f'not_catenary:{e.reason}'
    except CatenaryError as e:
        return None, type(e).__name__


def _flat(hits):
    """Sorted unique indices from a query_ball_point result."""
    return np.unique(np.fromiter(chain.from_iterable(hits), dtype=int))


class WireRefiner:
    """
    Refines initial point groups into one catenary per wire.

    Usage:
        refiner = WireRefiner(xyz, config)
        clusters, unassigned = refiner.refine(initial_groups)

    Dissolved clusters and their reasons accumulate in refiner.dissolved;
    rounds, stable and objective_trace describe the last refine call.
    """

    def __init__(self, xyz, config=None, n_jobs=1):
        self.xyz = np.asarray(xyz, dtype=float)
        self.config = config or RefineConfig()
        self.fitter = CatenaryFitter(self.config.fit)
        self.n_jobs = n_jobs
        self.dissolved = []
        self.rounds = 0
        self.stable = False
        self.objective_trace = []
        self._next_id = 0
        self._rejected = set()

    @cached_property
    def tree(self):
        return cKDTree(self.xyz)

    def _new_id(self):
        self._next_id += 1
        return self._next_id - 1

    def dissolve(self, cluster_id, reason, points):
        self.dissolved.append({'cluster_id': int(cluster_id), 'reason': reason, 'points': int(points)})
        logger.info('cluster %d dissolved (%s, %d points)', cluster_id, reason, points)

    def _fit_all(self, groups):
        if self.n_jobs == 1 or len(groups) < 2:
            return [_robust_fit(self.xyz[g], self.config.fit) for g in groups]
        return Parallel(n_jobs=self.n_jobs)(delayed(_robust_fit)(self.xyz[g], self.config.fit) for g in groups)

    @staticmethod
    def _cluster_from(cluster_id, group, result):
        members = np.sort(group[result.inliers])
        return WireCluster(result.curve, members, result.rms, result.max_abs_deviation, cluster_id=cluster_id,
                           fit=result, outlier_indices=np.sort(group[result.outliers]), fitted_members=members)

    def fit_groups(self, groups, ids=None):
        """
        Robust catenary fit of every index group.

        Returns:
            (clusters, released): fitted clusters with their inliers as
            members, and the indices no cluster kept
        """
        groups = [np.asarray(g, dtype=int) for g in groups]
        ids = list(ids) if ids is not None else [self._new_id() for _ in groups]
        clusters, released = [], []
        for cluster_id, group, (result, reason) in zip(ids, groups, self._fit_all(groups)):
            if result is None:
                self.dissolve(cluster_id, reason, group.size)
                released.append(group)
                continue
            cluster = self._cluster_from(cluster_id, group, result)
            released.append(cluster.outlier_indices)
            clusters.append(cluster)
        released = np.sort(np.concatenate(released)) if released else np.zeros(0, dtype=int)
        return clusters, released

    def _seed_group(self, cluster_id, indices, result, reason):
        cluster = None
        if result is not None:
            cluster = self._cluster_from(cluster_id, indices, result)
            indices = cluster.member_indices
        pts = self.xyz[indices]
        return _SeedGroup(cluster_id, indices, pts.min(axis=0), pts.max(axis=0), cluster=cluster, reason=reason)

    def _near(self, entry, others):
        """Groups with a point within end_point_search_radius of a point of entry."""
        R = self.config.end_point_search_radius
        lo, hi = entry.lo - R, entry.hi + R
        boxed = [o for o in others if np.all(o.lo <= hi) and np.all(o.hi >= lo)]
        if not boxed:
            return []
        tree = cKDTree(self.xyz[entry.indices])
        near = []
        for other in boxed:
            d, _ = tree.query(self.xyz[other.indices], distance_upper_bound=R)
            if np.isfinite(d).any():
                near.append(other)
        return near

    def _join(self, entry, others, tried):
        """(partner, joined group) for an unfitted entry, or (None, None)."""
        cfg = self.config
        near = self._near(entry, others)
        best = None
        for other in near:
            key = (entry.cluster_id, entry.indices.size, other.cluster_id, other.indices.size)
            if key in tried:
                continue
            union = np.union1d(entry.indices, other.indices)
            result, _ = _robust_fit(self.xyz[union], cfg.fit)
            if result is None or result.outliers.size > cfg.max_seed_loss * entry.indices.size:
                tried.add(key)
                continue
            rank = (int(result.outliers.size), result.rms, other.cluster_id)
            if best is None or rank < best[0]:
                best = (rank, other, union, result)
        if best is not None:
            _, other, union, result = best
            return other, self._seed_group(min(entry.cluster_id, other.cluster_id), union, result, None)

        # still no sag to fit: grow the run while it stays straight
        best = None
        for other in near:
            if other.cluster is not None:
                continue
            union = np.union1d(entry.indices, other.indices)
            spread = float(straight_deviations(self.xyz[union]).max())
            if spread <= cfg.deviation_threshold and (best is None or (spread, other.cluster_id) < best[0]):
                best = ((spread, other.cluster_id), other, union)
        if best is not None:
            _, other, union = best
            return other, self._seed_group(min(entry.cluster_id, other.cluster_id), union, None, entry.reason)
        return None, None

    def seed(self, groups):
        """
        Initial clusters from index groups such as segmentation partitions.

        A group that cannot be fitted alone is joined to a group with a
        point within end_point_search_radius of its own: to one whose union
        fits while losing the fewest points, or else to another unfitted
        group when the two still lie along one line. Groups that never fit
        are dissolved.
        """
        groups = [np.asarray(g, dtype=int) for g in groups if len(g)]
        ids = [self._new_id() for _ in groups]
        entries = [self._seed_group(cid, g, result, reason)
                   for cid, g, (result, reason) in zip(ids, groups, self._fit_all(groups))]
        tried = set()
        changed = True
        while changed:
            changed = False
            pending = sorted((e for e in entries if e.cluster is None), key=lambda e: (-e.indices.size, e.cluster_id))
            for entry in pending:
                if entry.merged:
                    continue
                partner, joined = self._join(entry, [e for e in entries if e is not entry], tried)
                if joined is None:
                    continue
                entry.merged = partner.merged = True
                entries = [e for e in entries if not e.merged] + [joined]
                changed = True

        clusters = []
        for entry in entries:
            if entry.cluster is None:
                self.dissolve(entry.cluster_id, entry.reason, entry.indices.size)
            else:
                clusters.append(entry.cluster)
        if len(entries) < len(groups):
            logger.info('seeding joined %d groups into %d', len(groups), len(entries))
        return sorted(clusters, key=lambda c: c.cluster_id)

    def _candidates(self, curve):
        """Indices of points that may lie within T of the curve over its extent."""
        T = self.config.deviation_threshold
        count = max(CURVE_SAMPLES, int(math.ceil(curve.length / T)) + 1)
        samples = curve.point_at(np.linspace(curve.x_min, curve.x_max, count)).reshape(-1, 3)
        step = float(np.max(np.linalg.norm(np.diff(samples, axis=0), axis=1)))
        return _flat(self.tree.query_ball_point(samples, T + step))

    def bounded_distances(self, curve, xyz):
        """
        Closest abscissae and distances to the curve over its extent; a
        point whose closest abscissa lies past an end is measured to that
        end point.
        """
        x_c, d = self.fitter.distances(curve, xyz)
        outside = (x_c < curve.x_min) | (x_c > curve.x_max)
        if outside.any():
            ends = curve.point_at(np.clip(x_c[outside], curve.x_min, curve.x_max)).reshape(-1, 3)
            d = np.array(d, dtype=float)
            d[outside] = np.linalg.norm(xyz[outside] - ends, axis=1)
        return x_c, d

    def nearest_curves(self, clusters):
        """
        Returns:
            (nearest, dist, abscissa) per point: position of the nearest
            cluster (lowest on ties, UNASSIGNED when none is in reach), the
            distance to it and the closest abscissa on its curve
        """
        n = len(self.xyz)
        nearest = np.full(n, UNASSIGNED)
        dist = np.full(n, np.inf)
        abscissa = np.full(n, np.nan)
        for k, cluster in enumerate(clusters):
            idx = self._candidates(cluster.curve)
            if not idx.size:
                continue
            x_c, d = self.bounded_distances(cluster.curve, self.xyz[idx])
            closer = d < dist[idx]
            hit = idx[closer]
            nearest[hit] = k
            dist[hit] = d[closer]
            abscissa[hit] = x_c[closer]
        return nearest, dist, abscissa

    def assign_points(self, clusters):
        """
        Every point joins its nearest curve, ties going to the lower cluster
        index; points farther than T from every curve stay unassigned.
        Extents grow to cover the assigned points.

        Returns:
            labels: (n,) cluster position in clusters or UNASSIGNED
        """
        n = len(self.xyz)
        if not clusters:
            return np.full(n, UNASSIGNED)
        nearest, dist, abscissa = self.nearest_curves(clusters)
        labels = np.where(dist <= self.config.deviation_threshold, nearest, UNASSIGNED)
        order = np.argsort(labels, kind='stable')
        positions = np.arange(len(clusters))
        starts = np.searchsorted(labels[order], positions, side='left')
        stops = np.searchsorted(labels[order], positions, side='right')
        for cluster, start, stop in zip(clusters, starts, stops):
            members = order[start:stop]
            cluster.member_indices = members
            if members.size:
                x_c = abscissa[members]
                cluster.curve = cluster.curve.with_extent(min(cluster.curve.x_min, float(x_c.min())),
                                                          max(cluster.curve.x_max, float(x_c.max())))
        return labels

    def update_curves(self, clusters):
        """
        Refit clusters whose members changed since their last fit; failed or
        starved clusters are dissolved.
        """
        kept, stale = [], []
        for cluster in clusters:
            if cluster.size < self.config.fit.min_points:
                self.dissolve(cluster.cluster_id, 'too_few_points', cluster.size)
                continue
            kept.append(cluster)
            if not cluster.current:
                stale.append(cluster)
        refit, _ = self.fit_groups([c.member_indices for c in stale], ids=[c.cluster_id for c in stale])
        fresh = {c.cluster_id: c for c in refit}
        stale_ids = {c.cluster_id for c in stale}
        logger.debug('refit %d of %d clusters', len(stale), len(kept))
        return [fresh[c.cluster_id] if c.cluster_id in stale_ids else c
                for c in kept if c.cluster_id not in stale_ids or c.cluster_id in fresh]

    def merge_candidates(self, clusters):
        """Position pairs (i < j) of clusters whose curve samples come within reach of each other."""
        if len(clusters) < 2:
            return []
        cfg = self.config
        samples, owner = [], []
        for k, cluster in enumerate(clusters):
            curve = cluster.curve
            count = max(CURVE_SAMPLES, int(math.ceil(curve.length / cfg.end_point_search_radius)) + 1)
            samples.append(curve.point_at(np.linspace(curve.x_min, curve.x_max, count)).reshape(-1, 3))
            owner.append(np.full(count, k))
        owner = np.concatenate(owner)
        pairs = cKDTree(np.concatenate(samples)).query_pairs(cfg.wire_separation + cfg.end_point_search_radius,
                                                            output_type='ndarray')
        a, b = owner[pairs[:, 0]], owner[pairs[:, 1]]
        cross = a != b
        if not cross.any():
            return []
        pairs = np.unique(np.column_stack([np.minimum(a, b), np.maximum(a, b)])[cross], axis=0)
        return [(int(i), int(j)) for i, j in pairs]

    def _close_over_reach(self, a, b):
        """Samples of a's curve near b's extent stay within wire_separation of b's curve."""
        cfg = self.config
        curve = a.curve
        x = np.linspace(curve.x_min, curve.x_max, CURVE_SAMPLES)
        samples = curve.point_at(x)
        x_c, d = self.fitter.distances(b.curve, samples)
        pad = cfg.end_point_search_radius
        near = (x_c >= b.curve.x_min - pad) & (x_c <= b.curve.x_max + pad)
        return bool(near.any()) and float(d[near].max()) <= cfg.wire_separation

    @staticmethod
    def _key(cluster):
        return cluster.cluster_id, cluster.size, hash(cluster.member_indices.tobytes())

    def _try_merge(self, a, b):
        key = (self._key(a), self._key(b))
        if key in self._rejected:
            return None
        union = None
        if self._close_over_reach(a, b) and self._close_over_reach(b, a):
            union = np.union1d(a.member_indices, b.member_indices)
            result, _ = _robust_fit(self.xyz[union], self.config.fit)
            if result is None or result.outliers.size:
                union = None
            elif result.rms > self.config.merge_rms_factor * max(a.rms, b.rms, 1e-12):
                union = None
        if union is None:
            self._rejected.add(key)
            return None
        return WireCluster(result.curve, union, result.rms, result.max_abs_deviation,
                           cluster_id=min(a.cluster_id, b.cluster_id), fit=result, fitted_members=union)

    def merge_similar(self, clusters):
        """
        Merge pairs of curves that describe the same wire. Each pass takes
        the candidate pairs in order and merges every pair whose clusters
        are still untouched; passes repeat until one merges nothing.
        """
        clusters = list(clusters)
        while len(clusters) > 1:
            merged, used = {}, set()
            for i, j in self.merge_candidates(clusters):
                if i in used or j in used:
                    continue
                union = self._try_merge(clusters[i], clusters[j])
                if union is None:
                    continue
                logger.debug('merged clusters %d and %d', clusters[i].cluster_id, clusters[j].cluster_id)
                merged[i] = union
                used.update((i, j))
            if not merged:
                break
            clusters = [merged.get(k, c) for k, c in enumerate(clusters) if k not in used or k in merged]
        return clusters

    @staticmethod
    def _signature(clusters):
        return sorted(c.member_indices.tobytes() for c in clusters)

    def objective(self, clusters):
        """Sum of squared distances of members to their own curves."""
        total = 0.0
        for cluster in clusters:
            if not cluster.size:
                continue
            if cluster.current:
                total += cluster.rms ** 2 * cluster.size
            else:
                _, d = self.fitter.distances(cluster.curve, self.xyz[cluster.member_indices])
                total += float(np.sum(d ** 2))
        return total

    def extend_ends(self, clusters, labels):
        """
        Attach unassigned points near a wire's ends: within the end point
        search radius of an end point and within T of the curve beyond it.
        """
        cfg = self.config
        free = np.flatnonzero(labels == UNASSIGNED)
        if not free.size or not clusters:
            return labels
        tree = cKDTree(self.xyz[free])
        attached = 0
        for k, cluster in enumerate(clusters):
            curve = cluster.curve
            near = free[_flat(tree.query_ball_point(np.array(curve.end_points()), cfg.end_point_search_radius))]
            near = near[labels[near] == UNASSIGNED]
            if not near.size:
                continue
            x_c, d = self.fitter.distances(curve, self.xyz[near])
            beyond = (d <= cfg.deviation_threshold) & ((x_c < curve.x_min) | (x_c > curve.x_max))
            if not beyond.any():
                continue
            labels[near[beyond]] = k
            cluster.member_indices = np.union1d(cluster.member_indices, near[beyond])
            cluster.curve = curve.with_extent(min(curve.x_min, float(x_c[beyond].min())),
                                              max(curve.x_max, float(x_c[beyond].max())))
            attached += int(beyond.sum())
        if attached:
            logger.debug('end point search attached %d points', attached)
        return labels

    def refine(self, groups):
        """
        Args:
            groups: initial point index groups, e.g. one per segmentation
                partition

        Returns:
            (clusters, unassigned): final clusters, ordered by cluster id,
            and the indices of points that belong to none
        """
        cfg = self.config
        clusters = self.merge_similar(self.seed(groups))
        previous = self._signature(clusters)
        self.objective_trace = []
        stable = False
        round_no = 0
        for round_no in range(1, cfg.max_rounds + 1):
            labels = self.extend_ends(clusters, self.assign_points(clusters))
            events = len(self.dissolved), len(clusters)
            clusters = self.update_curves(clusters)
            clusters = self.merge_similar(clusters)
            objective = self.objective(clusters)
            if (self.objective_trace and events == (len(self.dissolved), len(clusters))
                    and objective > self.objective_trace[-1] * (1 + 1e-9) + 1e-12):
                logger.debug('refinement objective rose from %.6g to %.6g', self.objective_trace[-1], objective)
            self.objective_trace.append(objective)
            signature = self._signature(clusters)
            logger.info('refinement round %d: %d clusters, %d points assigned, objective %.4g',
                        round_no, len(clusters), int(np.count_nonzero(labels != UNASSIGNED)), objective)
            if signature == previous:
                stable = True
                break
            previous = signature
        self.rounds, self.stable = round_no, stable

        kept = []
        for cluster in clusters:
            if cluster.curve.length < cfg.min_wire_length:
                self.dissolve(cluster.cluster_id, 'too_short', cluster.size)
                continue
            cluster.stable = stable
            kept.append(cluster)
        kept.sort(key=lambda c: c.cluster_id)

        labels = np.full(len(self.xyz), UNASSIGNED)
        for k, cluster in enumerate(kept):
            labels[cluster.member_indices] = k
        labels = self.extend_ends(kept, labels)
        unassigned = np.flatnonzero(labels == UNASSIGNED)
        return kept, unassigned


def refine(xyz, groups, cfg=None, n_jobs=1):
    """Final clusters and unassigned indices; see WireRefiner.refine."""
    return WireRefiner(xyz, cfg, n_jobs).refine(groups)
