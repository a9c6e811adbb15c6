"""
End-to-end wire extraction.

    spanning forest -> combined polylines -> catenary partitions
    -> curve refinement -> final fit per wire -> densified polylines
"""
from contextlib import contextmanager
from dataclasses import dataclass, field
import logging
import time

from joblib import Parallel, delayed
import numpy as np

from catenary.curve_utils.core import points_array
from wires.exceptions import InvariantViolation
from wires.ml_utils.densify import densify
from wires.ml_utils.mst import build_mst
from wires.ml_utils.reduction import GraphReducer
from wires.ml_utils.refinement import UNASSIGNED, WireRefiner
from wires.ml_utils.segmentation import PolylineSegmenter

logger = logging.getLogger(__name__)


@dataclass
class WirePolyline:
    """One extracted wire: its fitted curve and the vertices drawn from it."""
    wire_id: int
    vertices: np.ndarray
    source_cluster: int
    curve: object
    rms: float
    point_count: int
    outlier_count: int = 0
    max_abs_deviation: float = 0.0
    tilt_degrees: float = 0.0
    wind_fallback: bool = False

    @property
    def length(self):
        return float(self.curve.length)

    def properties(self):
        return {
            'wire_id': self.wire_id,
            'cluster_id': self.source_cluster,
            'rms': self.rms,
            'max_abs_deviation': self.max_abs_deviation,
            'point_count': self.point_count,
            'outlier_count': self.outlier_count,
            'length': self.length,
            'vertex_count': int(len(self.vertices)),
            'c': self.curve.c,
            'a': self.curve.a,
            'm': self.curve.m,
            'x_min': self.curve.x_min,
            'x_max': self.curve.x_max,
            'frame': self.curve.frame.to_dict(),
            'tilt_degrees': self.tilt_degrees,
            'wind_fallback': self.wind_fallback,
        }


@dataclass
class PipelineResult:
    """
    Attributes:
        wires: WirePolyline list ordered by wire_id
        report: JSON-ready diagnostics
        labels: (n,) wire_id of every input point, UNASSIGNED for points
            no wire kept
    """
    wires: list
    report: dict
    labels: np.ndarray = field(repr=False)


class _Stopwatch:
    def __init__(self):
        self.timings = {}

    @contextmanager
    def stage(self, name):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = round(time.perf_counter() - start, 6)


class WireExtractor:
    """
    Runs every stage on one point set.

    Usage:
        result = WireExtractor(config).run(xyz)
    """

    def __init__(self, config):
        self.config = config
        self.watch = _Stopwatch()

    def _partition_groups(self, xyz, polylines):
        """Index groups of every partition, with the count of those too small to fit alone."""
        cfg = self.config
        segmenter = PolylineSegmenter(xyz, cfg.penalty_config())
        if cfg.n_jobs == 1 or len(polylines) < 2:
            divisions = [segmenter.segment(poly) for poly in polylines]
        else:
            divisions = Parallel(n_jobs=cfg.n_jobs)(delayed(segmenter.segment)(poly) for poly in polylines)
        groups, small = [], 0
        for poly, division in zip(polylines, divisions):
            for start, stop in division.partitions(len(poly)):
                idx = np.concatenate([np.asarray(cp.point_indices, dtype=int)
                                      for cp in poly.combined_points[start:stop]])
                small += int(idx.size < cfg.min_fit_points)
                groups.append(np.sort(idx))
        return groups, small

    def _final_fit(self, refiner, clusters):
        """Robust fit of every refined cluster, dropping wires that end up too short."""
        final, _ = refiner.fit_groups([c.member_indices for c in clusters], ids=[c.cluster_id for c in clusters])
        kept = []
        for cluster in final:
            if cluster.curve.length < self.config.min_wire_length:
                refiner.dissolve(cluster.cluster_id, 'too_short', cluster.size)
                continue
            kept.append(cluster)
        return kept

    def run(self, points):
        cfg = self.config
        xyz = points_array(points)
        n = len(xyz)
        report = {'input_points': n, 'config': cfg.to_dict(), 'seed': cfg.seed}
        labels = np.full(n, UNASSIGNED)
        if n == 0:
            report.update(components=0, combined_polylines=0, partitions=0, small_partitions=0,
                          clusters=0, wires=[], dissolved=[], assigned_points=0, outlier_points=0,
                          unassigned_points=0, refinement={'rounds': 0, 'stable': True, 'objective': []},
                          timings={})
            logger.info('no input points; nothing to extract')
            return PipelineResult([], report, labels)

        with self.watch.stage('spanning_forest'):
            graph = build_mst(xyz, cfg.max_sampling_gap)
        components, _ = graph.components()

        with self.watch.stage('reduction'):
            polylines = GraphReducer(cfg.reduction_config()).reduce(graph)

        with self.watch.stage('segmentation'):
            groups, small = self._partition_groups(xyz, polylines)
        logger.info('segmentation: %d polylines, %d partitions, %d smaller than a fit',
                    len(polylines), len(groups), small)

        refiner = WireRefiner(xyz, cfg.refine_config(), n_jobs=cfg.n_jobs)
        with self.watch.stage('refinement'):
            clusters, _ = refiner.refine(groups)
        with self.watch.stage('final_fit'):
            clusters = self._final_fit(refiner, clusters)

        wires = []
        outliers = []
        with self.watch.stage('densify'):
            for wire_id, cluster in enumerate(clusters):
                fit = cluster.fit
                labels[cluster.member_indices] = wire_id
                outliers.append(cluster.outlier_indices)
                wires.append(WirePolyline(
                    wire_id=wire_id,
                    vertices=densify(cluster.curve, cfg.output_line_tolerance),
                    source_cluster=cluster.cluster_id,
                    curve=cluster.curve,
                    rms=cluster.rms,
                    point_count=cluster.size,
                    outlier_count=int(fit.outliers.size),
                    max_abs_deviation=cluster.max_abs_deviation,
                    tilt_degrees=fit.tilt_degrees,
                    wind_fallback=fit.wind_fallback,
                ))

        outliers = np.concatenate(outliers) if outliers else np.zeros(0, dtype=int)
        report.update(self._conservation(n, labels, outliers))
        report.update(
            components=int(components),
            combined_polylines=len(polylines),
            partitions=len(groups),
            small_partitions=small,
            clusters=len(clusters),
            wires=[self._wire_summary(w) for w in wires],
            dissolved=refiner.dissolved,
            refinement={'rounds': refiner.rounds, 'stable': refiner.stable,
                        'objective': [round(v, 9) for v in refiner.objective_trace]},
            timings=dict(self.watch.timings),
        )
        logger.info('extracted %d wires from %d points (%d assigned, %d outliers, %d unassigned)',
                    len(wires), n, report['assigned_points'], report['outlier_points'],
                    report['unassigned_points'])
        return PipelineResult(wires, report, labels)

    @staticmethod
    def _wire_summary(wire):
        return {
            'wire_id': wire.wire_id,
            'cluster_id': wire.source_cluster,
            'rms': wire.rms,
            'max_abs_deviation': wire.max_abs_deviation,
            'inliers': wire.point_count,
            'outliers': wire.outlier_count,
            'length': wire.length,
            'vertices': int(len(wire.vertices)),
            'tilt_degrees': wire.tilt_degrees,
            'wind_fallback': wire.wind_fallback,
        }

    @staticmethod
    def _conservation(n, labels, outliers):
        assigned = np.flatnonzero(labels != UNASSIGNED)
        if np.intersect1d(assigned, outliers).size or np.unique(outliers).size != outliers.size:
            raise InvariantViolation('a point is both a wire member and an outlier, or an outlier twice')
        unassigned = n - assigned.size - outliers.size
        if unassigned < 0:
            raise InvariantViolation(f'{assigned.size} assigned and {outliers.size} outliers exceed {n} points')
        return {
            'assigned_points': int(assigned.size),
            'outlier_points': int(outliers.size),
            'unassigned_points': int(unassigned),
        }


def run_pipeline(points, cfg):
    """
    Args:
        points: (n, 3) array, iterable of Point3 or a PointCloud
        cfg: PipelineConfig

    Returns:
        PipelineResult

    Raises:
        InvariantViolation when point bookkeeping does not add up
    """
    xyz = getattr(points, 'xyz', points)
    return WireExtractor(cfg).run(xyz)
