"""
Optimal division of a combined polyline into catenary partitions.

Each partition is scored by a single catenary fitted to all of its points,
-sum(eps^2) / (2 n T^2), with an extra log(1/2) for small partitions, and
every partition costs log(1/2) more. A dynamic program over every
combined-point boundary finds the best total.
"""
from dataclasses import dataclass, field
import logging
import math

import numpy as np
from sklearn.decomposition import PCA

from catenary.curve_utils.fitting import CatenaryFitter, FitConfig
from catenary.exceptions import CatenaryError, NotCatenaryError

logger = logging.getLogger(__name__)

LOG_HALF = math.log(0.5)


@dataclass(frozen=True)
class SegmentPenaltyConfig:
    deviation_threshold: float = 0.8
    small_partition_size: int = 5
    partition_log_prob: float = LOG_HALF
    # longest partition, in combined points
    window: int = 400
    fit: FitConfig = field(default_factory=FitConfig)

    def __post_init__(self):
        if not self.deviation_threshold > 0:
            raise ValueError('deviation_threshold must be positive')
        if self.small_partition_size < 1:
            raise ValueError('small_partition_size must be at least 1')
        if not self.partition_log_prob < 0:
            raise ValueError('partition_log_prob must be negative')
        if self.window < 1:
            raise ValueError('window must be at least 1')


@dataclass(frozen=True)
class Division:
    """
    Cuts are combined-point indices where a new partition starts; the first
    partition always starts at 0 and is not listed.
    """
    cut_indices: tuple
    partition_penalties: tuple
    total_score: float

    def partitions(self, count):
        """(start, stop) combined-point ranges of a polyline with count combined points."""
        bounds = (0,) + tuple(self.cut_indices) + (count,)
        return list(zip(bounds[:-1], bounds[1:]))


def straight_deviations(xyz):
    """Distances of xyz from their total-least-squares line."""
    xyz = np.asarray(xyz, dtype=float)
    if len(xyz) < 2 or np.ptp(xyz, axis=0).max() == 0:
        return np.zeros(len(xyz))
    pca = PCA(n_components=1).fit(xyz)
    centred = xyz - pca.mean_
    along = centred @ pca.components_[0]
    return np.linalg.norm(centred - np.outer(along, pca.components_[0]), axis=1)


def penalty_terms(xyz, cfg, size, fitter):
    """
    Returns:
        (penalty, sse): sse is the squared deviation sum of the catenary
        fit, None when the run was scored against its line or is impossible
    """
    small = size <= cfg.small_partition_size
    sse = None
    try:
        curve, _, _ = fitter.fit_once(xyz)
        _, eps = fitter.distances(curve, xyz)
        sse = float(np.sum(eps ** 2))
        total = sse
    except NotCatenaryError as e:
        if e.reason != NotCatenaryError.STRAIGHT and not small:
            return -math.inf, None
        total = float(np.sum(straight_deviations(xyz) ** 2))
    except CatenaryError:
        if not small:
            return -math.inf, None
        total = float(np.sum(straight_deviations(xyz) ** 2))

    T = cfg.deviation_threshold
    penalty = -total / (2.0 * len(xyz) * T * T)
    if small:
        penalty += cfg.partition_log_prob
    return penalty, sse


def partition_penalty(points, cfg=None, size=None, fitter=None):
    """
    Log-probability of one partition.

    A catenary is fitted to all points, no outliers removed. Concave or
    degenerate runs score -inf unless small; near-straight runs and small
    unfittable runs are scored against their straight line instead.

    Args:
        points: (n, 3) member points of the run, n >= 1
        cfg: SegmentPenaltyConfig
        size: combined points in the run, compared against
            small_partition_size; defaults to n
        fitter: CatenaryFitter to reuse

    Returns:
        -sum(eps^2) / (2 n T^2), plus log(1/2) for a small run; may be -inf
    """
    cfg = cfg or SegmentPenaltyConfig()
    xyz = np.asarray(points, dtype=float).reshape(-1, 3)
    if not len(xyz):
        raise ValueError('a partition needs at least one point')
    fitter = fitter or CatenaryFitter(cfg.fit)
    return penalty_terms(xyz, cfg, len(xyz) if size is None else size, fitter)[0]


def division_score(penalties, cfg=None):
    """Sum of partition penalties plus log(1/2) per partition."""
    cfg = cfg or SegmentPenaltyConfig()
    return float(sum(penalties)) + len(penalties) * cfg.partition_log_prob


class PolylineSegmenter:
    """
    Divides combined polylines with a dynamic program over every
    combined-point boundary:

        best(j) = max over i of best(i) + penalty(i..j) + log(1/2)

    with j - i at most config.window. Each range is fitted at most once,
    and only while it could still beat best(j): a penalty never exceeds the
    small-partition term, and the squared deviations of a run are never
    below those of a run it contains.
    """

    def __init__(self, xyz, config=None):
        self.xyz = np.asarray(xyz, dtype=float)
        self.config = config or SegmentPenaltyConfig()
        self.fitter = CatenaryFitter(self.config.fit)
        self.fit_count = 0

    def segment(self, poly):
        """
        Args:
            poly: CombinedPolyline with at least one combined point

        Returns:
            Division maximising the total log-probability
        """
        cfg = self.config
        count = len(poly)
        if not count:
            raise ValueError('cannot divide an empty polyline')
        xyz = self.xyz[poly.point_indices()]
        offsets = np.concatenate([[0], np.cumsum([len(cp) for cp in poly.combined_points])])
        log_half = cfg.partition_log_prob
        scale = 2.0 * cfg.deviation_threshold ** 2

        best = np.full(count + 1, -math.inf)
        best[0] = 0.0
        back = np.zeros(count + 1, dtype=int)
        last_penalty = np.zeros(count + 1)
        # lower bound on the catenary squared deviations of run (i, j)
        floor = np.zeros(count + 1)
        fits = 0

        def upper(i, j):
            bonus = log_half if j - i <= cfg.small_partition_size else 0.0
            return best[i] + log_half + bonus - floor[i] / (scale * (offsets[j] - offsets[i]))

        def evaluate(i, j, lo):
            nonlocal fits
            penalty, sse = penalty_terms(xyz[offsets[i]:offsets[j]], cfg, j - i, self.fitter)
            fits += 1
            if sse is not None:
                floor[lo:i + 1] = np.maximum(floor[lo:i + 1], sse)
            score = best[i] + penalty + log_half
            if score > best[j]:
                best[j], back[j], last_penalty[j] = score, i, penalty

        for j in range(1, count + 1):
            lo = max(0, j - cfg.window)
            # extending the previous partition is usually best, so it goes first
            incumbent = int(back[j - 1]) if j > 1 else 0
            if incumbent >= lo and best[incumbent] > -math.inf:
                evaluate(incumbent, j, lo)
            starts = np.arange(lo, j)
            sizes = j - starts
            bounds = (best[lo:j] + log_half + np.where(sizes <= cfg.small_partition_size, log_half, 0.0)
                      - floor[lo:j] / (scale * (offsets[j] - offsets[lo:j])))
            for i in starts[bounds > best[j]][::-1]:
                if i != incumbent and upper(i, j) > best[j]:
                    evaluate(int(i), j, lo)

        if best[count] == -math.inf:
            ranges = [(0, count)]
            penalties = (penalty_terms(xyz, cfg, count, self.fitter)[0],)
        else:
            ranges = []
            j = count
            while j > 0:
                ranges.append((int(back[j]), j))
                j = int(back[j])
            ranges.reverse()
            penalties = tuple(float(last_penalty[stop]) for _, stop in ranges)

        self.fit_count += fits
        cuts = tuple(start for start, _ in ranges[1:])
        division = Division(cuts, penalties, division_score(penalties, cfg))
        logger.debug('divided %d combined points into %d partitions with %d fits, score %.3f',
                     count, len(ranges), fits, division.total_score)
        return division


def segment_polyline(poly, xyz, cfg=None):
    """Best division of poly; see PolylineSegmenter."""
    return PolylineSegmenter(xyz, cfg).segment(poly)
