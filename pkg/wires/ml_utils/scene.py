"""
Synthetic power-line scenes with ground truth.

A scene is a straight line of towers carrying parallel wires. Every wire
hangs as one catenary per span between its attachment points; points are
drawn along each catenary with Gaussian noise normal to the curve, and
uniform outliers are scattered over the scene's bounding box.
"""
from dataclasses import asdict, dataclass, field
import logging
import math

import numpy as np
import pandas as pd

from catenary.curve_utils.core import CatenaryCurve, PlaneFrame, evaluate
from wires.exceptions import SceneSpecError

logger = logging.getLogger(__name__)

OUTLIER_LABEL = -1
OUTLIER_MARGIN = 5.0


@dataclass(frozen=True)
class GapSpec:
    """A stretch of one wire's span with no points: start is a fraction of the span."""
    wire: int
    span: int
    start: float
    length: float


@dataclass(frozen=True)
class SceneSpec:
    wires: int = 6
    spans: int = 3
    span_length: float = 100.0
    spacing: float = 2.0
    tower_height: float = 30.0
    tower_heights: tuple = ()
    a: float = 500.0
    point_spacing: float = 0.5
    noise: float = 0.02
    outlier_fraction: float = 0.0
    gaps: tuple = ()
    seed: int = 0
    origin: tuple = (0.0, 0.0, 0.0)
    heading_degrees: float = 30.0
    class_code: int = 14

    def __post_init__(self):
        if self.wires < 1 or self.spans < 1:
            raise SceneSpecError('a scene needs at least one wire and one span')
        for name in ('span_length', 'spacing', 'a', 'point_spacing'):
            if not getattr(self, name) > 0:
                raise SceneSpecError(f'{name} must be positive')
        if self.noise < 0 or not 0 <= self.outlier_fraction < 1:
            raise SceneSpecError('noise must be >= 0 and outlier_fraction in [0, 1)')
        if self.tower_heights and len(self.tower_heights) != self.spans + 1:
            raise SceneSpecError(f'tower_heights needs {self.spans + 1} entries')
        if len(self.origin) != 3:
            raise SceneSpecError('origin must have three coordinates')
        for gap in self.gaps:
            if not (0 <= gap.wire < self.wires and 0 <= gap.span < self.spans):
                raise SceneSpecError(f'gap {gap} refers to a missing wire or span')
            if gap.length <= 0 or not 0 <= gap.start < 1:
                raise SceneSpecError(f'gap {gap} needs start in [0, 1) and a positive length')

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise SceneSpecError(f'unknown scene keys: {sorted(unknown)}')
        try:
            data['gaps'] = tuple(GapSpec(**g) for g in data.get('gaps', ()))
            data['tower_heights'] = tuple(float(h) for h in data.get('tower_heights', ()))
            data['origin'] = tuple(float(v) for v in data.get('origin', (0.0, 0.0, 0.0)))
        except (TypeError, ValueError) as e:
            raise SceneSpecError(f'invalid scene spec: {e}') from e
        return cls(**data)

    def to_dict(self):
        return asdict(self)

    @property
    def curve_count(self):
        return self.wires * self.spans


@dataclass
class Scene:
    """
    Attributes:
        points: (n, 3) coordinates
        curve_ids: (n,) source curve of every point, OUTLIER_LABEL for outliers
        curves: ground-truth CatenaryCurve per curve id
        spec: the SceneSpec the scene was drawn from
    """
    points: np.ndarray
    curve_ids: np.ndarray
    curves: list
    spec: SceneSpec
    wire_of_curve: list = field(default_factory=list)

    def to_frame(self):
        """Points table with columns x, y, z, class, curve_id."""
        return pd.DataFrame({
            'x': self.points[:, 0],
            'y': self.points[:, 1],
            'z': self.points[:, 2],
            'class': np.full(len(self.points), self.spec.class_code, dtype=np.uint8),
            'curve_id': self.curve_ids,
        })

    def truth(self):
        return {
            'spec': self.spec.to_dict(),
            'point_count': int(len(self.points)),
            'outlier_count': int(np.count_nonzero(self.curve_ids == OUTLIER_LABEL)),
            'curves': [
                {'curve_id': k, 'wire': self.wire_of_curve[k], 'span': k % self.spec.spans,
                 'curve': curve.to_dict()}
                for k, curve in enumerate(self.curves)
            ],
        }


def span_vertex(a, span_length, dh):
    """Vertex abscissa m of the catenary rising by dh over a span starting at x = 0."""
    return span_length / 2.0 - a * math.asinh(dh / (2.0 * a * math.sinh(span_length / (2.0 * a))))


def _span_curves(spec):
    heading = math.radians(spec.heading_degrees)
    along = np.array([math.cos(heading), math.sin(heading), 0.0])
    across = np.array([-math.sin(heading), math.cos(heading), 0.0])
    heights = spec.tower_heights or (spec.tower_height,) * (spec.spans + 1)
    origin = np.asarray(spec.origin, dtype=float)

    curves, wire_of_curve = [], []
    for w in range(spec.wires):
        offset = spec.spacing * (w - (spec.wires - 1) / 2.0)
        for s in range(spec.spans):
            start = origin + offset * across + s * spec.span_length * along
            frame = PlaneFrame.from_axes(start, along, across)
            m = span_vertex(spec.a, spec.span_length, heights[s + 1] - heights[s])
            c = heights[s] - spec.a * math.cosh(m / spec.a)
            curves.append(CatenaryCurve(frame, c, spec.a, m, 0.0, spec.span_length))
            wire_of_curve.append(w)
    return curves, wire_of_curve


def _arc_positions(curve, spacing, rng):
    """In-plane abscissae roughly spacing meters apart along the arc."""
    fine = np.linspace(curve.x_min, curve.x_max, 2049)
    arc = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(curve.point_at(fine), axis=0), axis=1))])
    offsets = np.arange(rng.uniform(0.0, spacing), arc[-1], spacing)
    return np.interp(offsets, arc, fine)


def _normal_noise(curve, x, sigma, rng):
    """Gaussian offsets orthogonal to the curve's tangent."""
    slope = np.sinh((x - curve.m) / curve.a)
    norm = np.sqrt(1.0 + slope ** 2)
    in_plane = np.multiply.outer(-slope / norm, curve.frame.axis_x) + np.multiply.outer(1.0 / norm, curve.frame.axis_y)
    e1 = rng.normal(0.0, sigma, len(x)) if sigma else np.zeros(len(x))
    e2 = rng.normal(0.0, sigma, len(x)) if sigma else np.zeros(len(x))
    return e1[:, None] * in_plane + e2[:, None] * curve.frame.normal


def generate_scene(spec):
    """
    Args:
        spec: SceneSpec or a dict accepted by SceneSpec.from_dict

    Returns:
        Scene; the same spec always gives the same scene

    Raises:
        SceneSpecError
    """
    if not isinstance(spec, SceneSpec):
        spec = SceneSpec.from_dict(spec)
    rng = np.random.default_rng(spec.seed)
    curves, wire_of_curve = _span_curves(spec)

    chunks, labels = [], []
    for k, curve in enumerate(curves):
        x = _arc_positions(curve, spec.point_spacing, rng)
        for gap in spec.gaps:
            if gap.wire == wire_of_curve[k] and gap.span == k % spec.spans:
                lo = gap.start * spec.span_length
                x = x[(x < lo) | (x > lo + gap.length)]
        xyz = curve.frame.to_world(x, evaluate(curve, x)).reshape(-1, 3)
        xyz = xyz + _normal_noise(curve, x, spec.noise, rng)
        chunks.append(xyz)
        labels.append(np.full(len(xyz), k))

    points = np.concatenate(chunks) if chunks else np.zeros((0, 3))
    curve_ids = np.concatenate(labels) if labels else np.zeros(0, dtype=int)
    n_outliers = int(round(spec.outlier_fraction * len(points)))
    if n_outliers:
        lo = points.min(axis=0) - OUTLIER_MARGIN
        hi = points.max(axis=0) + OUTLIER_MARGIN
        points = np.concatenate([points, rng.uniform(lo, hi, size=(n_outliers, 3))])
        curve_ids = np.concatenate([curve_ids, np.full(n_outliers, OUTLIER_LABEL)])

    logger.info('synthetic scene: %d curves, %d points, %d outliers', len(curves), len(points), n_outliers)
    return Scene(points, curve_ids.astype(int), curves, spec, wire_of_curve)


def membership_accuracy(curve_ids, wire_labels):
    """
    Fraction of non-outlier points whose extracted wire is the one holding
    most of their source curve's points.
    """
    curve_ids = np.asarray(curve_ids)
    wire_labels = np.asarray(wire_labels)
    real = curve_ids != OUTLIER_LABEL
    if not real.any():
        return 1.0
    table = pd.crosstab(curve_ids[real], wire_labels[real])
    majority = table.idxmax(axis=1)
    correct = sum(int(table.at[cid, majority[cid]]) for cid in table.index if majority[cid] != OUTLIER_LABEL)
    return correct / int(real.sum())
