"""
Extraction configuration: settings.WIRE_EXTRACTION defaults, then an
optional JSON file, then command-line flags.
"""
from dataclasses import asdict, dataclass, fields
import json
import logging
import re

from django.conf import settings

from catenary.curve_utils.closest_point import METHODS
from catenary.curve_utils.fitting import FitConfig
from wires.exceptions import ConfigurationError
from wires.ml_utils.reduction import ReductionConfig
from wires.ml_utils.refinement import RefineConfig
from wires.ml_utils.segmentation import SegmentPenaltyConfig

logger = logging.getLogger(__name__)

UNITS = {'mm': 1e-3, 'cm': 1e-2, 'm': 1.0, 'km': 1e3}
_LENGTH_RE = re.compile(r'^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(mm|cm|km|m)?\s*$')

LENGTH_FIELDS = (
    'point_tolerance', 'wire_separation', 'max_sampling_gap', 'output_line_tolerance',
    'min_wind_span', 'end_point_search_radius', 'min_wire_length',
)

# command-line and JSON spellings
ALIASES = {
    'class': 'wire_class_code',
    'class_code': 'wire_class_code',
    'tolerance': 'point_tolerance',
    'separation': 'wire_separation',
    'max_gap': 'max_sampling_gap',
    'line_tol': 'output_line_tolerance',
    'wind_span': 'min_wind_span',
    'max_angle': 'max_deviation_angle',
    'min_length': 'min_wire_length',
    'end_radius': 'end_point_search_radius',
    'method': 'closest_point_method',
    'jobs': 'n_jobs',
}


def parse_length(value):
    """Meters from a number or a string such as '80cm', '1m' or '0.015 km'."""
    if isinstance(value, bool):
        raise ConfigurationError(f'not a length: {value!r}')
    if isinstance(value, (int, float)):
        return float(value)
    match = _LENGTH_RE.match(str(value))
    if not match:
        raise ConfigurationError(f'not a length: {value!r}')
    number, unit = match.groups()
    return float(number) * UNITS[unit or 'm']


@dataclass(frozen=True)
class PipelineConfig:
    wire_class_code: int = 14
    point_tolerance: float = 0.8
    wire_separation: float = 1.0
    max_sampling_gap: float = 15.0
    output_line_tolerance: float = 0.01
    wind_correction: bool = True
    min_wind_span: float = 60.0
    max_deviation_angle: float = 10.0
    end_point_search_radius: float = 10.0
    min_wire_length: float = 5.0
    n_min: int = 5
    n_max: int = 50
    ratio_threshold: float = 0.25
    small_partition_size: int = None
    merge_rms_factor: float = 1.25
    max_rounds: int = 20
    min_fit_points: int = 8
    closest_point_method: str = 'circle'
    segment_window: int = 400
    n_jobs: int = 1
    seed: int = None

    def __post_init__(self):
        for name in LENGTH_FIELDS:
            if not getattr(self, name) > 0:
                raise ConfigurationError(f'{name} must be positive, got {getattr(self, name)}')
        if self.output_line_tolerance >= self.point_tolerance:
            raise ConfigurationError('output_line_tolerance must be smaller than point_tolerance')
        if self.closest_point_method not in METHODS:
            raise ConfigurationError(f'closest_point_method must be one of {METHODS}')
        if self.n_jobs == 0:
            raise ConfigurationError('n_jobs must be non-zero')
        try:
            self.fit_config()
            self.reduction_config()
            self.penalty_config()
            self.refine_config()
        except ValueError as e:
            raise ConfigurationError(str(e)) from e

    def fit_config(self):
        return FitConfig(
            deviation_threshold=self.point_tolerance,
            wind_correction=self.wind_correction,
            min_wind_span=self.min_wind_span,
            max_deviation_angle=self.max_deviation_angle,
            min_points=self.min_fit_points,
            method=self.closest_point_method,
        )

    def reduction_config(self):
        return ReductionConfig(self.n_min, self.n_max, self.ratio_threshold)

    def penalty_config(self):
        return SegmentPenaltyConfig(
            deviation_threshold=self.point_tolerance,
            small_partition_size=self.small_partition_size or self.n_min,
            window=self.segment_window,
            fit=self.fit_config(),
        )

    def refine_config(self):
        return RefineConfig(
            deviation_threshold=self.point_tolerance,
            wire_separation=self.wire_separation,
            max_rounds=self.max_rounds,
            merge_rms_factor=self.merge_rms_factor,
            min_wire_length=self.min_wire_length,
            end_point_search_radius=self.end_point_search_radius,
            fit=self.fit_config(),
        )

    def to_dict(self):
        return asdict(self)

    @classmethod
    def field_names(cls):
        return {f.name for f in fields(cls)}

    @classmethod
    def normalize(cls, values, source):
        """Map aliases and upper-case settings keys to field names and parse lengths."""
        known = cls.field_names()
        out = {}
        for key, value in values.items():
            if value is None:
                continue
            name = key.lower().replace('-', '_')
            name = ALIASES.get(name, name)
            if name not in known:
                raise ConfigurationError(f'{source}: unknown option {key!r}')
            out[name] = parse_length(value) if name in LENGTH_FIELDS else value
        return out

    @classmethod
    def load(cls, config_path=None, **overrides):
        """
        Settings defaults, then the JSON file at config_path, then overrides.

        Raises:
            ConfigurationError
        """
        values = cls.normalize(getattr(settings, 'WIRE_EXTRACTION', {}), 'settings.WIRE_EXTRACTION')
        if config_path:
            try:
                with open(config_path, encoding='utf-8') as fh:
                    data = json.load(fh)
            except OSError as e:
                raise ConfigurationError(f'cannot read config file {config_path}: {e}') from e
            except json.JSONDecodeError as e:
                raise ConfigurationError(f'{config_path}: invalid JSON ({e})') from e
            if not isinstance(data, dict):
                raise ConfigurationError(f'{config_path}: expected a JSON object')
            values.update(cls.normalize(data, config_path))
        values.update(cls.normalize(overrides, 'command line'))
        try:
            config = cls(**values)
        except TypeError as e:
            raise ConfigurationError(str(e)) from e
        logger.debug('pipeline config: %s', config.to_dict())
        return config
