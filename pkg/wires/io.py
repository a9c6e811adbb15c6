"""
Point input and wire output.

Points come from CSV (x,y,z[,class], header optional) or from fixed
little-endian records of three float64 coordinates and a uint8 class.
Wires go out as a GeoJSON FeatureCollection of 3D LineStrings or as CSV
rows wire_id,seq,x,y,z.
"""
from dataclasses import dataclass
import logging
from pathlib import Path
import re

import geojson
import numpy as np
import pandas as pd

from wires.exceptions import PointFormatError, UnknownFormatError

logger = logging.getLogger(__name__)

RECORD_DTYPE = np.dtype([('x', '<f8'), ('y', '<f8'), ('z', '<f8'), ('class', 'u1')])
CSV_FLOAT_FORMAT = '%.17g'
GEOJSON_PRECISION = 15
POINT_FORMATS = ('csv', 'binary')
WIRE_FORMATS = ('geojson', 'csv')
_EXTENSIONS = {'.csv': 'csv', '.txt': 'csv', '.xyz': 'csv', '.bin': 'binary', '.pts': 'binary'}
_PARSER_LINE = re.compile(r'line (\d+)')


@dataclass
class PointCloud:
    """
    Attributes:
        xyz: (n, 3) coordinates in meters
        classes: (n,) class codes, or None when the input had none
        source_rows: (n,) 1-based line (CSV) or record (binary) numbers
    """
    xyz: np.ndarray
    classes: np.ndarray
    source_rows: np.ndarray

    def __len__(self):
        return len(self.xyz)

    def filter_class(self, class_code):
        """Keep points of class_code; without a class column every point is kept and a warning logged."""
        if class_code is None:
            return self
        if self.classes is None:
            logger.warning('no class column in input; class filter %d ignored', class_code)
            return self
        keep = self.classes == class_code
        logger.info('class filter %d keeps %d of %d points', class_code, int(keep.sum()), len(self))
        return PointCloud(self.xyz[keep], self.classes[keep], self.source_rows[keep])


def detect_format(path, fmt=None, choices=POINT_FORMATS):
    if fmt:
        if fmt not in choices:
            raise UnknownFormatError(f'unknown format {fmt!r}; expected one of {choices}')
        return fmt
    suffix = Path(path).suffix.lower()
    if suffix == '.json' or suffix == '.geojson':
        guessed = 'geojson'
    else:
        guessed = _EXTENSIONS.get(suffix)
    if guessed not in choices:
        raise UnknownFormatError(f'cannot tell the format of {path}; pass it explicitly ({", ".join(choices)})')
    return guessed


def _has_header(path):
    with open(path, encoding='utf-8') as fh:
        first = fh.readline()
    try:
        [float(v) for v in first.strip().split(',') if v.strip()]
    except ValueError:
        return True
    return False


def read_csv_points(path):
    header = _has_header(path)
    try:
        frame = pd.read_csv(path, header=0 if header else None, dtype=str, skip_blank_lines=False,
                            keep_default_na=False)
    except pd.errors.EmptyDataError:
        return PointCloud(np.zeros((0, 3)), None, np.zeros(0, dtype=int))
    except pd.errors.ParserError as e:
        match = _PARSER_LINE.search(str(e))
        raise PointFormatError(f'wrong number of fields ({e})', int(match.group(1)) if match else None) from e

    if header:
        frame.columns = [str(c).strip().lower() for c in frame.columns]
        if 'classification' in frame.columns and 'class' not in frame.columns:
            frame = frame.rename(columns={'classification': 'class'})
        missing = [c for c in ('x', 'y', 'z') if c not in frame.columns]
        if missing:
            raise PointFormatError(f'missing columns {missing}', 1)
    else:
        if frame.shape[1] < 3:
            raise PointFormatError('expected at least x,y,z', 1)
        frame.columns = ['x', 'y', 'z', 'class'][:frame.shape[1]] + [f'extra_{i}' for i in range(frame.shape[1] - 4)]

    first_line = 2 if header else 1
    rows = np.arange(len(frame)) + first_line
    coords = frame[['x', 'y', 'z']].apply(lambda col: pd.to_numeric(col.str.strip(), errors='coerce'))
    xyz = coords.to_numpy(dtype=float)
    bad = ~np.isfinite(xyz).all(axis=1)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise PointFormatError(f'bad coordinates {frame.iloc[k][["x", "y", "z"]].tolist()}', int(rows[k]))

    classes = None
    if 'class' in frame.columns:
        parsed = pd.to_numeric(frame['class'].str.strip(), errors='coerce')
        bad = parsed.isna().to_numpy() | (parsed.to_numpy() % 1 != 0)
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise PointFormatError(f'bad class {frame["class"].iloc[k]!r}', int(rows[k]))
        classes = parsed.to_numpy().astype(int)
    return PointCloud(xyz, classes, rows)


def read_binary_points(path):
    raw = Path(path).read_bytes()
    whole, extra = divmod(len(raw), RECORD_DTYPE.itemsize)
    if extra:
        raise PointFormatError(f'truncated record ({extra} of {RECORD_DTYPE.itemsize} bytes)', whole + 1)
    records = np.frombuffer(raw, dtype=RECORD_DTYPE)
    xyz = np.column_stack([records['x'], records['y'], records['z']])
    bad = ~np.isfinite(xyz).all(axis=1)
    if bad.any():
        raise PointFormatError('non-finite coordinates', int(np.flatnonzero(bad)[0]) + 1)
    return PointCloud(xyz, records['class'].astype(int), np.arange(1, whole + 1))


def load_points(path, fmt=None, class_filter=None):
    """
    Args:
        path: input file
        fmt: 'csv' or 'binary'; guessed from the extension when omitted
        class_filter: class code to keep, or None for every point

    Returns:
        PointCloud in input order

    Raises:
        UnknownFormatError, PointFormatError, OSError
    """
    fmt = detect_format(path, fmt)
    cloud = read_csv_points(path) if fmt == 'csv' else read_binary_points(path)
    logger.info('loaded %d points from %s', len(cloud), path)
    return cloud.filter_class(class_filter)


def write_points(path, xyz, classes=None, fmt=None, extra=None):
    """Write points as CSV (with a header) or as binary records; extra adds CSV columns."""
    fmt = detect_format(path, fmt)
    xyz = np.asarray(xyz, dtype=float).reshape(-1, 3)
    classes = np.zeros(len(xyz), dtype=int) if classes is None else np.asarray(classes)
    if fmt == 'binary':
        records = np.empty(len(xyz), dtype=RECORD_DTYPE)
        records['x'], records['y'], records['z'] = xyz[:, 0], xyz[:, 1], xyz[:, 2]
        records['class'] = classes
        Path(path).write_bytes(records.tobytes())
        return
    frame = pd.DataFrame({'x': xyz[:, 0], 'y': xyz[:, 1], 'z': xyz[:, 2], 'class': classes})
    for name, values in (extra or {}).items():
        frame[name] = values
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)


def wire_feature(wire):
    return geojson.Feature(
        geometry=geojson.LineString([tuple(map(float, v)) for v in wire.vertices], precision=GEOJSON_PRECISION),
        properties=wire.properties(),
    )


def feature_collection(wires):
    return geojson.FeatureCollection([wire_feature(w) for w in wires])


def wires_frame(wires):
    rows = [
        (w.wire_id, seq, float(v[0]), float(v[1]), float(v[2]))
        for w in wires for seq, v in enumerate(w.vertices)
    ]
    return pd.DataFrame(rows, columns=['wire_id', 'seq', 'x', 'y', 'z'])


def export(wires, path, fmt=None):
    """
    Write wires as GeoJSON or CSV.

    Raises:
        UnknownFormatError, OSError
    """
    fmt = detect_format(path, fmt, WIRE_FORMATS)
    if fmt == 'geojson':
        with open(path, 'w', encoding='utf-8') as fh:
            geojson.dump(feature_collection(wires), fh)
    else:
        wires_frame(wires).to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    logger.info('wrote %d wires to %s', len(wires), path)
