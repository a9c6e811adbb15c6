import json
import os
import tempfile

import numpy as np
import pandas as pd
from django.test import SimpleTestCase

from catenary.curve_utils.core import CatenaryCurve, PlaneFrame
from wires.exceptions import PointFormatError, UnknownFormatError
from wires.io import RECORD_DTYPE, export, feature_collection, load_points, write_points
from wires.ml_utils.densify import densify
from wires.pipeline import WirePolyline


class TempDirMixin:
    def setUp(self):
        super().setUp()
        self._tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self._tmp.cleanup)

    def path(self, name, content=None):
        path = os.path.join(self._tmp.name, name)
        if content is not None:
            with open(path, 'w', encoding='utf-8') as fh:
                fh.write(content)
        return path


class LoadPointsTests(TempDirMixin, SimpleTestCase):
    def test_class_filter(self):
        path = self.path('pts.csv', 'x,y,z,class\n1,2,3,14\n4,5,6,2\n7,8,9,14\n')
        cloud = load_points(path, class_filter=14)
        np.testing.assert_array_equal(cloud.xyz, [[1, 2, 3], [7, 8, 9]])
        self.assertEqual(cloud.source_rows.tolist(), [2, 4])
        self.assertEqual(len(load_points(path)), 3)

    def test_missing_class_column_warns(self):
        path = self.path('pts.csv', 'x,y,z\n1,2,3\n4,5,6\n')
        with self.assertLogs('wires.io', level='WARNING') as logs:
            cloud = load_points(path, class_filter=14)
        self.assertEqual(len(cloud), 2)
        self.assertIn('no class column', logs.output[0])

    def test_headerless_csv(self):
        path = self.path('pts.xyz', '1.5,2,3,14\n4,5,6.25,7\n')
        cloud = load_points(path)
        np.testing.assert_array_equal(cloud.xyz, [[1.5, 2, 3], [4, 5, 6.25]])
        self.assertEqual(cloud.classes.tolist(), [14, 7])
        self.assertEqual(cloud.source_rows.tolist(), [1, 2])

    def test_malformed_line_reported(self):
        path = self.path('pts.csv', 'x,y,z,class\n1,2,3,14\n1,abc,3,14\n')
        with self.assertRaises(PointFormatError) as ctx:
            load_points(path)
        self.assertEqual(ctx.exception.line, 3)

    def test_bad_class_reported(self):
        path = self.path('pts.csv', 'x,y,z,class\n1,2,3,14\n1,2,3,1.5\n')
        with self.assertRaises(PointFormatError) as ctx:
            load_points(path)
        self.assertEqual(ctx.exception.line, 3)

    def test_missing_columns(self):
        path = self.path('pts.csv', 'x,y,height\n1,2,3\n')
        with self.assertRaises(PointFormatError):
            load_points(path)

    def test_empty_file(self):
        self.assertEqual(len(load_points(self.path('empty.csv', ''))), 0)

    def test_binary_round_trip(self):
        xyz = np.array([[1000.125, 2000.5, 31.0], [1001.0, 2001.0, 32.75]])
        path = self.path('pts.bin')
        write_points(path, xyz, [14, 3])
        cloud = load_points(path)
        np.testing.assert_array_equal(cloud.xyz, xyz)
        self.assertEqual(cloud.classes.tolist(), [14, 3])

    def test_truncated_binary(self):
        path = self.path('pts.bin')
        records = np.zeros(3, dtype=RECORD_DTYPE)
        with open(path, 'wb') as fh:
            fh.write(records.tobytes()[:-5])
        with self.assertRaises(PointFormatError) as ctx:
            load_points(path)
        self.assertEqual(ctx.exception.line, 3)

    def test_unknown_format(self):
        with self.assertRaises(UnknownFormatError):
            load_points(self.path('pts.las', 'x'))
        with self.assertRaises(UnknownFormatError):
            load_points(self.path('pts.csv', 'x'), fmt='las')

    def test_csv_extra_columns(self):
        path = self.path('pts.csv')
        write_points(path, np.ones((2, 3)), extra={'curve_id': [4, 5]})
        frame = pd.read_csv(path)
        self.assertEqual(list(frame.columns), ['x', 'y', 'z', 'class', 'curve_id'])
        self.assertEqual(frame['curve_id'].tolist(), [4, 5])


def sample_wire(wire_id=0):
    frame = PlaneFrame.from_axes([1000.0, 2000.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    curve = CatenaryCurve(frame, -170.0, 200.0, 40.0, 0.0, 80.0)
    return WirePolyline(wire_id=wire_id, vertices=densify(curve, 0.01), source_cluster=wire_id + 10,
                        curve=curve, rms=0.02, point_count=160)


class ExportTests(TempDirMixin, SimpleTestCase):
    def test_empty_feature_collection(self):
        path = self.path('out.geojson')
        export([], path)
        with open(path, encoding='utf-8') as fh:
            data = json.load(fh)
        self.assertEqual(data, {'type': 'FeatureCollection', 'features': []})

    def test_geojson_coordinates_survive(self):
        wires = [sample_wire(0), sample_wire(1)]
        path = self.path('out.geojson')
        export(wires, path)
        with open(path, encoding='utf-8') as fh:
            data = json.load(fh)
        self.assertEqual(len(data['features']), 2)
        feature = data['features'][1]
        self.assertEqual(feature['geometry']['type'], 'LineString')
        self.assertEqual(feature['properties']['wire_id'], 1)
        self.assertEqual(feature['properties']['cluster_id'], 11)
        np.testing.assert_allclose(feature['geometry']['coordinates'], wires[1].vertices, rtol=1e-12)

    def test_feature_collection_is_valid(self):
        self.assertTrue(feature_collection([sample_wire()]).is_valid)

    def test_csv_rows(self):
        wires = [sample_wire(0), sample_wire(1)]
        path = self.path('out.csv')
        export(wires, path)
        frame = pd.read_csv(path)
        self.assertEqual(list(frame.columns), ['wire_id', 'seq', 'x', 'y', 'z'])
        self.assertEqual(len(frame), sum(len(w.vertices) for w in wires))
        self.assertEqual(sorted(frame['wire_id'].unique().tolist()), [0, 1])
        np.testing.assert_array_equal(frame[frame['wire_id'] == 0][['x', 'y', 'z']].to_numpy(), wires[0].vertices)

    def test_unknown_wire_format(self):
        with self.assertRaises(UnknownFormatError):
            export([], self.path('out.shp'))
