from contextlib import redirect_stderr
from io import StringIO
import json
import os
import tempfile

import pandas as pd
from django.core.management import call_command, load_command_class
from django.core.management.base import CommandError
from django.test import TestCase

from wires.models import ExtractedWire, ExtractionRun

SCENE = {'wires': 1, 'spans': 1, 'span_length': 120.0, 'a': 200.0, 'point_spacing': 1.0,
         'origin': [1000.0, 2000.0, 0.0]}


class CommandTestCase(TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self._tmp.cleanup)

    def path(self, name, content=None):
        path = os.path.join(self._tmp.name, name)
        if content is not None:
            with open(path, 'w', encoding='utf-8') as fh:
                fh.write(content)
        return path

    def call(self, *args, **kwargs):
        return call_command(*args, stdout=StringIO(), stderr=StringIO(), **kwargs)

    def synth(self, name='pts.csv', seed=None, **overrides):
        spec = self.path(f'{name}.spec.json', json.dumps({**SCENE, **overrides}))
        out, truth = self.path(name), self.path(f'{name}.truth.json')
        self.call('synth', spec, out=out, truth=truth, seed=seed)
        return out, truth

    def read_bytes(self, path):
        with open(path, 'rb') as fh:
            return fh.read()


class SynthCommandTests(CommandTestCase):
    def test_same_seed_same_files(self):
        first, first_truth = self.synth('a.csv', seed=3)
        second, second_truth = self.synth('b.csv', seed=3)
        third, _ = self.synth('c.csv', seed=4)
        self.assertEqual(self.read_bytes(first), self.read_bytes(second))
        self.assertEqual(self.read_bytes(first_truth), self.read_bytes(second_truth))
        self.assertNotEqual(self.read_bytes(first), self.read_bytes(third))

    def test_points_carry_curve_ids(self):
        out, truth = self.synth()
        frame = pd.read_csv(out)
        self.assertEqual(list(frame.columns), ['x', 'y', 'z', 'class', 'curve_id'])
        with open(truth, encoding='utf-8') as fh:
            self.assertEqual(json.load(fh)['point_count'], len(frame))

    def test_bad_spec(self):
        spec = self.path('bad.json', json.dumps({'wires': 0}))
        with self.assertRaises(CommandError) as ctx:
            self.call('synth', spec, out=self.path('x.csv'), truth=self.path('x.json'))
        self.assertEqual(ctx.exception.returncode, 1)


class ExtractCommandTests(CommandTestCase):
    def test_end_to_end(self):
        points, _ = self.synth()
        out = self.path('wires.geojson')
        self.call('extract', points, out=out, no_wind=True, save=True)

        with open(out, encoding='utf-8') as fh:
            collection = json.load(fh)
        self.assertEqual(len(collection['features']), 1)
        with open(f'{out}.report.json', encoding='utf-8') as fh:
            report = json.load(fh)
        self.assertEqual(report['assigned_points'] + report['outlier_points'] + report['unassigned_points'],
                         report['input_points'])
        self.assertIn('runtime_seconds', report)

        run = ExtractionRun.objects.get()
        self.assertTrue(run.conserved)
        self.assertEqual(run.wire_count, 1)
        self.assertEqual(ExtractedWire.objects.filter(run=run).count(), 1)
        self.assertEqual(len(run.geojson['features']), 1)

    def test_csv_output_and_report_path(self):
        points, _ = self.synth()
        out, report = self.path('wires.csv'), self.path('report.json')
        self.call('extract', points, out=out, report=report, no_wind=True, tolerance='50cm')
        self.assertEqual(list(pd.read_csv(out).columns), ['wire_id', 'seq', 'x', 'y', 'z'])
        with open(report, encoding='utf-8') as fh:
            self.assertEqual(json.load(fh)['config']['point_tolerance'], 0.5)
        self.assertFalse(ExtractionRun.objects.exists())

    def test_missing_input_is_io_error(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('extract', self.path('missing.csv'), out=self.path('w.geojson'))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_malformed_input_is_io_error(self):
        points = self.path('bad.csv', 'x,y,z,class\n1,2,3,14\n1,two,3,14\n')
        with self.assertRaises(CommandError) as ctx:
            self.call('extract', points, out=self.path('w.geojson'))
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn('line 3', str(ctx.exception))

    def test_bad_option_is_usage_error(self):
        points, _ = self.synth()
        with self.assertRaises(CommandError) as ctx:
            self.call('extract', points, out=self.path('w.geojson'), tolerance='a lot')
        self.assertEqual(ctx.exception.returncode, 1)

    def test_bad_arguments_are_usage_errors(self):
        points, _ = self.synth()
        for args in ((points, '--out', self.path('w.xml'), '--format', 'xml'), (points,), ()):
            with self.subTest(args=args), self.assertRaises(CommandError) as ctx:
                self.call('extract', *args)
            self.assertEqual(ctx.exception.returncode, 1)

    def test_bad_arguments_exit_with_usage_code_from_the_command_line(self):
        points, _ = self.synth()
        stderr = StringIO()
        for argv in (['manage.py', 'extract', points, '--out', self.path('w.xml'), '--format', 'xml'],
                     ['manage.py', 'extract', points],
                     ['manage.py', 'synth', '--seed', 'many']):
            command = load_command_class('wires', argv[1])
            with self.subTest(argv=argv), redirect_stderr(stderr), self.assertRaises(SystemExit) as ctx:
                command.run_from_argv(argv)
            self.assertEqual(ctx.exception.code, 1)
        self.assertIn('error:', stderr.getvalue())


class OracleCommandTests(CommandTestCase):
    def test_canonical_comparison(self):
        points = self.path('uv.csv', 'x,y\n0.5,3.0\n-1.0,0.2\n2.0,1.0\n0.0,0.5\n')
        out = self.path('oracle.csv')
        self.call('oracle', canonical=True, points=points, samples=20001, compare='circle', out=out)
        table = pd.read_csv(out)
        self.assertEqual(len(table), 4)
        self.assertIn('circle_distance', table.columns)
        self.assertLess(table['relative_error'].max(), 1e-6)
        self.assertAlmostEqual(table['distance'].iloc[3], 0.5, places=9)

    def test_curve_points(self):
        points = self.path('xyz.csv', 'x,y,z\n0,0,18\n5,1,12\n-3,0,9\n')
        out = self.path('oracle.csv')
        self.call('oracle', curve='0,10,0', points=points, samples=20001, out=out)
        table = pd.read_csv(out)
        self.assertAlmostEqual(table['distance'].iloc[0], 8.0, places=9)
        self.assertTrue((table['distance'] >= 0).all())

    def test_needs_exactly_one_curve(self):
        points = self.path('uv.csv', 'x,y\n0,2\n')
        for kwargs in ({}, {'canonical': True, 'curve': '0,1,0'}):
            with self.subTest(kwargs=kwargs), self.assertRaises(CommandError) as ctx:
                self.call('oracle', points=points, **kwargs)
            self.assertEqual(ctx.exception.returncode, 1)

    def test_bad_curve(self):
        points = self.path('xyz.csv', 'x,y,z\n0,0,20\n')
        with self.assertRaises(CommandError) as ctx:
            self.call('oracle', curve='1,2', points=points)
        self.assertEqual(ctx.exception.returncode, 1)
