import numpy as np
import pandas as pd
from django.core.management.base import CommandError

from catenary.curve_utils.closest_point import METHODS, closest_abscissae, project_points
from catenary.curve_utils.core import CatenaryCurve
from catenary.curve_utils.oracle import DEFAULT_SAMPLES, oracle_closest, oracle_closest_canonical
from catenary.exceptions import CatenaryError
from wires.exceptions import PointFormatError
from wires.io import CSV_FLOAT_FORMAT, load_points
from wires.management.base import IO_ERROR, USAGE_ERROR, WireCommand, set_verbosity


def parse_curve(text):
    try:
        c, a, m = (float(v) for v in text.split(','))
    except ValueError:
        raise CommandError(f'--curve expects c,a,m, got {text!r}', returncode=USAGE_ERROR)
    return c, a, m


class Command(WireCommand):
    help = 'Brute-force closest-point distances, optionally compared with the iterative solver'

    def add_arguments(self, parser):
        parser.add_argument('--curve', help='c,a,m of a curve in the world XZ plane')
        parser.add_argument('--canonical', action='store_true', help='points are x,y pairs for y = cosh(x)')
        parser.add_argument('--points', required=True, help='CSV of x,y,z (or x,y with --canonical)')
        parser.add_argument('--samples', type=int, default=DEFAULT_SAMPLES)
        parser.add_argument('--compare', choices=METHODS, help='also run this closest-point method')
        parser.add_argument('--out', help='CSV output (default: stdout)')

    def _canonical(self, path, samples):
        try:
            frame = pd.read_csv(path)
            frame.columns = [str(c).strip().lower() for c in frame.columns]
            xs = frame['x'].to_numpy(dtype=float)
            ys = frame['y'].to_numpy(dtype=float)
        except (OSError, pd.errors.ParserError, KeyError, ValueError) as e:
            raise CommandError(f'cannot read {path}: {e}', returncode=IO_ERROR)
        table = pd.DataFrame({'x': xs, 'y': ys})
        found = [oracle_closest_canonical(x, y, samples) for x, y in zip(xs, ys)]
        table['abscissa'] = [u for u, _ in found]
        table['distance'] = [d for _, d in found]
        return table, lambda method: self._canonical_method(xs, ys, method)

    @staticmethod
    def _canonical_method(xs, ys, method):
        u = closest_abscissae(xs, ys, method=method)
        return np.hypot(xs - u, ys - np.cosh(u))

    def _curve(self, text, path, samples):
        c, a, m = parse_curve(text)
        try:
            xyz = load_points(path, 'csv').xyz
        except (PointFormatError, OSError) as e:
            raise CommandError(f'cannot read {path}: {e}', returncode=IO_ERROR)
        try:
            curve = CatenaryCurve.planar(c, a, m)
        except CatenaryError as e:
            raise CommandError(str(e), returncode=USAGE_ERROR)
        abscissae, distances = oracle_closest(curve, xyz, samples)
        table = pd.DataFrame({'x': xyz[:, 0], 'y': xyz[:, 1], 'z': xyz[:, 2],
                              'abscissa': abscissae, 'distance': distances})
        return table, lambda method: project_points(curve, xyz, method)[1]

    def handle(self, *args, **options):
        set_verbosity(options['verbosity'])
        if options['canonical'] == bool(options['curve']):
            raise CommandError('give exactly one of --curve and --canonical', returncode=USAGE_ERROR)
        if options['canonical']:
            table, method_distances = self._canonical(options['points'], options['samples'])
        else:
            table, method_distances = self._curve(options['curve'], options['points'], options['samples'])

        if options['compare']:
            method = options['compare']
            table[f'{method}_distance'] = method_distances(method)
            scale = np.maximum(table['distance'].abs(), 1.0)
            table['relative_error'] = (table[f'{method}_distance'] - table['distance']).abs() / scale
            worst = float(table['relative_error'].max()) if len(table) else 0.0
            self.stderr.write(f'{method}: largest relative difference {worst:.3e} over {len(table)} points')

        if options['out']:
            try:
                table.to_csv(options['out'], index=False, float_format=CSV_FLOAT_FORMAT)
            except OSError as e:
                raise CommandError(f'cannot write {options["out"]}: {e}', returncode=IO_ERROR)
        else:
            self.stdout.write(table.to_csv(index=False, float_format=CSV_FLOAT_FORMAT))
