import json
import time

from django.core.management.base import CommandError

from wires.conf import PipelineConfig
from wires.exceptions import (
    ConfigurationError,
    InvariantViolation,
    PointFormatError,
    UnknownFormatError,
)
from wires.io import WIRE_FORMATS, POINT_FORMATS, export, load_points
from wires.management.base import INTERNAL_ERROR, IO_ERROR, USAGE_ERROR, WireCommand, set_verbosity
from wires.models import ExtractionRun
from wires.pipeline import run_pipeline


class Command(WireCommand):
    help = 'Extract catenary wires from a classified point cloud'

    def add_arguments(self, parser):
        parser.add_argument('input', help='points file (CSV x,y,z[,class] or binary records)')
        parser.add_argument('--out', required=True, help='output path')
        parser.add_argument('--format', choices=WIRE_FORMATS, help='output format (default: from --out)')
        parser.add_argument('--input-format', choices=POINT_FORMATS, help='input format (default: from input)')
        parser.add_argument('--config', help='JSON file with pipeline options')
        parser.add_argument('--report', help='report path (default: <out>.report.json)')
        parser.add_argument('--save', action='store_true', help='store the run in the database')
        parser.add_argument('--class', dest='class_code', type=int)
        parser.add_argument('--tolerance')
        parser.add_argument('--separation')
        parser.add_argument('--max-gap')
        parser.add_argument('--line-tol')
        parser.add_argument('--wind-span')
        parser.add_argument('--max-angle', type=float)
        parser.add_argument('--min-length')
        parser.add_argument('--end-radius')
        parser.add_argument('--no-wind', action='store_true', help='keep every curve plane vertical')
        parser.add_argument('--jobs', type=int)
        parser.add_argument('--seed', type=int)

    def handle(self, *args, **options):
        set_verbosity(options['verbosity'])
        flags = {
            'class': options['class_code'],
            'tolerance': options['tolerance'],
            'separation': options['separation'],
            'max_gap': options['max_gap'],
            'line_tol': options['line_tol'],
            'wind_span': options['wind_span'],
            'max_angle': options['max_angle'],
            'min_length': options['min_length'],
            'end_radius': options['end_radius'],
            'jobs': options['jobs'],
            'seed': options['seed'],
        }
        if options['no_wind']:
            flags['wind_correction'] = False

        try:
            cfg = PipelineConfig.load(options['config'], **flags)
            cloud = load_points(options['input'], options['input_format'], cfg.wire_class_code)
        except (ConfigurationError, UnknownFormatError) as e:
            raise CommandError(str(e), returncode=USAGE_ERROR)
        except (PointFormatError, OSError) as e:
            raise CommandError(f'cannot read {options["input"]}: {e}', returncode=IO_ERROR)

        start = time.perf_counter()
        try:
            result = run_pipeline(cloud, cfg)
        except InvariantViolation as e:
            raise CommandError(f'internal error: {e}', returncode=INTERNAL_ERROR)
        runtime = time.perf_counter() - start
        report = dict(result.report, runtime_seconds=round(runtime, 6))

        out = options['out']
        report_path = options['report'] or f'{out}.report.json'
        try:
            export(result.wires, out, options['format'])
            with open(report_path, 'w', encoding='utf-8') as fh:
                json.dump(report, fh, indent=2, sort_keys=True)
        except UnknownFormatError as e:
            raise CommandError(str(e), returncode=USAGE_ERROR)
        except OSError as e:
            raise CommandError(f'cannot write output: {e}', returncode=IO_ERROR)

        if options['save']:
            run = ExtractionRun.from_result(result, options['input'], options['input_format'] or 'auto', runtime)
            self.stdout.write(f'Saved run {run.pk}')

        self.stdout.write(self.style.SUCCESS(
            f'{len(result.wires)} wires from {report["input_points"]} points '
            f'({report["unassigned_points"]} unassigned) written to {out}'
        ))
