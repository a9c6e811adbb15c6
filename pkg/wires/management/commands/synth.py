import json

from django.core.management.base import CommandError

from wires.exceptions import SceneSpecError, UnknownFormatError
from wires.io import POINT_FORMATS, write_points
from wires.management.base import IO_ERROR, USAGE_ERROR, WireCommand, set_verbosity
from wires.ml_utils.scene import generate_scene


class Command(WireCommand):
    help = 'Generate a synthetic power-line scene with ground truth'

    def add_arguments(self, parser):
        parser.add_argument('spec', help='scene spec JSON file')
        parser.add_argument('--out', required=True, help='points file')
        parser.add_argument('--truth', required=True, help='ground-truth JSON file')
        parser.add_argument('--format', choices=POINT_FORMATS, help='points format (default: from --out)')
        parser.add_argument('--seed', type=int, help='overrides the seed in the spec')

    def handle(self, *args, **options):
        set_verbosity(options['verbosity'])
        try:
            with open(options['spec'], encoding='utf-8') as fh:
                spec = json.load(fh)
        except OSError as e:
            raise CommandError(f'cannot read {options["spec"]}: {e}', returncode=IO_ERROR)
        except json.JSONDecodeError as e:
            raise CommandError(f'{options["spec"]}: invalid JSON ({e})', returncode=USAGE_ERROR)
        if options['seed'] is not None:
            spec['seed'] = options['seed']

        try:
            scene = generate_scene(spec)
        except SceneSpecError as e:
            raise CommandError(str(e), returncode=USAGE_ERROR)

        try:
            write_points(options['out'], scene.points, scene.to_frame()['class'], options['format'],
                         extra={'curve_id': scene.curve_ids})
            with open(options['truth'], 'w', encoding='utf-8') as fh:
                json.dump(scene.truth(), fh, indent=2, sort_keys=True)
        except UnknownFormatError as e:
            raise CommandError(str(e), returncode=USAGE_ERROR)
        except OSError as e:
            raise CommandError(f'cannot write scene: {e}', returncode=IO_ERROR)

        self.stdout.write(self.style.SUCCESS(
            f'{len(scene.points)} points on {len(scene.curves)} curves written to {options["out"]}'
        ))
