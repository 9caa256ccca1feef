from django.core.management.base import BaseCommand, CommandError

from boltzmann.services import EXIT_CONFIG, execute_run
from boltzmann.spectral import codec
from boltzmann.spectral.config import (
    PRESETS,
    build_run_config,
    config_from_manifest,
    deep_merge,
    load_run_config,
)
from boltzmann.spectral.exceptions import SpectralError


def int_list(value):
    try:
        return [int(x) for x in value.split(',') if x.strip()]
    except ValueError:
        raise CommandError(f'Expected comma-separated integers, got {value!r}', returncode=EXIT_CONFIG)


def float_list(value):
    try:
        return [float(x) for x in value.split(',') if x.strip()]
    except ValueError:
        raise CommandError(f'Expected comma-separated numbers, got {value!r}', returncode=EXIT_CONFIG)


def sweep_spec(value):
    """'n_trun=4,8;M=2,5' -> {'n_trun': [4, 8], 'M': [2, 5]}"""
    sweep = {}
    for part in value.split(';'):
        if not part.strip():
            continue
        name, _, values = part.partition('=')
        if not values:
            raise CommandError(f'Malformed sweep axis {part!r}; expected name=v1,v2', returncode=EXIT_CONFIG)
        sweep[name.strip()] = float_list(values) if name.strip() == 'lr' else int_list(values)
    return sweep


def set_path(target, path, value):
    for key in path[:-1]:
        target = target.setdefault(key, {})
    target[path[-1]] = value


class SpecNetCommand(BaseCommand):
    """
    Shared flags and execution for the run commands. Subclasses set
    `command_name`, add their own flags and map them onto config paths
    through `option_paths`; only flags actually passed override the
    configuration.
    """

    command_name = None
    option_paths = {}

    GLOBAL_PATHS = {
        'seed': ('seed',),
        'threads': ('threads',),
        'out_dir': ('io', 'out_dir'),
        'run_id': ('io', 'run_id'),
        'encoding': ('io', 'encoding'),
        'plot': ('io', 'plot'),
    }

    def add_arguments(self, parser):
        parser.add_argument('--config', type=str, help='YAML configuration file')
        parser.add_argument(
            '--preset',
            type=str,
            choices=sorted(PRESETS),
            help='Named configuration preset',
        )
        parser.add_argument(
            '--from-manifest',
            type=str,
            help='Re-run with the configuration recorded in a manifest.json',
        )
        parser.add_argument('--seed', type=int, help='Master random seed')
        parser.add_argument('--threads', type=int, help='FFT worker threads')
        parser.add_argument('--out-dir', type=str, help='Output directory (default: SPECNET_OUT_DIR/<run-id>)')
        parser.add_argument('--run-id', type=str, help='Run identifier')
        parser.add_argument(
            '--encoding',
            type=str,
            choices=list(codec.ENCODINGS),
            help='Float encoding for written documents',
        )
        parser.add_argument('--plot', action='store_const', const=True, help='Also write PNG plots')
        parser.add_argument('--no-progress', action='store_true', help='Disable progress bars')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def overrides(self, options):
        data = {}
        paths = {**self.GLOBAL_PATHS, **self.option_paths}
        for option, path in paths.items():
            value = options.get(option)
            if value is not None:
                set_path(data, path, value)
        if options.get('no_progress'):
            set_path(data, ('io', 'progress'), False)
        return data

    def resolve_config(self, options):
        overrides = self.overrides(options)
        if options.get('from_manifest'):
            manifest = codec.read_document(options['from_manifest'], 'manifest')
            base = config_from_manifest(manifest)
            if base.command != self.command_name:
                raise CommandError(
                    f'Manifest records a {base.command} run, not {self.command_name}',
                    returncode=EXIT_CONFIG,
                )
            data = base.dump()
            # a re-run gets its own id and directory unless asked otherwise
            data['io']['run_id'] = None
            data['io']['out_dir'] = None
            return build_run_config(deep_merge(data, overrides))
        return load_run_config(
            self.command_name,
            overrides=overrides,
            config_path=options.get('config'),
            preset=options.get('preset'),
        )

    def handle(self, *args, **options):
        try:
            config = self.resolve_config(options)
        except SpectralError as e:
            raise CommandError(str(e), returncode=EXIT_CONFIG)
        except OSError as e:
            raise CommandError(f'Cannot read input: {e}', returncode=EXIT_CONFIG)

        outcome = execute_run(config)
        self.report(outcome)

        if outcome.exit_code == 0:
            self.stdout.write(self.style.SUCCESS(f'✓ {outcome.message}'))
            self.stdout.write(f'  Artifacts: {outcome.out_dir}')
        elif outcome.exit_code == 3:
            self.stdout.write(self.style.WARNING(f'⚠ {outcome.message}'))
            self.stdout.write(f'  Artifacts: {outcome.out_dir}')
            raise CommandError(outcome.message, returncode=outcome.exit_code)
        else:
            raise CommandError(outcome.message, returncode=outcome.exit_code)

    def report(self, outcome):
        """Per-command summary lines, written before the status line"""
