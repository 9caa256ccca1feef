from ._base import SpecNetCommand, int_list


class Command(SpecNetCommand):
    help = 'Time the fast and SpecNet collision operators across grid sizes'

    command_name = 'bench'
    option_paths = {
        'n_list': ('bench', 'N_list'),
        'repetitions': ('bench', 'repetitions'),
        'checkpoint': ('bench', 'checkpoint'),
        'operators': ('bench', 'operators'),
        'd': ('grid', 'd'),
        'n_trun': ('specnet', 'n_trun'),
        'm': ('specnet', 'M'),
    }

    def add_command_arguments(self, parser):
        parser.add_argument('--n-list', type=int_list, help='Grid sizes, e.g. 16,32,64,128,256')
        parser.add_argument('--repetitions', type=int, help='Timed repetitions per size (at least 5)')
        parser.add_argument('--checkpoint', type=str, help='Trained checkpoint.json (default: random parameters)')
        parser.add_argument(
            '--operators',
            type=lambda v: [x.strip() for x in v.split(',') if x.strip()],
            help='Operators to time, e.g. fast,specnet',
        )
        parser.add_argument('--d', type=int, choices=[2, 3], help='Velocity dimension')
        parser.add_argument('--n-trun', type=int, help='N_trun of random parameters when no checkpoint is given')
        parser.add_argument('--m', type=int, help='M of random parameters when no checkpoint is given')

    def report(self, outcome):
        crossover = outcome.result.get('crossover_N')
        if crossover:
            self.stdout.write(f'  SpecNet faster than the fast solver from N={crossover}')
