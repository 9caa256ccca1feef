from boltzmann.spectral.config import SUITES

from ._base import SpecNetCommand, int_list


class Command(SpecNetCommand):
    help = 'Run a validation suite and write a pass/fail report'

    command_name = 'validate'
    option_paths = {
        'suite': ('validate', 'suite'),
        'checkpoint': ('validate', 'checkpoint'),
        'k_list': ('validate', 'K_list'),
        'n_list': ('validate', 'N_list'),
        'n_samples': ('validate', 'n_samples'),
        'oracle_n': ('validate', 'oracle_N'),
        'd': ('grid', 'd'),
        's': ('grid', 'S'),
        'alpha': ('kernel', 'alpha'),
        'e': ('kernel', 'e'),
    }

    def add_command_arguments(self, parser):
        parser.add_argument('--suite', type=str, choices=list(SUITES), help='Validation suite')
        parser.add_argument('--checkpoint', type=str, help='Trained checkpoint.json (consistency, resolution)')
        parser.add_argument('--k-list', type=int_list, help='Shell radii for the decay suite, e.g. 4,8,16,32')
        parser.add_argument('--n-list', type=int_list, help='Grid sizes, e.g. 16,32,64,128')
        parser.add_argument('--n-samples', type=int, help='Held-out samples for the resolution suite')
        parser.add_argument('--oracle-n', type=int, help='Grid size for the oracle and gradient suites')
        parser.add_argument('--d', type=int, choices=[2, 3], help='Velocity dimension')
        parser.add_argument('--s', type=float, help='Support radius S')
        parser.add_argument('--alpha', type=float, help='Kernel exponent')
        parser.add_argument('--e', type=float, help='Restitution coefficient')

    def report(self, outcome):
        for case in outcome.result.get('failures', []):
            self.stdout.write(self.style.ERROR(f'  ✗ {case}'))
