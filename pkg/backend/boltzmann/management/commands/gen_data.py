from ._base import SpecNetCommand, int_list


class Command(SpecNetCommand):
    help = 'Generate a training corpus of distributions and their collision operator targets'

    command_name = 'gen_data'
    option_paths = {
        'd': ('grid', 'd'),
        'n': ('grid', 'N'),
        's': ('grid', 'S'),
        'alpha': ('kernel', 'alpha'),
        'C': ('kernel', 'C'),
        'e': ('kernel', 'e'),
        'counts': ('data', 'counts'),
        'n_r': ('quadrature', 'n_r'),
        'n_sigma': ('quadrature', 'n_sigma'),
        'dump_kernel': ('io', 'dump_kernel'),
    }

    def add_command_arguments(self, parser):
        parser.add_argument('--d', type=int, choices=[2, 3], help='Velocity dimension')
        parser.add_argument('--n', type=int, help='Modes per axis (even)')
        parser.add_argument('--s', type=float, help='Support radius S')
        parser.add_argument('--alpha', type=float, help='Kernel exponent (0: Maxwell, 1: hard spheres)')
        parser.add_argument('--C', type=float, help='Kernel constant')
        parser.add_argument('--e', type=float, help='Restitution coefficient in [0, 1]')
        parser.add_argument(
            '--counts',
            type=int_list,
            help='Samples per family: gaussian,two_gaussian,perturbed (default: 1000,1000,1000)',
        )
        parser.add_argument('--n-r', type=int, help='Radial quadrature nodes (default: N)')
        parser.add_argument('--n-sigma', type=int, help='Angular quadrature nodes')
        parser.add_argument(
            '--dump-kernel',
            action='store_const',
            const=True,
            help='Also write the quadrature kernel terms to kernel.json',
        )

    def report(self, outcome):
        result = outcome.result
        if 'mass_error' in result:
            for kind, error in result['mass_error'].items():
                if error is not None:
                    self.stdout.write(f'  {kind}: max |mass - 1| = {error:.2e}')
            self.stdout.write(f'  max |Q(0)| = {result["max_target_dc"]:.2e}')
