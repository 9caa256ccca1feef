from ._base import SpecNetCommand


class Command(SpecNetCommand):
    help = 'Integrate the homogeneous Boltzmann equation with a chosen collision operator'

    command_name = 'simulate'
    option_paths = {
        'operator': ('simulate', 'operator'),
        'checkpoint': ('simulate', 'checkpoint'),
        'dt': ('simulate', 'dt'),
        't_final': ('simulate', 't_final'),
        'reference': ('simulate', 'reference'),
        'scheme': ('simulate', 'scheme'),
        'cadence': ('simulate', 'cadence'),
        'initial': ('simulate', 'initial', 'kind'),
        'track_q_norm': ('simulate', 'track_q_norm'),
        'dump_fields': ('io', 'dump_fields'),
        'd': ('grid', 'd'),
        'n': ('grid', 'N'),
        's': ('grid', 'S'),
        'alpha': ('kernel', 'alpha'),
        'e': ('kernel', 'e'),
    }

    def add_command_arguments(self, parser):
        parser.add_argument('--operator', type=str, choices=['fast', 'direct', 'specnet'], help='Collision operator')
        parser.add_argument('--checkpoint', type=str, help='Trained checkpoint.json for --operator specnet')
        parser.add_argument('--dt', type=float, help='Time step')
        parser.add_argument('--t-final', type=float, help='Final time')
        parser.add_argument('--reference', type=str, choices=['fast', 'bkw'], help='Record the error against a reference')
        parser.add_argument('--scheme', type=str, choices=['rk3', 'euler'], help='Time integrator')
        parser.add_argument('--cadence', type=int, help='Record diagnostics every k steps')
        parser.add_argument('--initial', type=str, choices=['bkw', 'maxwellian', 'mixture'], help='Initial condition')
        parser.add_argument('--track-q-norm', action='store_const', const=True, help='Record ||Q(f)|| at each diagnostic')
        parser.add_argument('--dump-fields', action='store_const', const=True, help='Write snapshot documents of f')
        parser.add_argument('--d', type=int, choices=[2, 3], help='Velocity dimension')
        parser.add_argument('--n', type=int, help='Modes per axis (even)')
        parser.add_argument('--s', type=float, help='Support radius S')
        parser.add_argument('--alpha', type=float, help='Kernel exponent')
        parser.add_argument('--e', type=float, help='Restitution coefficient')

    def report(self, outcome):
        result = outcome.result
        if 'mass_drift' in result:
            self.stdout.write(f'  relative mass drift {result["mass_drift"]:.2e}')
            self.stdout.write(f'  kinetic energy {result["ke_initial"]:.6g} -> {result["ke_final"]:.6g}')
        if 'max_error_vs_reference' in result:
            self.stdout.write(f'  max relative L2 error vs reference {result["max_error_vs_reference"]:.3e}')
