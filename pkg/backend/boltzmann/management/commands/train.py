from ._base import SpecNetCommand, sweep_spec


class Command(SpecNetCommand):
    help = 'Train SpecNet parameters on a corpus'

    command_name = 'train'
    option_paths = {
        'corpus': ('specnet', 'corpus'),
        'n_trun': ('specnet', 'n_trun'),
        'm': ('specnet', 'M'),
        'lr': ('specnet', 'lr'),
        'epochs': ('specnet', 'epochs'),
        'tol': ('specnet', 'tol'),
        'batch_size': ('specnet', 'batch_size'),
        'init': ('specnet', 'init'),
        'resume': ('specnet', 'resume'),
        'sweep': ('specnet', 'sweep'),
        'd': ('grid', 'd'),
        'n': ('grid', 'N'),
        's': ('grid', 'S'),
        'alpha': ('kernel', 'alpha'),
        'e': ('kernel', 'e'),
    }

    def add_command_arguments(self, parser):
        parser.add_argument('--corpus', type=str, help='corpus.json written by gen_data')
        parser.add_argument('--n-trun', type=int, help='Retained modes per axis (half-width)')
        parser.add_argument('--m', type=int, help='Separable terms M')
        parser.add_argument('--lr', type=float, help='Adam learning rate')
        parser.add_argument('--epochs', type=int, help='Epoch budget')
        parser.add_argument('--tol', type=float, help='Stop once the training loss reaches this value')
        parser.add_argument('--batch-size', type=int, help='Minibatch size (default: full batch)')
        parser.add_argument('--init', type=str, choices=['random', 'quadrature'], help='Parameter initialization')
        parser.add_argument('--resume', type=str, help='Continue from a checkpoint.json')
        parser.add_argument('--sweep', type=sweep_spec, help='Ablation grid, e.g. "n_trun=4,8;M=2,5"')
        parser.add_argument('--d', type=int, choices=[2, 3], help='Grid dimension (must match the corpus)')
        parser.add_argument('--n', type=int, help='Grid modes per axis (must match the corpus)')
        parser.add_argument('--s', type=float, help='Support radius (must match the corpus)')
        parser.add_argument('--alpha', type=float, help='Kernel exponent, used by --init quadrature')
        parser.add_argument('--e', type=float, help='Restitution coefficient, used by --init quadrature')

    def report(self, outcome):
        result = outcome.result
        if 'runs' in result:
            for run in result['runs']:
                self.stdout.write(
                    f'  N_trun={run["n_trun"]} M={run["M"]} lr={run["lr"]:g}: '
                    f'loss {run["final_loss"]:.3e} ({run["stop_reason"]}, {run["epochs_run"]} epochs)'
                )
        elif 'n_real_params' in result:
            self.stdout.write(f'  {result["n_real_params"]} real parameters')
