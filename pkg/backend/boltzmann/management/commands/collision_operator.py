from django.conf import settings
from django.core.management.base import BaseCommand

from boltzmann.services import CollisionOperatorFactory, get_default_collision_operator_name
from boltzmann.spectral.config import load_run_config


class Command(BaseCommand):
    help = 'Inspect collision operator providers'

    def add_arguments(self, parser):
        parser.add_argument(
            '--list',
            action='store_true',
            help='List all available collision operators'
        )
        parser.add_argument(
            '--current',
            action='store_true',
            help='Show the default collision operator'
        )
        parser.add_argument(
            '--test',
            type=str,
            help='Apply an operator to a Maxwellian on a small grid'
        )
        parser.add_argument('--checkpoint', type=str, help='Checkpoint for --test specnet')
        parser.add_argument('--d', type=int, choices=[2, 3], default=2)
        parser.add_argument('--n', type=int, default=8)

    def handle(self, *args, **options):
        if options['list']:
            self.list_operators()
        elif options['current']:
            self.show_current_operator()
        elif options['test']:
            self.test_operator(options['test'], options)
        else:
            self.stdout.write(self.style.ERROR('Please provide an action. Use --help for available options.'))

    def list_operators(self):
        """List all available collision operators"""
        current = get_default_collision_operator_name()
        self.stdout.write(self.style.SUCCESS('Available collision operators:'))

        for provider in CollisionOperatorFactory.get_available_providers():
            current_mark = ' (CURRENT)' if provider == current else ''
            self.stdout.write(f'  • {provider}{current_mark}')

        self.stdout.write('')
        self.stdout.write('To change the default, set DEFAULT_COLLISION_OPERATOR in your .env file')

    def show_current_operator(self):
        current = get_default_collision_operator_name()
        self.stdout.write(self.style.SUCCESS(f'Current default collision operator: {current}'))
        self.stdout.write(f'  FFT workers: {settings.SPECNET_THREADS}')

    def test_operator(self, provider, options):
        available = CollisionOperatorFactory.get_available_providers()

        if provider not in available:
            self.stdout.write(self.style.ERROR(f'Invalid operator: {provider}'))
            self.stdout.write(f'Available operators: {", ".join(available)}')
            return

        try:
            config = load_run_config('bench', overrides={'grid': {'d': options['d'], 'N': options['n']}})
            operator = CollisionOperatorFactory.create_operator(
                provider, config=config, checkpoint=options.get('checkpoint')
            )
            self.stdout.write(f'Testing {provider} on N={options["n"]}, d={options["d"]}...')
            result = operator.smoke_test(N=options['n'])

            if result['finite']:
                self.stdout.write(self.style.SUCCESS(f'✓ {provider} returned a finite Q(f)'))
                self.stdout.write(f'  ||Q(M)|| = {result["q_norm"]:.3e}, mass of Q(M) = {result["q_mass"]:.3e}')
            else:
                self.stdout.write(self.style.WARNING(f'⚠ {provider} returned non-finite values'))

        except Exception as e:
            self.stdout.write(self.style.ERROR(f'✗ {provider} failed: {str(e)}'))
