from datetime import timedelta

from django.conf import settings
from django.core.management.base import BaseCommand
from django.utils import timezone

from boltzmann.models import Run


class Command(BaseCommand):
    help = 'Mark runs stuck in processing as timed out'

    def add_arguments(self, parser):
        parser.add_argument(
            '--older-than',
            type=int,
            default=settings.SPECNET_STUCK_AFTER_MINUTES,
            help='Clean runs processing for more than X minutes'
        )
        parser.add_argument(
            '--dry-run',
            action='store_true',
            help='Only show what would be cleaned, without making changes'
        )

    def handle(self, *args, **options):
        older_than_minutes = options['older_than']
        dry_run = options['dry_run']

        time_limit = timezone.now() - timedelta(minutes=older_than_minutes)

        runs_stuck = Run.objects.filter(
            is_processing=True,
            updated_at__lt=time_limit
        )

        self.stdout.write(
            self.style.WARNING(
                f'Found {runs_stuck.count()} runs processing for more than {older_than_minutes} minutes'
            )
        )

        for run in runs_stuck:
            self.stdout.write(f'  - {run.command} {run.run_id} (since {run.updated_at})')

        if dry_run:
            self.stdout.write(self.style.WARNING('\n🔍 Dry-run mode: no changes were made.'))
            self.stdout.write('Run without --dry-run to apply.')
            return

        if runs_stuck.exists():
            count = runs_stuck.update(
                is_processing=False,
                processing_status='timeout'
            )
            self.stdout.write(self.style.SUCCESS(f'\n✅ Marked {count} runs as timed out!'))
        else:
            self.stdout.write(self.style.SUCCESS('✅ No stuck runs found!'))
