"""
Shared plumbing for the reconstruction commands.

Every command accepts ``--config``, ``--seed``, ``--threads`` and ``--out``.
ReconError subclasses become CommandError with the error's exit code, so the
process prints one line on stderr and exits 2 (config), 3 (I/O) or 4 (divergence).
"""
from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from core.exceptions import ReconError


class ReconCommand(BaseCommand):
    requires_system_checks = []

    def add_arguments(self, parser):
        parser.add_argument('--config', help='JSON experiment configuration file')
        parser.add_argument('--seed', type=int, default=None, help='Base random seed (overrides the config)')
        parser.add_argument(
            '--threads',
            type=int,
            default=settings.RECON_THREADS,
            help=f'Worker threads (default: RECON_THREADS={settings.RECON_THREADS})',
        )
        parser.add_argument('--out', help='Output path')

    def handle(self, *args, **options):
        try:
            self.run(**options)
        except ReconError as e:
            raise CommandError(str(e), returncode=e.exit_code)

    def run(self, **options):
        raise NotImplementedError

    def success(self, message: str):
        self.stdout.write(self.style.SUCCESS(message))
