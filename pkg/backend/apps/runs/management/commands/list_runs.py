"""
Django management command to list recorded pipeline runs
"""
import json
import logging

from django.core.management.base import BaseCommand

from apps.runs.models import RunRecord

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'List recorded pipeline runs, most recent first'

    def add_arguments(self, parser):
        parser.add_argument(
            '--command',
            dest='command_name',
            help='Only runs of this management command'
        )
        parser.add_argument(
            '--status',
            choices=[RunRecord.SUCCESS, RunRecord.FAILED],
            help='Only runs with this status'
        )
        parser.add_argument(
            '--limit',
            type=int,
            default=20,
            help='Maximum number of runs listed'
        )
        parser.add_argument(
            '--json',
            action='store_true',
            dest='json_output',
            help='Print the runs as JSON'
        )

    def handle(self, *args, **options):
        runs = RunRecord.objects.all()
        if options['command_name']:
            runs = runs.filter(command=options['command_name'])
        if options['status']:
            runs = runs.filter(status=options['status'])
        runs = list(runs[:max(options['limit'], 0)])

        if options['json_output']:
            self.stdout.write(json.dumps([
                {
                    'id': str(run.id),
                    'command': run.command,
                    'status': run.status,
                    'seed': run.seed,
                    'output_dir': run.output_dir,
                    'started_at': run.started_at.isoformat(),
                    'duration': run.duration.total_seconds() if run.duration else None,
                    'error': run.error,
                }
                for run in runs
            ]))
            return

        if not runs:
            self.stdout.write('No runs recorded.')
            return
        for run in runs:
            style = self.style.SUCCESS if run.status == RunRecord.SUCCESS else self.style.ERROR
            line = f"{run.started_at:%Y-%m-%d %H:%M:%S}  {run.command:<16} {style(run.status):<8} seed {run.seed}  {run.output_dir}"
            if run.error:
                line += f"  ({run.error})"
            self.stdout.write(line)
