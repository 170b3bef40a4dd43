"""
Django management command to print the header of an MSDS file
"""
import json

from django.core.management.base import BaseCommand

from apps.datasets.files import load
from utils.error_handling import command_exception_handler


class Command(BaseCommand):
    help = 'Print the header of an MSDS dataset file as JSON'

    def add_arguments(self, parser):
        parser.add_argument('dataset', help='MSDS file')

    @command_exception_handler
    def handle(self, *args, **options):
        ds = load(options['dataset'])
        info = ds.header_info()
        info['fingerprint'] = ds.fingerprint()
        self.stdout.write(json.dumps(info, indent=2, sort_keys=True))
