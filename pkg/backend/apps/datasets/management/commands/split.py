"""
Django management command to split a dataset into train and test files
"""
import logging

from apps.datasets.files import load, save
from apps.datasets.splits import split
from utils.commands import PipelineCommand

logger = logging.getLogger(__name__)


class Command(PipelineCommand):
    help = 'Shuffle a dataset with --seed and write train.msds and test.msds'

    def add_command_arguments(self, parser):
        parser.add_argument('--dataset', required=True, help='Input MSDS file')
        parser.add_argument(
            '--test-fraction',
            type=float,
            help='Fraction of samples in the test file (default: dataset.test_fraction of the config)'
        )

    def execute_run(self, ctx, **options):
        ds = load(options['dataset'])
        fraction = options.get('test_fraction')
        if fraction is None:
            fraction = ctx.config.dataset.test_fraction
        ctx.fingerprints['input'] = ds.fingerprint()

        train, test = split(ds, fraction, ctx.seed)
        ctx.fingerprints['train'] = save(train, ctx.path('train.msds'))
        ctx.fingerprints['test'] = save(test, ctx.path('test.msds'))
        return {
            'class_tag': ds.class_tag.value,
            'train': len(train),
            'test': len(test),
            'test_fraction': fraction,
        }
