"""
Django management command to measure test MSE against training-set size
"""
import logging

from apps.analytics.benchmark import RFR, scaling_study
from apps.analytics.evaluation import fit_predictor
from apps.analytics.plots import plot_training_history
from apps.datasets.files import load
from apps.forward.specs import Arch
from utils.commands import PipelineCommand
from utils.error_handling import InvalidConfigError

logger = logging.getLogger(__name__)


class Command(PipelineCommand):
    help = 'Fit on growing prefixes of a training pool and score the analytics.datasets test sets'

    def add_command_arguments(self, parser):
        parser.add_argument('--pool', required=True, help='Training pool MSDS file (typically RDN)')
        parser.add_argument('--arch', choices=Arch.values + [RFR], help='Model (default: model.arch of the config)')
        parser.add_argument('--sizes', type=int, nargs='+', help='Training sizes (default: analytics.scaling_sizes)')

    def execute_run(self, ctx, **options):
        section = ctx.config.analytics
        if options.get('sizes'):
            section.scaling_sizes = options['sizes']
            section.validate()
        arch = options.get('arch') or ctx.config.model.arch

        testsets = {key: load(paths['test']) for key, paths in section.datasets.items() if 'test' in paths}
        if not testsets:
            raise InvalidConfigError("scaling_study needs test sets in analytics.datasets")
        for key, ds in testsets.items():
            ctx.fingerprints[f"{key}_test"] = ds.fingerprint()
        pool = load(options['pool'])
        ctx.fingerprints['pool'] = pool.fingerprint()

        table = scaling_study(
            pool, section.scaling_sizes,
            lambda train: fit_predictor(arch, train, ctx.config, ctx.seed, workers=ctx.threads),
            testsets,
        )
        table.to_csv(ctx.path('scaling.csv'))
        ctx.write_json('scaling.json', table.to_dict())
        if section.plots:
            series = {key: table.values[:, j].tolist() for j, key in enumerate(table.cols)}
            plot_training_history(table.sizes, series, ctx.path('scaling.svg'), ylabel='Test MSE',
                                  xlabel='Training samples')
        return {'arch': arch, **table.to_dict()}
