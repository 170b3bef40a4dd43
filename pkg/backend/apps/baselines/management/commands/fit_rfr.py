"""
Django management command to fit the random-forest baseline
"""
import logging

from apps.baselines.forest import ForestHyper, fit_rfr
from apps.datasets.files import load
from apps.forward.training import MeanSpectrumPredictor, evaluate
from utils.commands import PipelineCommand

logger = logging.getLogger(__name__)


class Command(PipelineCommand):
    help = 'Fit a random-forest regressor on a dataset and write forest.json'

    def add_command_arguments(self, parser):
        parser.add_argument('--train', required=True, help='Training MSDS file')
        parser.add_argument('--test', help='Test MSDS file scored after fitting')
        parser.add_argument('--trees', type=int, help='Number of trees (default: model.forest_trees of the config)')

    def execute_run(self, ctx, **options):
        section = ctx.config.model
        if options.get('trees') is not None:
            section.forest_trees = options['trees']
        hyper = ForestHyper.from_section(section)

        train = load(options['train'])
        ctx.fingerprints['train'] = train.fingerprint()
        forest = fit_rfr(train, hyper, ctx.seed, workers=ctx.threads)
        forest.save(ctx.path('forest.json'))

        summary = {
            'n_trees': forest.n_trees,
            'max_depth': max(tree.depth for tree in forest.trees),
            'nodes': sum(tree.n_nodes for tree in forest.trees),
            'train_mse': evaluate(forest, train).mean,
            'forest': str(ctx.path('forest.json')),
        }
        if options.get('test'):
            test = load(options['test'])
            ctx.fingerprints['test'] = test.fingerprint()
            summary['test_mse'] = evaluate(forest, test).mean
            summary['mean_predictor_mse'] = evaluate(MeanSpectrumPredictor.fit(train), test).mean
        return summary
