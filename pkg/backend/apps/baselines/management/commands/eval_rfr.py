"""
Django management command to score a fitted forest on a dataset
"""
import logging

from apps.analytics.evaluation import write_evaluation
from apps.baselines.forest import ForestModel
from apps.datasets.files import load
from apps.forward.training import evaluate
from utils.commands import PipelineCommand

logger = logging.getLogger(__name__)


class Command(PipelineCommand):
    help = 'Score a forest.json on an MSDS file and write per-sample errors'

    def add_command_arguments(self, parser):
        parser.add_argument('--forest', required=True, help='forest.json written by fit_rfr')
        parser.add_argument('--dataset', required=True, help='MSDS file to score')

    def execute_run(self, ctx, **options):
        forest = ForestModel.load(options['forest'])
        ds = load(options['dataset'])
        ctx.fingerprints['dataset'] = ds.fingerprint()
        ctx.fingerprints.update({f"forest_{k}": v for k, v in forest.fingerprints.items()})
        result = evaluate(forest, ds)
        write_evaluation(ctx, result, title=f"RFR on {ds.class_tag.value}")
        return {'n_trees': forest.n_trees, **result.to_dict()}
