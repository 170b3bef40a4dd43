"""
Django management command to score any fitted predictor on a dataset
"""
import logging

from apps.analytics.evaluation import load_predictor, write_evaluation
from apps.datasets.files import load
from apps.forward.training import evaluate
from utils.commands import PipelineCommand

logger = logging.getLogger(__name__)


class Command(PipelineCommand):
    help = 'Score a network checkpoint or forest.json on an MSDS file'

    def add_command_arguments(self, parser):
        parser.add_argument('--checkpoint', required=True, help='Checkpoint directory or forest.json')
        parser.add_argument('--dataset', required=True, help='MSDS file to score')

    def execute_run(self, ctx, **options):
        predictor = load_predictor(options['checkpoint'])
        ds = load(options['dataset'])
        ctx.fingerprints['dataset'] = ds.fingerprint()
        result = evaluate(predictor, ds)
        write_evaluation(ctx, result, title=f"{type(predictor).__name__} on {ds.class_tag.value}")
        return result.to_dict()
