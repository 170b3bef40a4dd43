"""
Django management command to train the generator and judge against a frozen evaluator
"""
import logging

from apps.analytics.plots import plot_training_history
from apps.datasets.files import load
from apps.forward.networks import ForwardModel
from apps.inverse.networks import GeneratorSpec, JudgeSpec
from apps.inverse.training import InverseHyper, history_series, train_inverse
from utils.commands import PipelineCommand

logger = logging.getLogger(__name__)


class Command(PipelineCommand):
    help = 'Train a conditional generator through a frozen forward model and write its checkpoint'

    def add_command_arguments(self, parser):
        parser.add_argument('--train', required=True, help='Training MSDS file (real patterns and target spectra)')
        parser.add_argument('--evaluator', required=True, help='Forward model checkpoint directory')
        parser.add_argument('--lambda-d', dest='lambda_d', type=float,
                            help='Weight of the spectrum term (default: inverse.lambda_d of the config)')

    def execute_run(self, ctx, **options):
        section = ctx.config.inverse
        if options.get('lambda_d') is not None:
            section.lambda_d = options['lambda_d']
            section.validate()

        train = load(options['train'])
        ctx.fingerprints['train'] = train.fingerprint()
        evaluator = ForwardModel.load(options['evaluator'])
        gen_spec = GeneratorSpec(noise_dim=section.noise_dim, widths=section.generator_widths,
                                 leaky_slope=section.leaky_slope)
        judge_spec = JudgeSpec(widths=section.judge_widths, leaky_slope=section.leaky_slope)

        generator, history = train_inverse(gen_spec, judge_spec, evaluator, train,
                                           InverseHyper.from_section(section), ctx.seed)
        ctx.fingerprints['evaluator'] = history.evaluator_digest
        generator.save(ctx.path('generator'))
        ctx.write_json('inverse_history.json', history.to_dict())
        history.to_csv(ctx.path('inverse_history.csv'))
        if ctx.config.analytics.plots and history.epochs:
            epochs, series = history_series(history)
            plot_training_history(epochs, series, ctx.path('inverse_history.svg'), ylabel='loss / d')

        first = history.epochs[0] if history.epochs else None
        return {
            'epochs': len(history.epochs),
            'best_epoch': history.best_epoch,
            'best_d_median': history.best_d_median,
            'first_d_median': first.d_median if first else None,
            'final_judge_accuracy': history.epochs[-1].judge_accuracy if history.epochs else None,
            'generator_params': generator.store.param_count(),
            'wall_time': history.wall_time,
        }
