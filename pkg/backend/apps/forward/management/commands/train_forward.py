"""
Django management command to train an evaluation network
"""
import logging

import numpy as np

from apps.analytics.plots import plot_spectrum_overlay, plot_training_history
from apps.datasets.files import load
from apps.forward.specs import Arch, ForwardModelSpec
from apps.forward.training import MeanSpectrumPredictor, TrainHyper, evaluate, train_with_holdout
from utils.commands import PipelineCommand

logger = logging.getLogger(__name__)


class Command(PipelineCommand):
    help = 'Train a forward model (pattern -> coPR spectrum) and write its checkpoint and training report'

    def add_command_arguments(self, parser):
        parser.add_argument('--train', required=True, help='Training MSDS file')
        parser.add_argument('--val', help='Validation MSDS file (default: hold out train.val_fraction)')
        parser.add_argument('--test', help='Test MSDS file scored after training')
        parser.add_argument('--arch', choices=Arch.values, help='Architecture (default: model.arch of the config)')
        parser.add_argument('--epochs', type=int, help='Maximum epochs (default: train.max_epochs of the config)')

    def execute_run(self, ctx, **options):
        config = ctx.config
        if options.get('arch'):
            config.model.arch = options['arch']
        if options.get('epochs') is not None:
            config.train.max_epochs = options['epochs']
            config.train.validate()

        train = load(options['train'])
        ctx.fingerprints['train'] = train.fingerprint()
        val = load(options['val']) if options.get('val') else None
        test = load(options['test']) if options.get('test') else None
        if test is not None:
            ctx.fingerprints['test'] = test.fingerprint()

        spec = ForwardModelSpec.from_section(config.model)
        model, report = train_with_holdout(
            spec, train, TrainHyper.from_section(config.train), ctx.seed, config.train.val_fraction, val=val,
        )
        ctx.fingerprints['val'] = report.fingerprints['val']

        summary = {
            'arch': spec.arch.value,
            'param_count': report.param_count,
            'residual_blocks': model.n_residual_blocks,
            'epochs': len(report.epochs),
            'best_epoch': report.best_epoch,
            'best_val_mse': report.best_val_mse,
            'final_train_mse': report.final_train_mse,
            'wall_time': report.wall_time,
        }
        if test is not None:
            result = evaluate(model, test)
            report.test_mse = result.mean
            report.fingerprints['test'] = ctx.fingerprints['test']
            summary['test_mse'] = result.mean
            summary['mean_predictor_mse'] = evaluate(MeanSpectrumPredictor.fit(train), test).mean

        model.save(ctx.path('checkpoint'))
        ctx.write_json('train_report.json', report.to_dict())
        report.to_csv(ctx.path('train_report.csv'))
        if config.analytics.plots and report.epochs:
            plot_training_history(
                [r.epoch for r in report.epochs],
                {'train': [r.train_mse for r in report.epochs], 'validation': [r.val_mse for r in report.epochs]},
                ctx.path('training_history.svg'),
            )
            if test is not None:
                rng = np.random.default_rng(ctx.seed)
                cases = np.sort(rng.choice(len(test), size=min(config.analytics.overlay_samples, len(test)),
                                           replace=False))
                subset = test.subset(cases)
                plot_spectrum_overlay(
                    test.freqs,
                    {'target': subset.spectra(), 'predicted': model.predict_batch(subset.patterns())},
                    ctx.path('overlay.svg'),
                    title=f"{spec.arch.value} on {test.class_tag.value}",
                )
        return summary
