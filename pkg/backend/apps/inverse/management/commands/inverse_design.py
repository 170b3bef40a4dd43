"""
Django management command to design a pattern for a target spectrum
"""
import logging

from apps.analytics.plots import plot_pattern, plot_spectrum_overlay
from apps.forward.networks import ForwardModel
from apps.inverse.design import inverse_design
from apps.inverse.networks import Generator
from apps.solver.spectrum import Spectrum
from utils.commands import PipelineCommand

logger = logging.getLogger(__name__)


class Command(PipelineCommand):
    help = 'Generate candidate patterns for a target coPR CSV and keep the best one'

    def add_command_arguments(self, parser):
        parser.add_argument('--target', required=True, help='Target spectrum CSV (freq_hz,copr)')
        parser.add_argument('--generator', required=True, help='Generator checkpoint directory')
        parser.add_argument('--evaluator', required=True, help='Forward model checkpoint directory')
        parser.add_argument('--candidates', type=int, help='Noise draws (default: inverse.n_candidates of the config)')
        parser.add_argument('--verify', action='store_true', help='Run the solver on the chosen pattern')
        parser.add_argument('--verify-top', dest='verify_top', type=int, default=1,
                            help='Number of best candidates to verify with the solver')

    def execute_run(self, ctx, **options):
        section = ctx.config.inverse
        if options.get('candidates') is not None:
            section.n_candidates = options['candidates']
            section.validate()

        target = Spectrum.from_csv(options['target']).validate()
        generator = Generator.load(options['generator'])
        evaluator = ForwardModel.load(options['evaluator'])
        cfg = ctx.config.solver_config(ctx.config.dataset.class_tag)
        if options['verify']:
            ctx.fingerprints['solver'] = cfg.fingerprint()

        result = inverse_design(
            target, generator, evaluator, section.n_candidates, verify=options['verify'], cfg=cfg,
            seed=ctx.seed, verify_top=options['verify_top'], workers=ctx.threads,
        )
        result.export(ctx.out_dir)
        if ctx.config.analytics.plots:
            curves = {'target': target.values[None], 'predicted': result.predicted.values[None]}
            if result.verified is not None:
                curves['verified'] = result.verified.values[None]
            plot_spectrum_overlay(target.freqs, curves, ctx.path('spectra.svg'))
            plot_pattern(result.pattern.cells, ctx.path('pattern.svg'))
        return {**result.metrics(), 'mode_collapse': result.collapsed}
