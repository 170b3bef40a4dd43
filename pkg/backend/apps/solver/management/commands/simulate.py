"""
Django management command to simulate the reflectance of one pattern
"""
import logging

from apps.patterns.generators import generate_pattern
from apps.patterns.pattern import Pattern, PatternClass
from apps.solver.fdtd import run_simulation
from apps.solver.verification import convergence_report
from utils.commands import PipelineCommand
from utils.error_handling import InvalidConfigError

logger = logging.getLogger(__name__)


class Command(PipelineCommand):
    help = 'Run the FDTD solver on a pattern and write its coPR spectrum as CSV'

    def add_command_arguments(self, parser):
        source = parser.add_mutually_exclusive_group()
        source.add_argument('--pattern', help='Pattern file in the 16-line text format')
        source.add_argument(
            '--class',
            dest='class_tag',
            choices=[PatternClass.PLG, PatternClass.PTN, PatternClass.RDN],
            help='Generate a pattern of this class from --seed instead'
        )
        parser.add_argument(
            '--refine',
            nargs='+',
            type=float,
            metavar='STEP',
            help='Also run a convergence report over these grid steps (metres)'
        )

    def _load_pattern(self, ctx, options) -> Pattern:
        if options.get('pattern'):
            try:
                with open(options['pattern']) as handle:
                    return Pattern.from_text(handle.read())
            except OSError as e:
                raise InvalidConfigError(f"cannot read pattern file: {e}") from e
        class_tag = options.get('class_tag') or ctx.config.dataset.class_tag
        return generate_pattern(class_tag, ctx.seed, ctx.config.dataset.pattern_params())

    def execute_run(self, ctx, **options):
        pattern = self._load_pattern(ctx, options)
        cfg = ctx.config.solver_config(pattern.class_tag if pattern.class_tag != PatternClass.OTHER else None)
        ctx.fingerprints['solver'] = cfg.fingerprint()

        with open(ctx.path('pattern.txt'), 'w') as handle:
            handle.write(pattern.to_text())
        result = run_simulation(pattern, cfg)
        result.spectrum.to_csv(ctx.path('spectrum.csv'))

        summary = {
            'class_tag': pattern.class_tag.value,
            'ones': pattern.ones,
            'steps': result.steps,
            'residual_db': result.residual_db,
            'copr_min': float(result.spectrum.values.min()),
            'copr_max': float(result.spectrum.values.max()),
            'wall_time': result.wall_time,
        }

        if options.get('refine'):
            report = convergence_report(pattern, cfg, options['refine'])
            ctx.write_json('convergence.json', report.to_dict())
            summary['max_deviation'] = float(report.deviation.max())
            if report.oracle_error is not None:
                summary['oracle_error'] = report.oracle_error
        return summary
