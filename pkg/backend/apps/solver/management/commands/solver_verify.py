"""
Django management command to run the solver's physics checks
"""
import logging

from apps.solver.verification import verify_solver
from utils.commands import PipelineCommand

logger = logging.getLogger(__name__)


class Command(PipelineCommand):
    help = 'Check the solver against the slab formula, the all-ones pattern, energy conservation and symmetry'

    def add_command_arguments(self, parser):
        parser.add_argument(
            '--lossless-samples',
            type=int,
            default=20,
            help='Random RDN patterns for the lossless check'
        )
        parser.add_argument(
            '--symmetry-samples',
            type=int,
            default=10,
            help='Patterns per class for the symmetry check'
        )

    def execute_run(self, ctx, **options):
        cfg = ctx.config.solver_config()
        ctx.fingerprints['solver'] = cfg.fingerprint()
        checks = verify_solver(
            cfg,
            seed=ctx.seed,
            lossless_samples=options['lossless_samples'],
            symmetry_samples=options['symmetry_samples'],
            workers=ctx.threads,
        )
        ctx.write_json('checks.json', [c.to_dict() for c in checks])
        return {
            'passed': all(c.passed for c in checks),
            'checks': {c.name: {'passed': c.passed, 'value': c.value, 'tolerance': c.tolerance} for c in checks},
        }

    def report(self, ctx, summary):
        for name, check in summary['checks'].items():
            style = self.style.SUCCESS if check['passed'] else self.style.ERROR
            self.stdout.write(style(f"  {name:<14} {check['value']:.4g} (tolerance {check['tolerance']})"))
