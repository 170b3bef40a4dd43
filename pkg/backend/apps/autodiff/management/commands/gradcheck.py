"""
Django management command to check every backward rule against finite differences
"""
import logging

from apps.autodiff.gradcheck import (ADJOINT_TOLERANCE, FD_EPSILON, GRAD_TOLERANCE, adjoint_error,
                                     chained_graph_error, op_suite)
from utils.commands import PipelineCommand

logger = logging.getLogger(__name__)


class Command(PipelineCommand):
    help = 'Compare analytic gradients of every op with central finite differences'

    def execute_run(self, ctx, **options):
        errors = op_suite(seed=ctx.seed % 2 ** 32)
        errors['chained_graph'] = chained_graph_error(seed=ctx.seed % 2 ** 32)
        adjoint = adjoint_error(seed=ctx.seed % 2 ** 32)

        rows = [
            {'op': name, 'max_rel_error': error, 'passed': error < GRAD_TOLERANCE}
            for name, error in errors.items()
        ]
        ctx.write_json('gradcheck.json', {
            'epsilon': FD_EPSILON,
            'tolerance': GRAD_TOLERANCE,
            'ops': rows,
            'adjoint': {'error': adjoint, 'tolerance': ADJOINT_TOLERANCE},
        })
        failed = [row['op'] for row in rows if not row['passed']]
        if failed:
            logger.warning(f"Gradient check failed for {', '.join(failed)}")
        return {
            'passed': not failed and adjoint < ADJOINT_TOLERANCE,
            'worst_op': max(rows, key=lambda row: row['max_rel_error'])['op'],
            'worst_error': max(errors.values()),
            'adjoint_error': adjoint,
            'ops': {row['op']: row['max_rel_error'] for row in rows},
        }

    def report(self, ctx, summary):
        for name, error in summary['ops'].items():
            style = self.style.SUCCESS if error < GRAD_TOLERANCE else self.style.ERROR
            self.stdout.write(style(f"  {name:<20} {error:.2e}"))
        style = self.style.SUCCESS if summary['adjoint_error'] < ADJOINT_TOLERANCE else self.style.ERROR
        self.stdout.write(style(f"  {'adjoint':<20} {summary['adjoint_error']:.2e}"))
