"""
Django management command to generate one metasurface pattern
"""
import logging

from apps.patterns.generators import generate_pattern
from apps.patterns.pattern import PatternClass, is_connected
from utils.commands import PipelineCommand

logger = logging.getLogger(__name__)


class Command(PipelineCommand):
    help = 'Generate a PLG, PTN or RDN pattern from a seed and write it in the 16-line text format'

    def add_command_arguments(self, parser):
        parser.add_argument(
            '--class',
            dest='class_tag',
            choices=[PatternClass.PLG, PatternClass.PTN, PatternClass.RDN],
            help='Pattern class (default: dataset.class_tag of the config)'
        )

    def execute_run(self, ctx, **options):
        class_tag = options.get('class_tag') or ctx.config.dataset.class_tag
        pattern = generate_pattern(class_tag, ctx.seed, ctx.config.dataset.pattern_params())

        with open(ctx.path('pattern.txt'), 'w') as handle:
            handle.write(pattern.to_text())
        ctx.write_json('pattern.json', {
            'class_tag': pattern.class_tag.value,
            'seed': pattern.seed,
            'cells': pattern.cells,
            'placements': [p.to_dict() for p in pattern.placements],
        })

        return {
            'class_tag': pattern.class_tag.value,
            'seed': pattern.seed,
            'ones': pattern.ones,
            'fill_fraction': pattern.fill_fraction,
            'connected': is_connected(pattern),
            'shapes': len(pattern.placements),
        }

    def report(self, ctx, summary):
        with open(ctx.path('pattern.txt')) as handle:
            self.stdout.write(handle.read().replace('0', '.').replace('1', '#'))
        super().report(ctx, summary)
