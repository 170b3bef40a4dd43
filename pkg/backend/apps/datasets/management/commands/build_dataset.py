"""
Django management command to generate an MSDS dataset
"""
import logging

from apps.datasets.builder import build_dataset
from apps.datasets.files import save
from apps.patterns.pattern import PatternClass
from utils.commands import PipelineCommand

logger = logging.getLogger(__name__)


class Command(PipelineCommand):
    help = 'Generate patterns of one class, simulate their spectra and write dataset.msds'

    def add_command_arguments(self, parser):
        parser.add_argument(
            '--class',
            dest='class_tag',
            choices=[PatternClass.PLG, PatternClass.PTN, PatternClass.RDN],
            help='Pattern class (default: dataset.class_tag of the config)'
        )
        parser.add_argument('--n', type=int, help='Number of samples (default: dataset.n of the config)')

    def execute_run(self, ctx, **options):
        section = ctx.config.dataset
        if options.get('class_tag'):
            section.class_tag = options['class_tag']
        if options.get('n') is not None:
            section.n = options['n']
        cfg = ctx.config.solver_config(section.class_tag)
        ctx.fingerprints['solver'] = cfg.fingerprint()

        ds = build_dataset(
            section.class_tag,
            section.n,
            ctx.seed,
            cfg,
            workers=ctx.threads,
            params=section.pattern_params(),
        )
        ctx.fingerprints['dataset'] = save(ds, ctx.path('dataset.msds'))
        spectra = ds.spectra()
        return {
            'class_tag': ds.class_tag.value,
            'count': len(ds),
            'dataset': str(ctx.path('dataset.msds')),
            'mean_fill': float(ds.patterns().mean()),
            'mean_copr': float(spectra.mean()),
        }
