"""
Django management command to build the cross-benchmark matrix
"""
import logging

from apps.analytics.benchmark import RFR, BenchRow, cross_benchmark
from apps.analytics.evaluation import fit_predictor, load_predictor
from apps.datasets.files import load
from apps.forward.specs import Arch
from apps.patterns.pattern import PatternClass
from utils.commands import PipelineCommand
from utils.error_handling import InvalidConfigError

logger = logging.getLogger(__name__)

CLASS_KEYS = (PatternClass.PLG.value, PatternClass.PTN.value, PatternClass.RDN.value)


def default_rows(dataset_keys, arch):
    """
    One forest and one default network per class, a deeper network on PTN,
    the CNN-LSTM on RDN and the default network on RDN_LARGE when present.
    """
    rows = []
    for key in CLASS_KEYS:
        if key in dataset_keys:
            rows.append({'name': f"{key}_{RFR}", 'arch': RFR, 'train': key})
            rows.append({'name': f"{key}_{arch}", 'arch': arch, 'train': key})
    extras = [('PTN', Arch.RESNET34S.value), ('RDN', Arch.RESNA.value), ('RDN_LARGE', arch)]
    for key, extra_arch in extras:
        name = f"{key}_{extra_arch}"
        if key in dataset_keys and all(row['name'] != name for row in rows):
            rows.append({'name': name, 'arch': extra_arch, 'train': key})
    return rows


class Command(PipelineCommand):
    help = 'Fit every configured model and score it on every test set (analytics.datasets / analytics.rows)'

    def execute_run(self, ctx, **options):
        section = ctx.config.analytics
        if not section.datasets:
            raise InvalidConfigError("crossbench needs analytics.datasets in the run configuration")
        rows = section.rows or default_rows(set(section.datasets), ctx.config.model.arch)
        if not rows:
            raise InvalidConfigError("no cross-benchmark rows: name datasets PLG, PTN or RDN or give analytics.rows")

        testsets = {}
        for key, paths in section.datasets.items():
            if 'test' in paths:
                testsets[key] = load(paths['test'])
                ctx.fingerprints[f"{key}_test"] = testsets[key].fingerprint()

        trainsets = {}
        models = []
        for row in rows:
            key = row['train']
            if key not in section.datasets or 'train' not in section.datasets[key]:
                raise InvalidConfigError(f"row {row['name']!r} trains on unknown dataset {key!r}")
            if key not in trainsets:
                trainsets[key] = load(section.datasets[key]['train'])
                ctx.fingerprints[f"{key}_train"] = trainsets[key].fingerprint()
            train = trainsets[key]
            if row.get('checkpoint'):
                predictor = load_predictor(row['checkpoint'])
            else:
                logger.info(f"Fitting {row['name']} ({row['arch']}) on {len(train)} {key} samples")
                predictor = fit_predictor(row['arch'], train, ctx.config, ctx.seed, workers=ctx.threads)
            models.append(BenchRow(row['name'], row['arch'], key, train.class_tag.value, predictor))

        matrix = cross_benchmark(models, testsets)
        matrix.to_csv(ctx.path('crossbench.csv'))
        ctx.path('crossbench.md').write_text(matrix.to_markdown())
        ctx.write_json('crossbench.json', matrix.to_dict())
        return {
            'rows': len(matrix.rows),
            'cols': matrix.cols,
            'column_minima': matrix.column_minima(),
            'diagonal': matrix.diagonal_check(),
            'trend_passes': matrix.trend_passes(),
            'matrix': matrix.to_dict()['rows'],
        }

    def report(self, ctx, summary):
        self.stdout.write(ctx.path('crossbench.md').read_text())
        for name, check in summary['diagonal'].items():
            style = self.style.SUCCESS if check['is_row_min'] else self.style.WARNING
            self.stdout.write(style(f"  {name}: in-domain {check['in_domain']} is row minimum: {check['is_row_min']}"))
