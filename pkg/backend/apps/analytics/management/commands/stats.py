"""
Django management command to compute per-bin spectrum statistics
"""
import logging
from pathlib import Path

import numpy as np

from apps.analytics.benchmark import prediction_stats
from apps.analytics.evaluation import load_predictor
from apps.analytics.plots import plot_kurtosis, plot_mean_variance
from apps.analytics.statistics import bin_stats_array
from apps.datasets.files import load
from utils.commands import PipelineCommand
from utils.error_handling import GridMismatch

logger = logging.getLogger(__name__)


class Command(PipelineCommand):
    help = 'Mean, variance and Pearson kurtosis of 1 - coPR per frequency bin'

    def add_command_arguments(self, parser):
        parser.add_argument('--dataset', action='append', required=True,
                            help='MSDS file; repeat to compare several sets')
        parser.add_argument('--checkpoint', help='Also report statistics of this predictor on every dataset')

    def execute_run(self, ctx, **options):
        predictor = load_predictor(options['checkpoint']) if options.get('checkpoint') else None
        stats = {}
        freqs = None
        for path in options['dataset']:
            ds = load(path)
            label = ds.class_tag.value
            if label in stats or f"{label}_truth" in stats:
                label = Path(path).stem
            ctx.fingerprints[label] = ds.fingerprint()
            if freqs is not None and (len(freqs) != len(ds.freqs) or not np.allclose(freqs, ds.freqs, rtol=1e-9)):
                raise GridMismatch(f"{path} uses another frequency grid than the first dataset")
            freqs = ds.freqs
            if predictor is None:
                stats[label] = bin_stats_array(ds.freqs, ds.spectra())
            else:
                for kind, value in prediction_stats(predictor, ds).items():
                    stats[f"{label}_{kind}"] = value

        for label, value in stats.items():
            value.to_csv(ctx.path(f"bin_stats_{label}.csv"))
        ctx.write_json('bin_stats.json', {label: value.to_dict() for label, value in stats.items()})
        if ctx.config.analytics.plots:
            plot_mean_variance(freqs, {k: {'mean': v.mean, 'variance': v.variance} for k, v in stats.items()},
                               ctx.path('mean_variance.svg'))
            plot_kurtosis(freqs, {k: v.kurtosis for k, v in stats.items()}, ctx.path('kurtosis.svg'))
        return {
            label: {
                'count': value.count,
                'mean_of_mean': float(value.mean.mean()),
                'max_variance': float(value.variance.max()),
                'kurtosis_defined_bins': int(np.isfinite(value.kurtosis).sum()),
            }
            for label, value in stats.items()
        }
