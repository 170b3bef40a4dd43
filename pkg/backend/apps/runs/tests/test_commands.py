"""
Tests for the shared pipeline command behaviour and the run ledger.
"""
import json
import tempfile
from datetime import timedelta
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase
from django.utils import timezone

from apps.datasets.files import save
from apps.datasets.tests.test_files import small_dataset
from apps.runs.models import RunRecord
from apps.runs.utils import json_serial, record_run


class RecordRunTests(TestCase):
    """Test for record_run and RunRecord."""

    def test_record_run(self):
        started = timezone.now()
        record = record_run('split', RunRecord.SUCCESS, 2 ** 64 - 1, Path('/tmp/out'), {'seed': 1}, started,
                            summary={'n': 3}, fingerprints={'train': 'abc'})
        self.assertEqual(record.seed, str(2 ** 64 - 1))
        self.assertEqual(record.summary, {'n': 3})
        self.assertEqual(record.fingerprints, {'train': 'abc'})
        self.assertGreaterEqual(record.duration.total_seconds(), 0.0)
        self.assertIn('split', str(record))

    def test_newest_first(self):
        earlier = timezone.now() - timedelta(minutes=5)
        first = record_run('a', RunRecord.SUCCESS, 1, Path('.'), {}, earlier)
        second = record_run('b', RunRecord.FAILED, 1, Path('.'), {}, timezone.now(), error='boom')
        self.assertEqual(list(RunRecord.objects.all()), [second, first])

    def test_json_serial(self):
        self.assertEqual(json_serial(np.float32(0.5)), 0.5)
        self.assertEqual(json_serial(np.arange(2)), [0, 1])
        self.assertEqual(json_serial(complex(1, -2)), [1.0, -2.0])


class PipelineCommandTests(TestCase):
    """Test for PipelineCommand via call_command."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def run_command(self, *args):
        out = StringIO()
        call_command(*args, stdout=out, stderr=StringIO())
        return out.getvalue()

    def test_success_writes_manifest_and_record(self):
        out_dir = self.root / 'pattern'
        self.run_command('gen_pattern', '--class', 'PTN', '--seed', '11', '--out', str(out_dir))
        config = json.loads((out_dir / 'config.json').read_text())
        manifest = json.loads((out_dir / 'run.json').read_text())
        self.assertEqual(config['seed'], 11)
        self.assertEqual(manifest['command'], 'gen_pattern')
        self.assertIn('numpy', manifest['versions'])
        self.assertEqual(manifest['summary']['class_tag'], 'PTN')
        self.assertEqual(len((out_dir / 'pattern.txt').read_text().splitlines()), 16)

        record = RunRecord.objects.get()
        self.assertEqual(record.status, RunRecord.SUCCESS)
        self.assertEqual(record.seed, '11')
        self.assertEqual(record.output_dir, str(out_dir))

    def test_same_seed_same_artifacts(self):
        for name in ('a', 'b'):
            self.run_command('gen_pattern', '--class', 'RDN', '--seed', '4', '--out', str(self.root / name))
        self.assertEqual((self.root / 'a' / 'pattern.txt').read_text(),
                         (self.root / 'b' / 'pattern.txt').read_text())

    def test_json_summary(self):
        output = self.run_command('gen_pattern', '--class', 'RDN', '--seed', '2', '--json',
                                  '--out', str(self.root / 'json'))
        summary = json.loads(output)
        self.assertEqual(summary['seed'], 2)
        self.assertEqual(summary['class_tag'], 'RDN')

    def test_usage_error_exits_with_one(self):
        with self.assertRaises(CommandError) as ctx:
            self.run_command('gen_pattern', '--threads', 'many')
        self.assertEqual(ctx.exception.returncode, 1)
        with self.assertRaises(CommandError) as ctx:
            self.run_command('evaluate', '--dataset', 'x.msds')
        self.assertEqual(ctx.exception.returncode, 1)
        self.assertFalse(RunRecord.objects.exists())

    def test_pipeline_error_exits_with_two(self):
        out_dir = self.root / 'failed'
        with self.assertRaises(CommandError) as ctx:
            self.run_command('evaluate', '--checkpoint', str(self.root / 'missing'),
                             '--dataset', str(self.root / 'missing.msds'), '--out', str(out_dir))
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn('InvalidConfigError', str(ctx.exception))
        record = RunRecord.objects.get()
        self.assertEqual(record.status, RunRecord.FAILED)
        self.assertIn('InvalidConfigError', record.error)
        self.assertFalse((out_dir / 'run.json').exists())

    def test_bad_config_file_exits_with_two(self):
        config = self.root / 'config.json'
        config.write_text(json.dumps({'train': {'learning_rate': 1}}))
        with self.assertRaises(CommandError) as ctx:
            self.run_command('gen_pattern', '--config', str(config), '--out', str(self.root / 'x'))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_fit_and_evaluate_forest(self):
        train_path = self.root / 'train.msds'
        test_path = self.root / 'test.msds'
        save(small_dataset(n=12, class_tag='RDN', master_seed=1), train_path)
        save(small_dataset(n=4, class_tag='RDN', master_seed=2), test_path)

        fit_dir = self.root / 'fit'
        summary = json.loads(self.run_command(
            'fit_rfr', '--train', str(train_path), '--test', str(test_path), '--trees', '3',
            '--seed', '5', '--json', '--out', str(fit_dir),
        ))
        self.assertEqual(summary['n_trees'], 3)
        self.assertIn('test_mse', summary)
        manifest = json.loads((fit_dir / 'run.json').read_text())
        self.assertEqual(set(manifest['fingerprints']), {'train', 'test'})

        eval_dir = self.root / 'eval'
        result = json.loads(self.run_command(
            'evaluate', '--checkpoint', str(fit_dir / 'forest.json'), '--dataset', str(test_path),
            '--json', '--out', str(eval_dir),
        ))
        self.assertAlmostEqual(result['mean'], summary['test_mse'])
        lines = (eval_dir / 'errors.csv').read_text().splitlines()
        self.assertEqual(lines[0], 'index,mse')
        self.assertEqual(len(lines), 5)
        self.assertTrue((eval_dir / 'histogram.json').exists())


class ListRunsTests(TestCase):
    """Test for the list_runs command."""

    def test_filters_and_json(self):
        record_run('split', RunRecord.SUCCESS, 1, Path('out/split'), {}, timezone.now())
        record_run('fit_rfr', RunRecord.FAILED, 2, Path('out/fit'), {}, timezone.now(), error='EmptyInputError: x')
        out = StringIO()
        call_command('list_runs', '--status', RunRecord.FAILED, '--json', stdout=out)
        runs = json.loads(out.getvalue())
        self.assertEqual([run['command'] for run in runs], ['fit_rfr'])
        self.assertEqual(runs[0]['error'], 'EmptyInputError: x')

    def test_empty_ledger(self):
        out = StringIO()
        call_command('list_runs', stdout=out)
        self.assertIn('No runs recorded', out.getvalue())
