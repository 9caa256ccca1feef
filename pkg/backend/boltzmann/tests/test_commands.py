import tempfile
from datetime import timedelta
from io import StringIO
from pathlib import Path

import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase
from django.utils import timezone

from boltzmann.models import Run
from boltzmann.spectral import codec


class CommandTestCase(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def call(self, name, *args):
        out = StringIO()
        call_command(name, *args, '--no-progress', stdout=out)
        return out.getvalue()

    def gen_data(self, out_dir, *extra):
        return self.call(
            'gen_data', '--d', '2', '--n', '8', '--counts', '2,2,2', '--seed', '7',
            '--out-dir', str(out_dir), '--run-id', out_dir.name, *extra,
        )


class GenDataCommandTest(CommandTestCase):
    def test_writes_corpus_and_manifest(self):
        output = self.gen_data(self.root / 'corpus-a')
        self.assertIn('Generated 6 samples', output)

        corpus = codec.read_document(self.root / 'corpus-a' / 'corpus.json', 'corpus')
        self.assertEqual(len(corpus['samples']), 6)
        manifest = codec.read_document(self.root / 'corpus-a' / 'manifest.json', 'manifest')
        self.assertEqual(manifest['exit_code'], 0)
        self.assertEqual(manifest['config']['data']['counts'], [2, 2, 2])
        self.assertIn('corpus.json', manifest['outputs'])

        run = Run.objects.get(run_id='corpus-a')
        self.assertTrue(run.succeeded)
        self.assertEqual(run.result['n_samples'], 6)

    def test_same_seed_gives_identical_corpus(self):
        self.gen_data(self.root / 'first')
        self.gen_data(self.root / 'second')
        first = (self.root / 'first' / 'corpus.json').read_bytes()
        self.assertEqual(first, (self.root / 'second' / 'corpus.json').read_bytes())

    def test_rerun_from_manifest(self):
        self.gen_data(self.root / 'original', '--dump-kernel')
        self.assertTrue((self.root / 'original' / 'kernel.json').exists())
        self.call(
            'gen_data',
            '--from-manifest', str(self.root / 'original' / 'manifest.json'),
            '--out-dir', str(self.root / 'replay'),
        )
        self.assertEqual(
            (self.root / 'original' / 'corpus.json').read_bytes(),
            (self.root / 'replay' / 'corpus.json').read_bytes(),
        )

    def test_manifest_of_another_command_is_rejected(self):
        self.gen_data(self.root / 'data')
        with self.assertRaises(CommandError) as ctx:
            self.call('simulate', '--from-manifest', str(self.root / 'data' / 'manifest.json'))
        self.assertEqual(ctx.exception.returncode, 1)

    def test_empty_corpus_is_a_usage_error(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('gen_data', '--n', '8', '--counts', '0,0,0', '--out-dir', str(self.root / 'empty'))
        self.assertEqual(ctx.exception.returncode, 1)
        manifest = codec.read_document(self.root / 'empty' / 'manifest.json', 'manifest')
        self.assertEqual(manifest['result']['error'], 'ContractError')

    def test_odd_grid_is_a_config_error(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('gen_data', '--n', '7', '--out-dir', str(self.root / 'odd'))
        self.assertEqual(ctx.exception.returncode, 1)
        self.assertFalse((self.root / 'odd').exists())


class TrainCommandTest(CommandTestCase):
    def setUp(self):
        super().setUp()
        self.gen_data(self.root / 'corpus')
        self.corpus = str(self.root / 'corpus' / 'corpus.json')

    def train(self, out_dir, *extra):
        return self.call(
            'train', '--corpus', self.corpus, '--n', '8', '--n-trun', '2', '--m', '2',
            '--out-dir', str(out_dir), *extra,
        )

    def test_budget_exhaustion_exits_with_three(self):
        with self.assertRaises(CommandError) as ctx:
            self.train(self.root / 'short', '--epochs', '5', '--tol', '0')
        self.assertEqual(ctx.exception.returncode, 3)

        checkpoint = codec.read_document(self.root / 'short' / 'checkpoint.json', 'checkpoint')
        self.assertEqual(checkpoint['n_real_params'], 192)
        self.assertEqual(checkpoint['epoch'], 5)
        losses = pd.read_csv(self.root / 'short' / 'loss.csv')
        self.assertEqual(len(losses), 5)

    def test_quadrature_initialization_reaches_tolerance(self):
        output = self.train(self.root / 'quad', '--n-trun', '4', '--m', '129', '--init', 'quadrature', '--tol', '1e-6')
        self.assertIn('tolerance', output)

    def test_resume_continues_epoch_numbering(self):
        with self.assertRaises(CommandError):
            self.train(self.root / 'first', '--epochs', '3', '--tol', '0')
        with self.assertRaises(CommandError):
            self.train(
                self.root / 'resumed', '--epochs', '6', '--tol', '0',
                '--resume', str(self.root / 'first' / 'checkpoint.json'),
            )
        losses = pd.read_csv(self.root / 'resumed' / 'loss.csv')
        self.assertEqual(list(losses['epoch']), [3, 4, 5])

    def test_sweep_writes_ablation_table(self):
        with self.assertRaises(CommandError) as ctx:
            self.train(self.root / 'sweep', '--epochs', '2', '--tol', '0', '--sweep', 'n_trun=1,2;M=1')
        self.assertEqual(ctx.exception.returncode, 3)
        table = pd.read_csv(self.root / 'sweep' / 'ablation.csv')
        self.assertEqual(list(table['n_trun']), [1, 2])
        self.assertEqual(list(table['n_real_params']), [24, 96])
        self.assertTrue((self.root / 'sweep' / 'sweep' / 'n1_m1_lr0.01' / 'checkpoint.json').exists())

    def test_grid_must_match_corpus(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('train', '--corpus', self.corpus, '--n', '16', '--out-dir', str(self.root / 'mismatch'))
        self.assertEqual(ctx.exception.returncode, 1)

    def test_missing_corpus(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('train', '--corpus', str(self.root / 'nope.json'), '--out-dir', str(self.root / 'missing'))
        self.assertEqual(ctx.exception.returncode, 1)


class SimulateCommandTest(CommandTestCase):
    def test_fast_operator_trajectory(self):
        out_dir = self.root / 'sim'
        self.call(
            'simulate', '--operator', 'fast', '--d', '2', '--n', '8', '--dt', '0.01', '--t-final', '0.05',
            '--initial', 'maxwellian', '--dump-fields', '--run-id', 'sim', '--out-dir', str(out_dir),
        )
        frame = pd.read_csv(out_dir / 'trajectory.csv')
        self.assertEqual(list(frame['step']), [0, 1, 2, 3, 4, 5])
        self.assertLess(abs(frame['rho'].iloc[-1] - frame['rho'].iloc[0]), 1e-12)
        self.assertTrue((out_dir / 'fields' / 'sim_5.json').exists())

    def test_fast_reference_column(self):
        out_dir = self.root / 'ref'
        self.call(
            'simulate', '--operator', 'fast', '--reference', 'fast', '--n', '8', '--t-final', '0.02',
            '--out-dir', str(out_dir),
        )
        frame = pd.read_csv(out_dir / 'trajectory.csv')
        self.assertEqual(frame['err_vs_reference'].abs().max(), 0.0)

    def test_specnet_requires_checkpoint(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('simulate', '--operator', 'specnet', '--n', '8', '--out-dir', str(self.root / 'nn'))
        self.assertEqual(ctx.exception.returncode, 1)

    def test_bkw_needs_two_dimensions(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('simulate', '--initial', 'bkw', '--d', '3', '--n', '4', '--out-dir', str(self.root / 'bkw3'))
        self.assertEqual(ctx.exception.returncode, 1)


class ValidateCommandTest(CommandTestCase):
    def test_gradient_suite_passes(self):
        out_dir = self.root / 'grad'
        output = self.call('validate', '--suite', 'gradients', '--out-dir', str(out_dir))
        self.assertIn('passed', output)
        report = codec.read_document(out_dir / 'report.json', 'validation_report')
        self.assertTrue(report['passed'])
        self.assertTrue((out_dir / 'report.csv').exists())

    def test_checkpoint_suites_need_a_checkpoint(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('validate', '--suite', 'consistency', '--out-dir', str(self.root / 'cons'))
        self.assertEqual(ctx.exception.returncode, 1)

    def test_unknown_suite(self):
        with self.assertRaises(CommandError):
            self.call('validate', '--suite', 'everything')


class CollisionOperatorCommandTest(TestCase):
    def test_list(self):
        out = StringIO()
        call_command('collision_operator', '--list', stdout=out)
        output = out.getvalue()
        for provider in ('fast', 'direct', 'specnet'):
            self.assertIn(provider, output)
        self.assertIn('(CURRENT)', output)

    def test_smoke_test(self):
        out = StringIO()
        call_command('collision_operator', '--test', 'fast', '--n', '8', stdout=out)
        self.assertIn('returned a finite Q(f)', out.getvalue())


class CleanupStuckRunsCommandTest(TestCase):
    def setUp(self):
        self.run = Run.objects.create(run_id='stuck', command='train', is_processing=True, processing_status='processing')
        Run.objects.filter(pk=self.run.pk).update(updated_at=timezone.now() - timedelta(days=2))

    def test_dry_run_changes_nothing(self):
        call_command('cleanup_stuck_runs', '--older-than', '60', '--dry-run', stdout=StringIO())
        self.run.refresh_from_db()
        self.assertTrue(self.run.is_processing)

    def test_marks_runs_as_timed_out(self):
        call_command('cleanup_stuck_runs', '--older-than', '60', stdout=StringIO())
        self.run.refresh_from_db()
        self.assertFalse(self.run.is_processing)
        self.assertEqual(self.run.processing_status, 'timeout')
