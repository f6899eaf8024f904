import csv
import math
import os
import tempfile
from io import StringIO

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from analytic.exceptions import ConfigError
from analytic.types import RoutingPolicy
from experiments.config import ExperimentKind, build_run_config, distance_grid, parse_float_list
from experiments.csv_output import emit_csv, format_value
from experiments.services import ExperimentService


def run_command(name: str, *args) -> str:
    out = StringIO()
    call_command(name, *args, stdout=out, stderr=StringIO())
    return out.getvalue()


def table_rows(text: str):
    lines = [line for line in text.splitlines() if line and not line.startswith('#')]
    return list(csv.DictReader(lines))


def footer_values(text: str):
    values = {}
    for line in text.splitlines():
        if line.startswith('# ') and not line.startswith('# config'):
            for pair in line[2:].split():
                key, value = pair.split('=')
                values[key] = float(value)
    return values


class ConfigTests(SimpleTestCase):

    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.addCleanup(self.directory.cleanup)

    def write_ini(self, text: str) -> str:
        path = os.path.join(self.directory.name, 'run.ini')
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(text)
        return path

    def test_defaults(self):
        config = build_run_config({}, ExperimentKind.HOP_CURVE)
        self.assertEqual(config.policy, RoutingPolicy.RANDOM)
        self.assertEqual(config.radio.r_tx, 250.0)
        self.assertEqual(config.radio.r_i, 450.0)
        self.assertEqual(config.radio.r_cs, 500.0)
        self.assertEqual(config.radio.capacity_c, 870000.0)
        self.assertAlmostEqual(config.radio.airtime_fraction_a, 8416.0 / 9090.0)
        self.assertEqual(config.deployment.describe()['length'], 1250.0)
        self.assertEqual(config.trials, 2000)
        self.assertEqual(config.ci_level, 0.99)
        self.assertEqual(config.grid[0], 125.0)
        self.assertEqual(config.grid[-1], 1250.0)

    def test_throughput_defaults(self):
        config = build_run_config({}, ExperimentKind.THROUGHPUT)
        self.assertEqual(config.trials, 1000)
        self.assertEqual(config.deployment.describe()['length'], 2000.0)
        self.assertEqual(config.grid[0], 10000.0)
        self.assertEqual(config.grid[-1], 300000.0)

    def test_rates_above_capacity_are_rejected(self):
        with self.assertRaises(ConfigError):
            build_run_config({'rates': '100000,900000'}, ExperimentKind.THROUGHPUT)
        config = build_run_config({'rates': '870000'}, ExperimentKind.THROUGHPUT)
        self.assertEqual(config.grid, (870000.0,))

    def test_planar_defaults(self):
        config = build_run_config({'dim': 2}, ExperimentKind.HOP_CURVE)
        self.assertEqual(config.deployment.lam, 0.0002)
        self.assertAlmostEqual(config.deployment.theta, math.pi / 3)

    def test_precedence(self):
        path = self.write_ini('[radio]\nrtx = 200\nri = 420\n\n[monte_carlo]\ntrials = 50\n')
        config = build_run_config({'config': path, 'ri': 400.0}, ExperimentKind.HOP_CURVE)
        self.assertEqual(config.radio.r_tx, 200.0)
        self.assertEqual(config.radio.r_i, 400.0)
        self.assertEqual(config.radio.r_cs, 500.0)
        self.assertEqual(config.trials, 50)

    @override_settings(MONTE_CARLO_TRIALS=77)
    def test_settings_default(self):
        self.assertEqual(build_run_config({}, ExperimentKind.MOMENTS).trials, 77)

    def test_explicit_airtime(self):
        config = build_run_config({'airtime_a': 0.5}, ExperimentKind.THROUGHPUT)
        self.assertEqual(config.radio.airtime_fraction_a, 0.5)
        self.assertIsNone(config.timing)

    def test_derived_airtime(self):
        config = build_run_config({'airtime_a': 0.5, 'derive_a': True, 'payload_bytes': 1500},
                                  ExperimentKind.THROUGHPUT)
        self.assertEqual(config.timing.payload_bytes, 1500)
        self.assertAlmostEqual(config.radio.airtime_fraction_a, config.timing.airtime_fraction())

    def test_unknown_key(self):
        path = self.write_ini('[radio]\nrange = 250\n')
        with self.assertRaises(ConfigError):
            build_run_config({'config': path}, ExperimentKind.HOP_CURVE)

    def test_unknown_section(self):
        path = self.write_ini('[radios]\nrtx = 250\n')
        with self.assertRaises(ConfigError):
            build_run_config({'config': path}, ExperimentKind.HOP_CURVE)

    def test_radio_ordering(self):
        with self.assertRaises(ConfigError):
            build_run_config({'ri': 200.0}, ExperimentKind.VALIDATE)

    def test_empty_grid(self):
        with self.assertRaises(ConfigError):
            build_run_config({'xmax': 100.0, 'xstep': 125.0}, ExperimentKind.HOP_CURVE)
        with self.assertRaises(ConfigError):
            build_run_config({'rates': ''}, ExperimentKind.THROUGHPUT)

    def test_bad_policy(self):
        with self.assertRaises(ConfigError):
            build_run_config({'policy': 'aodv'}, ExperimentKind.HOP_CURVE)

    def test_lists(self):
        self.assertEqual(parse_float_list('1,2.5', 'rates'), (1.0, 2.5))
        self.assertEqual(parse_float_list('0:1:0.5', 'rates'), (0.0, 0.5, 1.0))
        self.assertEqual(distance_grid(500.0, 250.0), (250.0, 500.0))
        with self.assertRaises(ConfigError):
            parse_float_list('1,x', 'rates')


class CsvOutputTests(SimpleTestCase):

    def test_format_value(self):
        self.assertEqual(format_value(0.1), '0.1')
        self.assertEqual(format_value(1 / 3), repr(1 / 3))
        self.assertEqual(format_value(math.nan), 'nan')
        self.assertEqual(format_value(None), '')
        self.assertEqual(format_value(True), '1')
        self.assertEqual(format_value(7), '7')

    def test_file_output(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'out.csv')
            count = emit_csv(path, {'seed': 1, 'lambda': 0.04}, ('x_m', 'n'), [(250.0, math.e)], ('done=1',))
            self.assertEqual(count, 1)
            with open(path, encoding='utf-8') as handle:
                text = handle.read()
            self.assertEqual(text, f'# config seed=1 lambda=0.04\nx_m,n\n250.0,{math.e!r}\n# done=1\n')
            self.assertEqual(os.listdir(directory), ['out.csv'])

    def test_failure_leaves_no_file(self):
        def rows():
            yield (1.0, 2.0)
            raise ConfigError('interrupted')

        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'out.csv')
            with self.assertRaises(ConfigError):
                emit_csv(path, {}, ('a', 'b'), rows())
            self.assertEqual(os.listdir(directory), [])

    def test_stream_output(self):
        stream = StringIO()
        emit_csv(None, {'seed': 2}, ('a',), [(1.5,)], stream=stream)
        self.assertEqual(stream.getvalue(), '# config seed=2\na\n1.5\n')


class HopCurveCommandTests(SimpleTestCase):

    def test_analytic_columns(self):
        output = run_command('hopcurve', '--analytic-only', '--xmax', '500', '--xstep', '250')
        self.assertTrue(output.startswith('# config experiment=HopCurve policy=random'))
        rows = table_rows(output)
        self.assertEqual([float(row['x_m']) for row in rows], [250.0, 500.0])
        self.assertAlmostEqual(float(rows[0]['analytic_exact']), math.e, places=10)
        self.assertAlmostEqual(float(rows[1]['analytic_exact']), math.e ** 2 - math.e, places=10)
        self.assertEqual(rows[0]['mc_mean'], '')

    def test_monte_carlo_agrees(self):
        output = run_command('hopcurve', '--lambda', '0.12', '--xmax', '250', '--xstep', '250',
                             '--trials', '400', '--seed', '5')
        row = table_rows(output)[0]
        mean, stderr = float(row['mc_mean']), float(row['mc_stderr'])
        self.assertLess(abs(mean - math.e), max(3 * stderr, 0.03 * math.e))
        self.assertEqual(int(row['trials']), 400)

    def test_planar_columns(self):
        output = run_command('hopcurve', '--dim', '2', '--analytic-only', '--xmax', '500', '--xstep', '250')
        row = table_rows(output)[1]
        self.assertEqual(row['analytic_exact'], '')
        self.assertEqual(row['gamma_baseline'], '')
        self.assertAlmostEqual(float(row['analytic_approx']), 3 * 500 / (2 * 250) + 9 / 16)

    def test_byte_identical_files(self):
        with tempfile.TemporaryDirectory() as directory:
            texts = []
            for name, workers in (('a.csv', '1'), ('b.csv', '1'), ('c.csv', '2')):
                path = os.path.join(directory, name)
                run_command('hopcurve', '--policy', 'furthest', '--lambda', '0.12', '--xmax', '500',
                            '--xstep', '250', '--trials', '60', '--seed', '3', '--workers', workers,
                            '--out', path)
                with open(path, 'rb') as handle:
                    texts.append(handle.read())
        self.assertEqual(texts[0], texts[1])
        self.assertEqual(texts[0], texts[2])

    def test_empty_grid_is_usage_error(self):
        with self.assertRaises(CommandError) as context:
            run_command('hopcurve', '--xmax', '100', '--xstep', '250')
        self.assertEqual(context.exception.returncode, 2)

    def test_bad_radio_is_usage_error(self):
        with self.assertRaises(CommandError) as context:
            run_command('hopcurve', '--ri', '100', '--analytic-only')
        self.assertEqual(context.exception.returncode, 2)


class ThroughputCommandTests(SimpleTestCase):

    def test_random_policy_defaults(self):
        output = run_command('throughput', '--airtime-a', '0.9', '--rates', '10000,100000,500000')
        footer = footer_values(output)
        self.assertAlmostEqual(footer['t_max_perfect_bps'] / 1e6, 0.16511, places=5)
        self.assertLess(footer['fixed_point_residual'], 1e-9)
        self.assertLess(footer['t_max_mac_bps'], footer['t_max_perfect_bps'])

        rows = table_rows(output)
        self.assertEqual(float(rows[0]['t_mac_bps']), 10000.0)
        self.assertEqual(rows[0]['beyond_validity_flag'], '0')
        self.assertEqual(rows[2]['beyond_validity_flag'], '1')
        self.assertEqual(rows[2]['t_mac_bps'], 'nan')
        self.assertIn('t_mac_approx_bps', rows[0])

    def test_rate_above_capacity(self):
        with self.assertRaises(CommandError) as context:
            run_command('throughput', '--rates', '1000000')
        self.assertEqual(context.exception.returncode, 2)


class OtherCommandTests(SimpleTestCase):

    def test_hidden_nodes(self):
        output = run_command('hidden', '--analytic-only', '--lambda', '0.12', '--xmax', '1500', '--xstep', '500')
        rows = table_rows(output)
        self.assertTrue(0.9 <= float(rows[-1]['analytic']) <= 1.1)
        self.assertIn('# mean_hop_m=125.0', output)

    def test_moments(self):
        output = run_command('moments', '--trials', '2000', '--seed', '9')
        mean_row = table_rows(output)[0]
        self.assertEqual(mean_row['quantity'], 'mean_m')
        self.assertEqual(float(mean_row['analytic']), 125.0)
        self.assertLess(abs(float(mean_row['mc_mean']) - 125.0), max(3 * float(mean_row['mc_stderr']), 1.25))

    def test_density_sweep(self):
        output = run_command('density_sweep', '--policy', 'furthest', '--airtime-a', '0.9',
                             '--lambdas', '0.02,0.12,0.4')
        perfect = [float(row['t_max_perfect_bps']) for row in table_rows(output)]
        self.assertEqual(perfect, sorted(perfect))


class ValidateCommandTests(SimpleTestCase):

    def test_default_suite_passes(self):
        output = run_command('validate', '--trials', '400', '--airtime-a', '0.9')
        self.assertNotIn('FAIL', output)
        self.assertIn('PASS ode_residual_random', output)
        self.assertIn('PASS hop_moment_oracle', output)
        self.assertIn('PASS baseline_inferiority', output)

    @override_settings(MOMENT_TRIALS=1000)
    def test_tightened_tolerance_fails(self):
        with self.assertRaises(CommandError) as context:
            run_command('validate', '--trials', '50', '--tolerance-scale', '1e-30')
        self.assertEqual(context.exception.returncode, 1)

    def test_bad_radio_fails_before_computing(self):
        with self.assertRaises(CommandError) as context:
            run_command('validate', '--ri', '200')
        self.assertEqual(context.exception.returncode, 2)


class ValidationCheckTests(SimpleTestCase):

    def setUp(self):
        self.service = ExperimentService(build_run_config({'trials': 400}, ExperimentKind.VALIDATE))

    def test_hidden_node_convergence_past_three_ranges(self):
        self.assertLess(self.service._hidden_node_convergence(), 0.1)

    def test_chebyshev_bound_over_density_and_angle_grid(self):
        ratio = self.service._chebyshev_ratio()
        self.assertLess(ratio, 1.0)
        self.assertGreater(ratio, 0.5)

    def test_exact_series_beats_gamma_baseline(self):
        self.assertLess(self.service._baseline_inferiority(), 1.0)

    @override_settings(MOMENT_TRIALS=20000)
    def test_hop_moment_oracle_within_three_stderr(self):
        self.assertLess(self.service._hop_moment_oracle(), 1.0)
