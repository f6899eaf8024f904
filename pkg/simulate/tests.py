import math

import numpy as np
from django.test import SimpleTestCase
from scipy.stats import chisquare, kstest, norm

from analytic.exceptions import AllCensoredError, DeadEndError, DomainError
from analytic.moments import e_xf2d, furthest_moments_1d
from analytic.series import n_furthest_1d, n_random_1d
from analytic.services import HopCountService
from analytic.types import Deployment, HopMethod, Line, MomentMode, RadioParams, RoutingPolicy, Sector
from simulate.rng import SeededRun
from simulate.routing import hops_to_pass, route_next_hop, walk_line
from simulate.sampling import sample_ppp_1d, sample_ppp_rect, sample_ppp_sector
from simulate.services import MonteCarloService, TrialEstimate, run_trials, _first_hop_trial


R = 250.0
ORACLE_REL_FLOOR = 0.03
ORACLE_GRID = (125.0, 250.0, 500.0, 750.0, 1000.0, 1250.0)
DENSITIES = (0.04, 0.12, 0.4)
MOMENT_SAMPLES = 100000


def radio() -> RadioParams:
    return RadioParams(r_tx=R, r_i=450.0, r_cs=550.0, capacity_c=870000.0, airtime_fraction_a=0.9)


def line_service(policy: str, lam: float, trials: int, seed: int = 11, length: float = 1250.0) -> MonteCarloService:
    return MonteCarloService(policy, radio(), Deployment(lam, Line(length)), trials=trials, master_seed=seed, workers=1)


class SeededRunTests(SimpleTestCase):

    def test_same_pair_same_stream(self):
        first = SeededRun(5, 17).generator().uniform(size=8)
        second = SeededRun(5, 17).generator().uniform(size=8)
        self.assertTrue(np.array_equal(first, second))

    def test_distinct_trials_differ(self):
        first = SeededRun(5, 0).generator().uniform(size=8)
        second = SeededRun(5, 1).generator().uniform(size=8)
        self.assertFalse(np.array_equal(first, second))

    def test_stream_is_keyed_by_the_pair(self):
        state = SeededRun(5, 17).generator().bit_generator.state['state']
        self.assertEqual([int(value) for value in state['key']], [5, 17])
        self.assertTrue(np.all(state['counter'] == 0))
        swapped = SeededRun(17, 5).generator().uniform(size=8)
        self.assertFalse(np.array_equal(SeededRun(5, 17).generator().uniform(size=8), swapped))

    def test_rejects_negative_index(self):
        with self.assertRaises(DomainError):
            SeededRun(5, -1)


class SamplingTests(SimpleTestCase):

    def test_line_count_is_poisson_mean(self):
        counts = np.array([sample_ppp_1d(0.04, 1250.0, SeededRun(3, i)).size for i in range(2000)])
        stderr = counts.std(ddof=1) / math.sqrt(counts.size)
        self.assertLess(abs(counts.mean() - 50.0), 3 * stderr)

    def test_line_positions_sorted_in_range(self):
        nodes = sample_ppp_1d(0.1, 500.0, SeededRun(3, 0))
        self.assertTrue(np.all(np.diff(nodes) >= 0))
        self.assertTrue(np.all((nodes >= 0) & (nodes <= 500.0)))

    def test_vanishing_length_is_empty(self):
        self.assertEqual(sample_ppp_1d(0.04, 1e-9, SeededRun(3, 0)).size, 0)

    def test_line_is_reproducible(self):
        self.assertTrue(np.array_equal(
            sample_ppp_1d(0.04, 1250.0, SeededRun(9, 4)), sample_ppp_1d(0.04, 1250.0, SeededRun(9, 4))
        ))

    def test_sector_radial_law(self):
        # about 10^5 points in the sector
        radii, _ = sample_ppp_sector(3.1, math.pi / 3, R, SeededRun(4, 0))
        self.assertGreater(radii.size, 90000)
        statistic = kstest(radii / R, lambda u: np.clip(u, 0.0, 1.0) ** 2).statistic
        self.assertLess(statistic, 0.01)

    def test_sector_angles_bounded(self):
        _, angles = sample_ppp_sector(0.05, math.pi / 3, R, SeededRun(4, 1))
        self.assertTrue(np.all(np.abs(angles) <= math.pi / 6))

    def test_sector_is_reproducible(self):
        first = sample_ppp_sector(0.01, math.pi / 2, R, SeededRun(4, 2))
        second = sample_ppp_sector(0.01, math.pi / 2, R, SeededRun(4, 2))
        self.assertTrue(np.array_equal(first[0], second[0]))
        self.assertTrue(np.array_equal(first[1], second[1]))

    def test_sector_rejects_wide_angle(self):
        with self.assertRaises(DomainError):
            sample_ppp_sector(0.01, 4.0, R, SeededRun(4, 0))

    def test_rect_bounds(self):
        nodes = sample_ppp_rect(0.001, 2000.0, 1000.0, SeededRun(4, 3))
        self.assertEqual(nodes.shape[1], 2)
        self.assertTrue(np.all((nodes[:, 0] >= 0) & (nodes[:, 0] <= 2000.0)))
        self.assertTrue(np.all(np.abs(nodes[:, 1]) <= 500.0))

    def test_rejects_nonpositive_density(self):
        with self.assertRaises(DomainError):
            sample_ppp_1d(0.0, 100.0, SeededRun(1, 0))


class RoutingTests(SimpleTestCase):

    def test_random_choice_is_uniform(self):
        nodes = np.array([40.0, 90.0, 160.0, 230.0, 400.0])
        rng = SeededRun(21, 0).generator()
        picks = [route_next_hop(0.0, nodes, RoutingPolicy.RANDOM, R, rng) for _ in range(10000)]
        counts = [picks.count(value) for value in nodes[:4]]
        self.assertEqual(sum(counts), 10000)
        self.assertGreater(chisquare(counts).pvalue, 0.01)

    def test_furthest_is_argmax(self):
        nodes = np.array([100.0, 240.0])
        rng = SeededRun(1, 0).generator()
        self.assertEqual(route_next_hop(0.0, nodes, 'furthest', R, rng), 240.0)

    def test_single_candidate(self):
        nodes = np.array([10.0, 180.0, 600.0])
        rng = SeededRun(1, 0).generator()
        for policy in RoutingPolicy:
            self.assertEqual(route_next_hop(100.0, nodes, policy, R, rng), 180.0)

    def test_dead_end(self):
        rng = SeededRun(1, 0).generator()
        with self.assertRaises(DeadEndError):
            route_next_hop(0.0, np.array([300.0]), 'random', R, rng)
        with self.assertRaises(DeadEndError):
            route_next_hop(0.0, np.array([]), 'furthest', R, rng)

    def test_plane_sector(self):
        nodes = np.array([[100.0, 0.0], [200.0, 10.0], [-50.0, 0.0], [50.0, 200.0]])
        rng = SeededRun(1, 0).generator()
        chosen = route_next_hop(np.zeros(2), nodes, 'furthest', R, rng, np.array([1000.0, 0.0]), math.pi / 3)
        self.assertTrue(np.array_equal(chosen, nodes[1]))

    def test_plane_needs_destination(self):
        rng = SeededRun(1, 0).generator()
        with self.assertRaises(DomainError):
            route_next_hop(np.zeros(2), np.array([[1.0, 0.0]]), 'random', R, rng)

    def test_walk_and_crossings(self):
        nodes = np.array([200.0, 350.0, 600.0, 800.0])
        reached = walk_line(nodes, RoutingPolicy.FURTHEST, R, SeededRun(1, 0).generator(), 599.0)
        self.assertTrue(np.array_equal(reached, [200.0, 350.0, 600.0]))
        hops = hops_to_pass(reached, np.array([0.0, 199.0, 200.0, 250.0, 599.0]))
        self.assertEqual(hops.tolist(), [1, 1, 2, 2, 3])


class TrialEstimateTests(SimpleTestCase):

    def test_from_samples(self):
        estimate = TrialEstimate.from_samples(np.array([1.0, 2.0, 3.0, 4.0]), 4, 0.99)
        self.assertEqual(estimate.mean, 2.5)
        self.assertAlmostEqual(estimate.stderr, math.sqrt(5 / 3) / 2)
        self.assertEqual(estimate.censoring_rate, 0.0)
        self.assertIsNone(estimate.diagnostic)
        self.assertAlmostEqual(estimate.ci_half_width, norm.ppf(0.995) * estimate.stderr)

    def test_censoring_diagnostic(self):
        with self.assertLogs('simulate', level='WARNING'):
            estimate = TrialEstimate.from_samples(np.ones(90), 100, 0.99)
        self.assertAlmostEqual(estimate.censoring_rate, 0.1)
        self.assertIn('censoring', estimate.diagnostic)

    def test_all_censored(self):
        with self.assertRaises(AllCensoredError):
            TrialEstimate.from_samples(np.array([1.0]), 50, 0.99)

    def test_invariants(self):
        with self.assertRaises(DomainError):
            TrialEstimate(mean=1.0, stderr=0.1, ci_level=0.99, trials_run=3, trials_censored=4)
        with self.assertRaises(DomainError):
            TrialEstimate(mean=1.0, stderr=-0.1, ci_level=0.99, trials_run=3, trials_censored=0)


class RunTrialsTests(SimpleTestCase):

    def test_results_follow_trial_order(self):
        results = run_trials(lambda run: run.trial_index, 7, master_seed=2)
        self.assertEqual(results, list(range(7)))

    def test_worker_invariance(self):
        deployment = Deployment(0.04, Line(2000.0))
        serial = MonteCarloService('random', radio(), deployment, trials=200, master_seed=8, workers=1)
        parallel = MonteCarloService('random', radio(), deployment, trials=200, master_seed=8, workers=2)
        self.assertTrue(np.array_equal(serial.sample_hop_distances()[0], parallel.sample_hop_distances()[0]))

    def test_first_hop_trial_is_reproducible(self):
        run = SeededRun(13, 5)
        self.assertEqual(_first_hop_trial(run, RoutingPolicy.FURTHEST, 0.04, None, R),
                         _first_hop_trial(run, RoutingPolicy.FURTHEST, 0.04, None, R))


class HopCountOracleTests(SimpleTestCase):

    def assertAgrees(self, estimate: TrialEstimate, reference: float):
        tolerance = estimate.tolerance(reference, ORACLE_REL_FLOOR)
        self.assertLess(abs(estimate.mean - reference), tolerance, f"{estimate.mean} vs {reference}")

    def test_random_policy_at_one_range(self):
        estimate = line_service('random', 0.12, 2000).estimate_n_detailed([250.0])[0]
        self.assertAgrees(estimate, math.e)

    def test_furthest_policy(self):
        estimate = line_service('furthest', 0.4, 2000).estimate_n_detailed([1000.0])[0]
        self.assertAgrees(estimate, n_furthest_1d(1000.0, 0.4, R))

    def test_random_policy_grid(self):
        grid = [125.0, 250.0, 500.0, 750.0]
        estimates = line_service('random', 0.4, 1000).estimate_n_detailed(grid)
        for x, estimate in zip(grid, estimates):
            self.assertAgrees(estimate, n_random_1d(x, R))

    def test_full_grid_both_policies(self):
        for lam in DENSITIES:
            exact = {
                'random': [n_random_1d(x, R) for x in ORACLE_GRID],
                'furthest': [n_furthest_1d(x, lam, R) for x in ORACLE_GRID],
            }
            for policy, references in exact.items():
                estimates = line_service(policy, lam, 2000).estimate_n_detailed(ORACLE_GRID)
                for x, estimate, reference in zip(ORACLE_GRID, estimates, references):
                    with self.subTest(policy=policy, lam=lam, x=x):
                        self.assertAgrees(estimate, reference)

    def test_random_policy_ignores_density(self):
        by_density = [line_service('random', lam, 2000).estimate_n_detailed(ORACLE_GRID) for lam in DENSITIES]
        for j, x in enumerate(ORACLE_GRID):
            reference = n_random_1d(x, R)
            for first, second in zip(by_density, by_density[1:]):
                a, b = first[j], second[j]
                spread = 3 * math.hypot(a.stderr, b.stderr) + ORACLE_REL_FLOOR * reference
                self.assertLess(abs(a.mean - b.mean), spread, f"x={x}: {a.mean} vs {b.mean}")

    def test_just_past_origin(self):
        curve = line_service('random', 0.12, 50).estimate_n([1e-9])
        self.assertEqual(curve.ns, [1.0])
        self.assertEqual(curve.samples[0].stderr, 0.0)

    def test_curve_metadata(self):
        curve = line_service('furthest', 0.12, 100).estimate_n([100.0, 500.0])
        self.assertEqual(curve.method, HopMethod.MONTE_CARLO)
        self.assertEqual(curve.params['trials'], 100)
        self.assertEqual(curve.params['ci_level'], 0.99)
        self.assertIn('censored', curve.params)

    def test_dense_line_is_connected(self):
        curve = line_service('furthest', 0.4, 300).estimate_n([1000.0])
        self.assertEqual(curve.params['censored'], 0)

    def test_sparse_line_is_censored(self):
        service = line_service('random', 0.004, 400)
        with self.assertLogs('simulate', level='WARNING'):
            estimate = service.estimate_n_detailed([600.0])[0]
        self.assertGreater(estimate.trials_censored, 0)
        self.assertEqual(estimate.trials_run, 400)
        self.assertIsNotNone(estimate.diagnostic)

    def test_deterministic(self):
        first = line_service('random', 0.12, 100, seed=4).estimate_n([300.0, 600.0])
        second = line_service('random', 0.12, 100, seed=4).estimate_n([300.0, 600.0])
        self.assertEqual(first, second)

    def test_rejects_negative_grid(self):
        with self.assertRaises(DomainError):
            line_service('random', 0.12, 10).estimate_n([-1.0])

    def test_rejects_single_trial(self):
        with self.assertRaises(DomainError):
            line_service('random', 0.12, 1)

    def test_planar_random_policy(self):
        deployment = Deployment(0.001, Sector(math.pi / 3))
        service = MonteCarloService('random', radio(), deployment, trials=300, master_seed=6, workers=1)
        grid = [500.0, 1000.0, 1500.0]
        for x, n in zip(grid, service.estimate_n(grid).ns):
            linear = 3 * x / (2 * R) + 9 / 16
            self.assertLess(abs(n - linear) / linear, 0.1)


class BaselineComparisonTests(SimpleTestCase):

    def test_gamma_baseline_trails_exact_series(self):
        grid = [125.0 * k for k in range(1, 11)]
        service = line_service('random', 0.04, 2000)
        simulated = [estimate.mean for estimate in service.estimate_n_detailed(grid)]
        hops = HopCountService('random', radio(), service.deployment)
        exact_mad = np.mean([abs(hops.exact(x) - m) for x, m in zip(grid, simulated)])
        baseline_mad = np.mean([abs(hops.baseline(x) - m) for x, m in zip(grid, simulated)])
        self.assertGreater(baseline_mad, exact_mad, f"baseline {baseline_mad:.3f} vs exact {exact_mad:.3f}")


class HiddenNodeOracleTests(SimpleTestCase):

    def test_random_policy_converges_to_one(self):
        for x, estimate in line_service('random', 0.12, 500, length=2000.0).estimate_hidden([800.0, 1200.0]):
            self.assertTrue(0.9 <= estimate.mean <= 1.1, f"{estimate.mean} at {x}")

    def test_furthest_policy_converges_to_one(self):
        for x, estimate in line_service('furthest', 0.04, 500, length=2000.0).estimate_hidden([800.0, 1200.0]):
            self.assertTrue(0.85 <= estimate.mean <= 1.15, f"{estimate.mean} at {x}")

    def test_origin_matches_analytic(self):
        _, estimate = line_service('random', 0.12, 1000).estimate_hidden([0.0])[0]
        reference = n_random_1d(R / 2, R) - 1
        self.assertLess(abs(estimate.mean - reference), estimate.tolerance(reference, ORACLE_REL_FLOOR))


class HopMomentOracleTests(SimpleTestCase):

    def assertMoment(self, estimate: TrialEstimate, reference: float):
        self.assertLess(abs(estimate.mean - reference), estimate.tolerance(reference), f"{estimate.mean} vs {reference}")

    def test_random_line(self):
        mean, second, first_estimate, _ = line_service('random', 0.04, MOMENT_SAMPLES).estimate_hop_moments()
        self.assertMoment(first_estimate, R / 2)
        self.assertAlmostEqual(mean / (R / 2), 1.0, delta=0.02)
        self.assertAlmostEqual(second / (R ** 2 / 3), 1.0, delta=0.03)

    def test_furthest_line(self):
        _, _, first_estimate, second_estimate = line_service('furthest', 0.04, MOMENT_SAMPLES).estimate_hop_moments()
        m1, m2 = furthest_moments_1d(0.04, R)
        self.assertMoment(first_estimate, m1)
        self.assertMoment(second_estimate, m2)

    def test_random_plane(self):
        deployment = Deployment(0.0002, Sector(math.pi / 3))
        service = MonteCarloService('random', radio(), deployment, trials=MOMENT_SAMPLES, master_seed=2, workers=1)
        _, _, first_estimate, _ = service.estimate_hop_moments()
        self.assertMoment(first_estimate, 2 * R / 3)

    def test_furthest_plane(self):
        for theta in (math.pi / 3, 2 * math.pi / 3):
            deployment = Deployment(0.0002, Sector(theta))
            service = MonteCarloService('furthest', radio(), deployment, trials=MOMENT_SAMPLES, master_seed=3, workers=1)
            _, _, first_estimate, _ = service.estimate_hop_moments()
            self.assertMoment(first_estimate, e_xf2d(0.0002, theta, R, MomentMode.EXACT))

    def test_random_hop_law(self):
        distances, censored = line_service('random', 0.04, 20000).sample_hop_distances()
        self.assertEqual(censored + distances.size, 20000)
        self.assertGreater(kstest(distances / R, 'uniform').pvalue, 0.01)

    def test_furthest_hop_law(self):
        lam = 0.04
        distances, _ = line_service('furthest', lam, 20000).sample_hop_distances()

        def cdf(x):
            x = np.clip(x, 0.0, R)
            return np.expm1(lam * x) / math.expm1(lam * R)

        self.assertGreater(kstest(distances, cdf).pvalue, 0.01)
