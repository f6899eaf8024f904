import math

import numpy as np
from django.test import SimpleTestCase, override_settings
from hypothesis import given, settings as hypothesis_settings, strategies as st
from scipy.special import dawsn, gammainc

from analytic.baseline import furthest_dbar_implicit, gamma_baseline_hops, _furthest_dbar_residual
from analytic.exceptions import ConvergenceError, DomainError, QuadratureError
from analytic.moments import (
    chebyshev_term,
    e_x2f2d,
    e_xf2d,
    furthest_moments_1d,
    linear_approx,
    n_furthest_2d_approx,
    n_random_2d_approx,
    random_moments_1d,
    random_moments_2d,
)
from analytic.quadrature import adaptive_simpson
from analytic.series import c_n, n_furthest_1d, n_random_1d, psi, series_branch_gap
from analytic.services import HopCountService
from analytic.types import (
    Deployment,
    GammaBaselineParams,
    HopCurve,
    HopMethod,
    HopSample,
    Line,
    MomentMode,
    RadioParams,
    RoutingPolicy,
    Sector,
)


R = 250.0
DENSITIES = (0.04, 0.12, 0.4)


def radio(**overrides) -> RadioParams:
    values = dict(r_tx=R, r_i=450.0, r_cs=550.0, capacity_c=870000.0, airtime_fraction_a=0.9)
    values.update(overrides)
    return RadioParams(**values)


def five_point_derivative(fn, x: float, h: float) -> float:
    return (fn(x - 2 * h) - 8 * fn(x - h) + 8 * fn(x + h) - fn(x + 2 * h)) / (12 * h)


def ode_grid(r_tx: float):
    """Points inside (R, 10R] kept clear of the kinks at multiples of R"""
    return [r_tx * (k + j / 4 + 1 / 8) for k in range(1, 10) for j in range(4)]


class DomainTypeTests(SimpleTestCase):

    def test_radio_ordering_is_enforced(self):
        with self.assertRaises(DomainError):
            radio(r_i=200.0)
        with self.assertRaises(DomainError):
            radio(r_tx=0.0)
        with self.assertRaises(DomainError):
            radio(airtime_fraction_a=1.5)

    def test_radio_soft_check_only_warns(self):
        with self.assertLogs('analytic', level='WARNING') as logs:
            params = radio(r_cs=500.0)
        self.assertEqual(params.r_cs, 500.0)
        self.assertIn('usual ordering', logs.output[0])

    def test_deployment_validation(self):
        with self.assertRaises(DomainError):
            Deployment(lam=0.0, geometry=Line(1250.0))
        with self.assertRaises(DomainError):
            Sector(aop_theta=4.0)
        self.assertEqual(Deployment(0.04, Line(1250.0)).dim, 1)
        self.assertEqual(Deployment(0.0002, Sector(math.pi / 3)).dim, 2)

    def test_hop_curve_invariants(self):
        with self.assertRaises(DomainError):
            HopCurve(samples=(HopSample(10.0, 2.0), HopSample(5.0, 3.0)), method=HopMethod.LINEAR_APPROX)
        with self.assertRaises(DomainError):
            HopCurve(samples=(HopSample(5.0, 3.0), HopSample(10.0, 2.0)), method=HopMethod.LINEAR_APPROX)
        with self.assertRaises(DomainError):
            HopCurve(samples=(HopSample(5.0, 3.0, stderr=0.1),), method=HopMethod.LINEAR_APPROX)
        with self.assertRaises(DomainError):
            HopCurve(samples=(HopSample(5.0, 3.0),), method=HopMethod.MONTE_CARLO)

    def test_gamma_params_derive_beta(self):
        params = GammaBaselineParams.build(distance_d=250.0, lam=0.04, d_bar=125.0, r_tx=R)
        self.assertAlmostEqual(params.beta, 1.0 + 125.0 * 0.04)
        with self.assertRaises(DomainError):
            GammaBaselineParams.build(distance_d=250.0, lam=0.04, d_bar=300.0, r_tx=R)


class RandomSeriesTests(SimpleTestCase):

    def test_origin_convention(self):
        self.assertEqual(n_random_1d(-5.0, R), 0.0)
        self.assertEqual(n_random_1d(0.0, R), 1.0)

    def test_closed_values(self):
        self.assertAlmostEqual(n_random_1d(250.0, R), math.e, places=12)
        self.assertAlmostEqual(n_random_1d(500.0, R), math.e ** 2 - math.e, places=12)
        self.assertAlmostEqual(n_random_1d(450.0, R), math.exp(1.8) - 0.8 * math.exp(0.8), places=12)
        self.assertAlmostEqual(n_random_1d(125.0, R), math.exp(0.5), places=12)

    def test_depends_on_ratio_only(self):
        self.assertAlmostEqual(n_random_1d(700.0, R), n_random_1d(1400.0, 2 * R), places=12)

    def test_rejects_nonpositive_range(self):
        with self.assertRaises(DomainError):
            n_random_1d(100.0, 0.0)
        with self.assertRaises(DomainError):
            n_random_1d(float('nan'), R)

    def test_delay_equation_residual(self):
        h = 1e-3 * R
        fn = lambda x: n_random_1d(x, R)
        for x in ode_grid(R):
            residual = five_point_derivative(fn, x, h) - (fn(x) - fn(x - R)) / R
            self.assertLess(abs(residual), 1e-6, msg=f"x={x}")

    def test_continuity_at_multiples_of_range(self):
        eps = 1e-9 * R
        for n in range(1, 11):
            gap = abs(n_random_1d(n * R - eps, R) - n_random_1d(n * R + eps, R))
            self.assertLess(gap, 1e-8, msg=f"n={n}")
            self.assertLess(series_branch_gap(n, RoutingPolicy.RANDOM, R), 1e-8)

    def test_linear_approximation_fidelity(self):
        worst = [abs(n_random_1d(x, R) - (2 * x / R + 2 / 3)) for x in np.linspace(5 * R, 20 * R, 61)]
        self.assertLess(max(worst), 0.06)
        self.assertLess(worst[-1], 0.05)

    def test_horizon_switches_to_linear_form(self):
        x = 21 * R
        with self.assertLogs('analytic', level='WARNING') as logs:
            value = n_random_1d(x, R)
        self.assertAlmostEqual(value, 2 * x / R + 2 / 3, places=12)
        self.assertIn('horizon', logs.output[0])

    @given(st.floats(min_value=0.0, max_value=10 * R), st.floats(min_value=0.0, max_value=R))
    @hypothesis_settings(max_examples=40, deadline=None)
    def test_nondecreasing(self, x, step):
        self.assertGreaterEqual(n_random_1d(x + step, R), n_random_1d(x, R) - 1e-12)


class FurthestSeriesTests(SimpleTestCase):

    def test_psi_values(self):
        self.assertEqual(psi(0.0, 0.04, R), 0.0)
        self.assertAlmostEqual(psi(100.0, 0.04, R), 4.000182, places=6)
        self.assertAlmostEqual(psi(-250.0, 0.04, R), -10.000454, places=6)

    def test_first_constant(self):
        self.assertAlmostEqual(c_n(1, 0.04, R), math.exp(-10.0), places=15)
        with self.assertRaises(DomainError):
            c_n(0, 0.04, R)

    def test_constants_match_continuity_solution(self):
        # constant term of the unique continuous solution, expanded in powers of psi(R)
        for lam in DENSITIES:
            a = psi(R, lam, R)
            q = -math.expm1(-lam * R)
            for n in (2, 3):
                expected = sum(
                    math.exp(-k * a) * (
                        (k * a) ** k / math.factorial(k)
                        - q * sum((k * a) ** j / math.factorial(j) for j in range(k + 1))
                    )
                    for k in range(n)
                )
                self.assertAlmostEqual(c_n(n, lam, R), expected, places=12, msg=f"lam={lam} n={n}")

    def test_constants_far_past_recursion_depth(self):
        lam, n = 0.001, 1100
        with self.assertNoLogs('analytic', level='WARNING'):
            value = c_n(n, lam, R)
        self.assertTrue(math.isfinite(value))
        self.assertLess(series_branch_gap(n - 1, RoutingPolicy.FURTHEST, R, lam), 1e-8)

    def test_cached_prefix_survives_precision_rebuild(self):
        lam = 0.0015
        small = [c_n(n, lam, R) for n in range(1, 8)]
        c_n(60, lam, R)
        for n, before in enumerate(small, start=1):
            self.assertAlmostEqual(c_n(n, lam, R), before, places=14)

    def test_origin_and_first_branch(self):
        self.assertEqual(n_furthest_1d(0.0, 0.04, R), 1.0)
        self.assertEqual(n_furthest_1d(-1.0, 0.04, R), 0.0)
        expected = math.exp(-10.0) * math.exp(psi(250.0, 0.04, R)) + 1 - math.exp(-10.0)
        self.assertAlmostEqual(n_furthest_1d(250.0, 0.04, R), expected, places=10)
        self.assertAlmostEqual(n_furthest_1d(250.0, 0.04, R), 2.000409, places=5)

    def test_delay_equation_residual(self):
        h = 1e-3 * R
        for lam in DENSITIES:
            alpha = psi(1.0, lam, R)
            fn = lambda x: n_furthest_1d(x, lam, R)
            for x in ode_grid(R):
                residual = five_point_derivative(fn, x, h) - (alpha * (fn(x) - fn(x - R)) - lam)
                self.assertLess(abs(residual), 1e-6, msg=f"lam={lam} x={x}")

    def test_branch_continuity(self):
        for lam in DENSITIES:
            for n in range(1, 11):
                self.assertLess(series_branch_gap(n, RoutingPolicy.FURTHEST, R, lam), 1e-8, msg=f"lam={lam} n={n}")

    def test_branch_gap_needs_density(self):
        with self.assertRaises(DomainError):
            series_branch_gap(2, RoutingPolicy.FURTHEST, R)

    def test_fewer_hops_than_random(self):
        for x in (500.0, 1000.0):
            self.assertLess(n_furthest_1d(x, 0.04, R), n_random_1d(x, R))

    def test_hidden_area_holds_one_hop(self):
        for lam in DENSITIES:
            mean, _ = furthest_moments_1d(lam, R)
            for x in np.arange(3 * R + 25.0, 10 * R, 25.0):
                diff = n_furthest_1d(x + mean, lam, R) - n_furthest_1d(x, lam, R)
                self.assertTrue(0.9 <= diff <= 1.1, msg=f"lam={lam} x={x} diff={diff}")

    def test_horizon_switches_to_linear_form(self):
        x = 21 * R
        with self.assertLogs('analytic', level='WARNING'):
            value = n_furthest_1d(x, 0.12, R)
        self.assertAlmostEqual(value, linear_approx(x, *furthest_moments_1d(0.12, R)), places=12)

    @given(st.sampled_from(DENSITIES), st.floats(min_value=0.0, max_value=6 * R), st.floats(min_value=0.0, max_value=R))
    @hypothesis_settings(max_examples=30, deadline=None)
    def test_nondecreasing(self, lam, x, step):
        self.assertGreaterEqual(n_furthest_1d(x + step, lam, R), n_furthest_1d(x, lam, R) - 1e-12)


class MomentTests(SimpleTestCase):

    def test_linear_approx_reproduces_random_line(self):
        self.assertAlmostEqual(linear_approx(0.0, 125.0, R ** 2 / 3), 2 / 3, places=12)
        self.assertAlmostEqual(linear_approx(250.0, 125.0, R ** 2 / 3), 2 + 2 / 3, places=12)

    def test_linear_approx_rejects_bad_moments(self):
        with self.assertRaises(DomainError):
            linear_approx(10.0, 0.0, 1.0)
        with self.assertRaises(DomainError):
            linear_approx(10.0, 10.0, 50.0)

    def test_uniform_moments(self):
        self.assertEqual(random_moments_1d(R), (125.0, R ** 2 / 3))
        self.assertEqual(random_moments_2d(R), (2 * R / 3, R ** 2 / 2))

    def test_furthest_moments(self):
        self.assertAlmostEqual(furthest_moments_1d(0.04, R)[0], 225.0114, places=3)
        self.assertAlmostEqual(furthest_moments_1d(0.4, R)[0], 247.5, places=6)
        self.assertAlmostEqual(furthest_moments_1d(1e-9, R)[0], 125.0, places=4)
        mean, second = furthest_moments_1d(0.12, R)
        self.assertGreaterEqual(second, mean ** 2)

    @given(st.floats(min_value=1e-4, max_value=1.0), st.floats(min_value=1.0, max_value=2.0))
    @hypothesis_settings(max_examples=50, deadline=None)
    def test_furthest_mean_bounds_and_monotonicity(self, lam, factor):
        mean = furthest_moments_1d(lam, R)[0]
        self.assertTrue(R / 2 < mean <= R)
        self.assertGreaterEqual(furthest_moments_1d(lam * factor, R)[0], mean - 1e-9)

    def test_random_2d_line(self):
        self.assertAlmostEqual(n_random_2d_approx(0.0, R), 9 / 16)
        self.assertAlmostEqual(n_random_2d_approx(250.0, R), 2.0625)
        self.assertAlmostEqual(n_random_2d_approx(500.0, R), 3.5625)
        with self.assertRaises(DomainError):
            n_random_2d_approx(-1.0, R)

    def test_exact_furthest_2d_mean_matches_dawson_form(self):
        for lam, theta in ((0.0002, math.pi / 3), (0.00015, 2 * math.pi / 3), (0.002, math.pi / 2)):
            c = 0.5 * theta * lam * R ** 2
            expected = (R - R * dawsn(math.sqrt(c)) / math.sqrt(c)) / -math.expm1(-c)
            self.assertAlmostEqual(e_xf2d(lam, theta, R, MomentMode.EXACT) / expected, 1.0, places=9)

    def test_chebyshev_bound(self):
        for lam in (0.00005, 0.0001, 0.0002, 0.001, 0.01):
            for theta in (math.pi / 6, math.pi / 3, 2 * math.pi / 3, math.pi):
                term, bound = chebyshev_term(lam, theta, R)
                self.assertLessEqual(term, bound)
                self.assertGreaterEqual(e_xf2d(lam, theta, R, 'exact'), e_xf2d(lam, theta, R, 'approx'))

    def test_approximation_gap_closes_with_density(self):
        for theta in (math.pi / 3, 2 * math.pi / 3):
            lam = 2 * 60 / (theta * R ** 2)
            exact = e_xf2d(lam, theta, R)
            approx = e_xf2d(lam, theta, R, 'approx')
            self.assertLess((exact - approx) / exact, 0.01)

    def test_dense_limit_reaches_range(self):
        self.assertAlmostEqual(e_xf2d(1.0, math.pi / 3, R) / R, 1.0, places=3)
        self.assertAlmostEqual(e_xf2d(1.0, math.pi / 3, R, 'approx') / R, 1.0, places=3)

    def test_second_moment_consistency(self):
        for theta in (math.pi / 3, 2 * math.pi / 3):
            lam = 2 * 30 / (theta * R ** 2)
            second = e_x2f2d(lam, theta, R)
            self.assertLess(abs(second - R * e_xf2d(lam, theta, R)) / second, 0.02)

    def test_furthest_2d_line(self):
        mean = e_xf2d(0.0002, math.pi / 3, R)
        self.assertAlmostEqual(n_furthest_2d_approx(0.0, 0.0002, math.pi / 3, R), (R / 2) / mean)
        self.assertAlmostEqual(n_furthest_2d_approx(500.0, 0.0002, math.pi / 3, R), (500.0 + R / 2) / mean)

    def test_unknown_mode(self):
        with self.assertRaises(DomainError):
            e_xf2d(0.0002, 1.0, R, 'rough')


class QuadratureTests(SimpleTestCase):

    def test_polynomial_and_exponential(self):
        self.assertAlmostEqual(adaptive_simpson(lambda x: x ** 3, 0.0, 2.0), 4.0, places=12)
        self.assertAlmostEqual(adaptive_simpson(math.exp, 0.0, 1.0), math.e - 1, places=12)
        self.assertAlmostEqual(adaptive_simpson(math.exp, 1.0, 0.0), 1 - math.e, places=12)

    def test_depth_cap_is_reported(self):
        with self.assertRaises(QuadratureError) as ctx:
            adaptive_simpson(lambda x: math.sqrt(x), 0.0, 1.0, rtol=1e-15, max_depth=3)
        self.assertGreater(ctx.exception.achieved, 1e-15)


class BaselineTests(SimpleTestCase):

    def test_matches_direct_distribution(self):
        lam, d_bar, distance = 0.04, 125.0, 250.0
        beta = 1 + d_bar * lam
        mass = [gammainc(n * beta, lam * distance) - gammainc((n + 1) * beta, lam * distance) for n in range(1, 200)]
        expected = sum(n * p for n, p in enumerate(mass, start=1))
        self.assertAlmostEqual(gamma_baseline_hops(distance, lam, d_bar), expected, places=10)

    def test_returns_intermediate_node_count(self):
        self.assertAlmostEqual(gamma_baseline_hops(250.0, 0.04, 125.0), 1.2505, delta=1e-4)
        self.assertAlmostEqual(gamma_baseline_hops(1e-6, 0.04, 125.0), 0.0, places=9)

    def test_grows_with_distance(self):
        values = [gamma_baseline_hops(d, 0.12, 125.0) for d in (250.0, 500.0, 1000.0)]
        self.assertEqual(values, sorted(values))

    @override_settings(GAMMA_TAIL_MASS=0.0)
    def test_reports_non_convergence(self):
        with self.assertRaises(ConvergenceError) as ctx:
            gamma_baseline_hops(250.0, 0.04, 125.0)
        self.assertEqual(ctx.exception.terms, 20)

    def test_rejects_hop_longer_than_range(self):
        with self.assertRaises(DomainError):
            gamma_baseline_hops(250.0, 0.04, 300.0, r_tx=R)

    def test_implicit_dbar_residual(self):
        for lam in DENSITIES:
            d_bar = furthest_dbar_implicit(lam)
            self.assertGreater(d_bar, 0.0)
            self.assertLess(abs(_furthest_dbar_residual(d_bar, lam)), 1e-9)


class HopCountServiceTests(SimpleTestCase):

    def setUp(self):
        self.radio = radio()
        self.line = Deployment(0.04, Line(1250.0))
        self.sector = Deployment(0.0002, Sector(math.pi / 3))

    def test_exact_curve_provenance(self):
        service = HopCountService('random', self.radio, self.line)
        curve = service.curve([125.0, 250.0, 500.0])
        self.assertEqual(curve.method, HopMethod.EXACT_RANDOM_1D)
        self.assertAlmostEqual(curve.ns[1], math.e, places=12)
        self.assertEqual(curve.params['lambda'], 0.04)

    def test_furthest_kinds(self):
        service = HopCountService(RoutingPolicy.FURTHEST, self.radio, self.line)
        self.assertEqual(service.curve([250.0], 'approx').method, HopMethod.LINEAR_APPROX)
        self.assertEqual(service.curve([250.0], 'baseline').method, HopMethod.GAMMA_BASELINE)
        self.assertAlmostEqual(service.mean_hop(), 225.0114, places=3)

    def test_two_dimensional_has_approximation_only(self):
        service = HopCountService('random', self.radio, self.sector)
        self.assertEqual(service.default_kind(), 'approx')
        self.assertEqual(service.curve([0.0, 250.0]).method, HopMethod.APPROX_2D)
        with self.assertRaises(DomainError):
            service.exact(250.0)
        with self.assertRaises(DomainError):
            service.baseline(250.0)

    def test_baseline_counts_the_source_transmission(self):
        service = HopCountService('random', self.radio, self.line)
        intermediate = gamma_baseline_hops(250.0, 0.04, R / 2, R)
        self.assertAlmostEqual(service.baseline(250.0), 1.0 + intermediate, places=12)
        self.assertAlmostEqual(service.baseline(250.0), 2.2505, delta=1e-4)
        self.assertEqual(service.baseline(0.0), 1.0)

    def test_unknown_kind(self):
        service = HopCountService('random', self.radio, self.line)
        with self.assertRaises(DomainError):
            service.hop_fn('guess')
