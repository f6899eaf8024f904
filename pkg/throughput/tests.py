import math

from django.test import SimpleTestCase
from hypothesis import given, settings as hypothesis_settings, strategies as st

from analytic.exceptions import DomainError, SaturationError
from analytic.series import n_furthest_1d, n_random_1d
from analytic.services import HopCountService
from analytic.types import Deployment, Line, RadioParams
from throughput.airtime import AirtimeTiming
from throughput.services import (
    MacModel,
    ThroughputService,
    fixed_point_residual,
    hidden_node_expected,
    p_col,
    t_max_mac,
    t_max_perfect,
    t_of_r_mac,
    t_of_r_perfect,
)


C = 870000.0
R = 250.0
N_RANDOM_RI = math.exp(1.8) - 0.8 * math.exp(0.8)
N_RANDOM_RCS = math.e ** 2 - math.e


def radio(a: float = 0.9) -> RadioParams:
    return RadioParams(r_tx=R, r_i=450.0, r_cs=550.0, capacity_c=C, airtime_fraction_a=a)


def default_radio(a: float = 0.9) -> RadioParams:
    # r_cs = 2 r_tx
    return RadioParams(r_tx=R, r_i=450.0, r_cs=500.0, capacity_c=C, airtime_fraction_a=a)


def random_fn(x: float) -> float:
    return n_random_1d(x, R)


class PerfectMacTests(SimpleTestCase):

    def test_single_hop(self):
        self.assertEqual(t_max_perfect(C, 0.0), C)

    def test_random_policy_ceiling(self):
        self.assertAlmostEqual(t_max_perfect(C, N_RANDOM_RI) / 1e6, 0.16511, places=5)

    def test_rate_curve(self):
        self.assertEqual(t_of_r_perfect(50000.0, C, N_RANDOM_RI).throughput, 50000.0)
        capped = t_of_r_perfect(500000.0, C, N_RANDOM_RI)
        self.assertAlmostEqual(capped.throughput, t_max_perfect(C, N_RANDOM_RI))
        self.assertEqual(capped.p_col, 0.0)
        self.assertEqual(capped.model, MacModel.PERFECT)
        ceiling = t_max_perfect(C, N_RANDOM_RI)
        self.assertEqual(t_of_r_perfect(ceiling, C, N_RANDOM_RI).throughput, ceiling)

    def test_rate_above_capacity(self):
        with self.assertRaises(DomainError):
            t_of_r_perfect(2 * C, C, 1.0)
        with self.assertRaises(DomainError):
            t_of_r_mac(2 * C, default_radio(), random_fn)
        with self.assertRaises(DomainError):
            t_of_r_mac(-1.0, default_radio(), random_fn)


class CollisionTests(SimpleTestCase):

    def test_values(self):
        self.assertEqual(p_col(0.0, 0.9, 3.67), 0.0)
        self.assertAlmostEqual(p_col(0.15, 0.9, N_RANDOM_RCS - 1), 0.30041, places=4)

    def test_saturation(self):
        with self.assertRaises(SaturationError):
            p_col(0.5, 0.9, 2.0)

    @given(st.floats(min_value=0.0, max_value=0.25), st.floats(min_value=1e-4, max_value=0.02))
    @hypothesis_settings(max_examples=60, deadline=None)
    def test_strictly_increasing(self, x, dx):
        self.assertGreater(p_col(x + dx, 0.9, N_RANDOM_RCS - 1), p_col(x, 0.9, N_RANDOM_RCS - 1))


class MacThroughputTests(SimpleTestCase):

    def test_random_policy_below_carrier_sense_ceiling(self):
        result = t_max_mac(default_radio(), random_fn)
        ceiling = C / (1 + N_RANDOM_RCS)
        self.assertLess(result.throughput, ceiling)
        self.assertLess(result.throughput / 1e6, 0.1534)
        self.assertLess(fixed_point_residual(result), 1e-9)
        self.assertAlmostEqual(result.contending_hops, N_RANDOM_RCS - 1, places=12)

    def test_ordering(self):
        for hop_fn in (random_fn, lambda x: n_furthest_1d(x, 0.04, R)):
            params = default_radio()
            result = t_max_mac(params, hop_fn)
            cs_ceiling = C / (1 + hop_fn(params.r_cs))
            self.assertLessEqual(result.throughput, cs_ceiling)
            self.assertLessEqual(cs_ceiling, t_max_perfect(C, hop_fn(params.r_i)))

    def test_small_airtime_limit(self):
        result = t_max_mac(default_radio(a=1e-12), random_fn)
        ceiling = C / (1 + N_RANDOM_RCS)
        self.assertAlmostEqual(result.throughput / ceiling, 1.0, places=9)

    def test_furthest_beats_random(self):
        furthest = t_max_mac(default_radio(), lambda x: n_furthest_1d(x, 0.04, R))
        random = t_max_mac(default_radio(), random_fn)
        self.assertGreater(furthest.throughput, random.throughput)

    def test_identity_below_maximum(self):
        params = default_radio()
        t_max = t_max_mac(params, random_fn).throughput
        for fraction in (0.1, 0.5, 0.9, 0.999):
            r = fraction * t_max
            result = t_of_r_mac(r, params, random_fn, t_max=t_max)
            self.assertEqual(result.throughput, r)
            self.assertFalse(result.beyond_validity)

    def test_at_maximum(self):
        params = default_radio()
        t_max = t_max_mac(params, random_fn).throughput
        result = t_of_r_mac(t_max, params, random_fn, t_max=t_max)
        self.assertAlmostEqual(result.throughput / t_max, 1.0, places=9)
        self.assertFalse(result.beyond_validity)

    def test_small_rate(self):
        result = t_of_r_mac(10000.0, default_radio(), random_fn)
        self.assertEqual(result.throughput, 10000.0)
        self.assertLess(result.p_col, 0.02)

    def test_overdriven_rate_is_flagged(self):
        result = t_of_r_mac(500000.0, default_radio(), random_fn)
        self.assertTrue(result.beyond_validity)
        self.assertTrue(math.isnan(result.throughput))

    def test_density_monotonicity(self):
        lams = [0.02 + k * (0.4 - 0.02) / 9 for k in range(10)]
        perfect, mac = [], []
        for lam in lams:
            service = ThroughputService(HopCountService('furthest', radio(), Deployment(lam, Line(2000.0))))
            perfect.append(service.t_max_perfect())
            mac.append(service.t_max_mac().throughput)
        self.assertEqual(perfect, sorted(perfect))
        self.assertEqual(mac, sorted(mac))
        # two hops of nearly R always clear R_i = 450 m
        self.assertAlmostEqual(perfect[-1] / (C / 3), 1.0, places=3)


class HiddenNodeTests(SimpleTestCase):

    def test_transient_at_origin(self):
        self.assertAlmostEqual(hidden_node_expected(0.0, 125.0, random_fn), math.exp(0.5) - 1, places=12)

    def test_converges_to_one(self):
        for x in (1000.0, 1500.0, 2000.0):
            self.assertTrue(0.9 <= hidden_node_expected(x, 125.0, random_fn) <= 1.1)
        service = ThroughputService(HopCountService('furthest', radio(), Deployment(0.4, Line(2000.0))))
        self.assertTrue(0.9 <= service.hidden_nodes(1500.0) <= 1.1)

    def test_rejects_negative_distance(self):
        with self.assertRaises(DomainError):
            hidden_node_expected(-1.0, 125.0, random_fn)


class AirtimeTimingTests(SimpleTestCase):

    def test_default_exchange(self):
        timing = AirtimeTiming()
        self.assertAlmostEqual(timing.data_frame_us, 8416.0)
        self.assertAlmostEqual(timing.exchange_us, 9090.0)
        self.assertAlmostEqual(timing.airtime_fraction(), 8416.0 / 9090.0)
        self.assertAlmostEqual(timing.capacity_bps(), 8000.0 / 9090.0 * 1e6)

    def test_larger_payload_raises_fraction(self):
        self.assertGreater(AirtimeTiming(payload_bytes=1500).airtime_fraction(), AirtimeTiming().airtime_fraction())

    def test_rejects_bad_rate(self):
        with self.assertRaises(DomainError):
            AirtimeTiming(data_rate_bps=0.0)
