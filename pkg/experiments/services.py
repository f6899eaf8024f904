import logging
import math
from dataclasses import dataclass
from datetime import datetime
from typing import Any, Callable, Iterator, List, Sequence, Tuple

import numpy as np
from django.conf import settings

from analytic.exceptions import CapacityError, ConfigError
from analytic.moments import chebyshev_term
from analytic.series import n_furthest_1d, n_random_1d, psi, series_branch_gap
from analytic.services import HopCountService
from analytic.types import Deployment, Line, RoutingPolicy
from experiments.config import RunConfig
from simulate.services import MonteCarloService
from throughput.services import ThroughputService, fixed_point_residual, hidden_node_expected


logger = logging.getLogger('experiments')

Row = Sequence[Any]

HIDDEN_NODE_DENSITIES = (0.04, 0.12, 0.4)
CHEBYSHEV_LAMBDAS = (0.0002, 0.0005, 0.001)
CHEBYSHEV_THETAS = (math.pi / 3, math.pi / 2, 2 * math.pi / 3, math.pi)


@dataclass
class Table:
    columns: Tuple[str, ...]
    rows: Iterator[Row]
    footer: Tuple[str, ...] = ()


def five_point_derivative(fn: Callable[[float], float], x: float, h: float) -> float:
    return (fn(x - 2 * h) - 8 * fn(x - h) + 8 * fn(x + h) - fn(x + 2 * h)) / (12 * h)


def kink_free_grid(r_tx: float, multiples: int = 10) -> List[float]:
    """Points in (R, multiples R] kept clear of the kinks at multiples of R"""
    return [r_tx * (k + j / 4 + 1 / 8) for k in range(1, multiples) for j in range(4)]


@dataclass(frozen=True)
class CheckResult:
    name: str
    measured: float
    threshold: float
    passed: bool
    message: str = ''


class ValidationReport:
    """Simple class to track invariant checks of one validation run"""
    def __init__(self):
        self.started_at = datetime.now()
        self.completed_at = None
        self.checks: List[CheckResult] = []

    @property
    def duration(self):
        end_time = self.completed_at or datetime.now()
        return end_time - self.started_at

    @property
    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    @property
    def passed(self) -> bool:
        return not self.failures

    def record(self, name: str, measured: float, threshold: float) -> CheckResult:
        check = CheckResult(name=name, measured=measured, threshold=threshold, passed=measured <= threshold)
        self.checks.append(check)
        level = logging.INFO if check.passed else logging.WARNING
        logger.log(level, f"{name}: {'PASS' if check.passed else 'FAIL'} measured={measured:.3e} threshold={threshold:.3e}")
        return check

    def add_error(self, name: str, error_message: str):
        self.checks.append(CheckResult(name=name, measured=math.nan, threshold=math.nan, passed=False,
                                       message=error_message))
        logger.error(f"{name}: {error_message}")

    def mark_completed(self):
        self.completed_at = datetime.now()


class ExperimentService:
    """Runs one configured experiment and tabulates its results"""

    def __init__(self, config: RunConfig):
        self.config = config
        self.hop_service = HopCountService(config.policy, config.radio, config.deployment)

    def monte_carlo(self) -> MonteCarloService:
        return MonteCarloService(
            self.config.policy,
            self.config.radio,
            self.config.deployment,
            trials=self.config.trials,
            master_seed=self.config.master_seed,
            ci_level=self.config.ci_level,
            workers=self.config.workers,
        )

    def _is_line(self) -> bool:
        return self.config.deployment.dim == 1

    def hop_curve(self, with_monte_carlo: bool = True) -> Table:
        """
        Analytic and simulated N(x) over the distance grid

        Returns:
            Table with columns x_m, analytic_exact, analytic_approx,
            gamma_baseline, mc_mean, mc_stderr, trials, censored; exact and
            baseline are empty in 2-D
        """
        grid = self.config.grid
        estimates = self.monte_carlo().estimate_n_detailed(grid) if with_monte_carlo else [None] * len(grid)
        service = self.hop_service

        def rows():
            for x, estimate in zip(grid, estimates):
                yield (
                    x,
                    service.exact(x) if self._is_line() else None,
                    service.approx(x),
                    service.baseline(x) if self._is_line() else None,
                    estimate.mean if estimate else None,
                    estimate.stderr if estimate else None,
                    estimate.trials_run if estimate else None,
                    estimate.trials_censored if estimate else None,
                )

        columns = ('x_m', 'analytic_exact', 'analytic_approx', 'gamma_baseline',
                   'mc_mean', 'mc_stderr', 'trials', 'censored')
        return Table(columns=columns, rows=rows())

    def hidden_nodes(self, with_monte_carlo: bool = True) -> Table:
        """Forwarding nodes in each window of length E[d], analytic and simulated"""
        grid = self.config.grid
        mean_hop = self.hop_service.mean_hop()
        hop_fn = self.hop_service.hop_fn()
        if with_monte_carlo:
            estimates = [estimate for _, estimate in self.monte_carlo().estimate_hidden(grid, mean_hop)]
        else:
            estimates = [None] * len(grid)

        def rows():
            for x, estimate in zip(grid, estimates):
                yield (
                    x,
                    hidden_node_expected(x, mean_hop, hop_fn),
                    estimate.mean if estimate else None,
                    estimate.stderr if estimate else None,
                    estimate.trials_run if estimate else None,
                    estimate.trials_censored if estimate else None,
                )

        columns = ('x_m', 'analytic', 'mc_mean', 'mc_stderr', 'trials', 'censored')
        return Table(columns=columns, rows=rows(), footer=(f'mean_hop_m={mean_hop!r}',))

    def hop_moments(self) -> Table:
        """Single-hop distance moments, analytic against simulated"""
        analytic = self.hop_service.moments()
        _, _, first, second = self.monte_carlo().estimate_hop_moments()
        rows = [
            (name, reference, estimate.mean, estimate.stderr, estimate.trials_run, estimate.trials_censored)
            for name, reference, estimate in zip(('mean_m', 'second_moment_m2'), analytic, (first, second))
        ]
        columns = ('quantity', 'analytic', 'mc_mean', 'mc_stderr', 'trials', 'censored')
        return Table(columns=columns, rows=iter(rows))

    def throughput(self) -> Table:
        """
        Throughput against offered rate for the perfect and 802.11 MAC models

        The 802.11 column is computed from the default hop function (exact in
        1-D) and from the linear approximation; the footer reports both maxima
        and the fixed-point residual.
        """
        capacity = self.config.radio.capacity_c
        rates = self.config.grid
        over = [r for r in rates if not (0 <= r <= capacity)]
        if over:
            raise ConfigError(f"Offered rates must lie in [0, {capacity!r}] bit/s, got {over[0]!r}")

        exact = ThroughputService(self.hop_service)
        approx = ThroughputService(self.hop_service, kind=HopCountService.APPROX)
        t_max = exact.t_max_mac()
        t_max_approx = approx.t_max_mac()

        def rows():
            for r in rates:
                mac = exact.at_rate(r)
                mac_approx = approx.at_rate(r)
                yield (
                    r,
                    mac.airtime_x,
                    mac.p_col,
                    exact.at_rate_perfect(r).throughput,
                    mac.throughput,
                    mac_approx.throughput,
                    mac.beyond_validity,
                )

        footer = (
            f't_max_perfect_bps={exact.t_max_perfect()!r} t_max_mac_bps={t_max.throughput!r} '
            f'fixed_point_residual={fixed_point_residual(t_max)!r} '
            f't_max_mac_approx_bps={t_max_approx.throughput!r}',
        )
        columns = ('r_bps', 'x_airtime', 'p_col', 't_perfect_bps', 't_mac_bps', 't_mac_approx_bps',
                   'beyond_validity_flag')
        return Table(columns=columns, rows=rows(), footer=footer)

    def density_sweep(self) -> Table:
        """Maximum throughput of both MAC models across node densities"""
        radio = self.config.radio
        geometry = self.config.deployment.geometry

        def rows():
            for lam in self.config.grid:
                hop_service = HopCountService(self.config.policy, radio, Deployment(lam, geometry))
                service = ThroughputService(hop_service)
                yield (
                    lam,
                    service.hop_fn(radio.r_i),
                    service.hop_fn(radio.r_cs),
                    service.t_max_perfect(),
                    service.t_max_mac().throughput,
                )

        columns = ('lambda', 'n_ri', 'n_rcs', 't_max_perfect_bps', 't_max_mac_bps')
        return Table(columns=columns, rows=rows())

    # Validation suite

    def validate(self) -> ValidationReport:
        """
        Run the invariant suite with thresholds multiplied by config.tolerance_scale

        Returns:
            ValidationReport with one CheckResult per invariant
        """
        report = ValidationReport()
        checks = (
            ('ode_residual_random', self._ode_residual_random, 1e-6),
            ('ode_residual_furthest', self._ode_residual_furthest, 1e-6),
            ('branch_gap_random', lambda: self._branch_gap(RoutingPolicy.RANDOM), 1e-8),
            ('branch_gap_furthest', lambda: self._branch_gap(RoutingPolicy.FURTHEST), 1e-8),
            ('linear_fidelity_random', self._linear_fidelity, 0.06),
            ('hidden_node_convergence', self._hidden_node_convergence, 0.1),
            ('chebyshev_bound', self._chebyshev_ratio, 1.0),
            ('fixed_point_residual', self._fixed_point_residual, 1e-9),
            ('throughput_ordering', self._throughput_ordering, 0.0),
            ('hop_curve_oracle', self._hop_curve_oracle, 1.0),
            ('hop_moment_oracle', self._hop_moment_oracle, 1.0),
            ('baseline_inferiority', self._baseline_inferiority, 1.0),
        )
        logger.info(f"Running {len(checks)} validation checks")
        for name, measure, threshold in checks:
            try:
                report.record(name, measure(), threshold * self.config.tolerance_scale)
            except CapacityError as e:
                report.add_error(name, str(e))
        report.mark_completed()
        return report

    def _line_lambda(self) -> float:
        return self.config.deployment.lam if self._is_line() else settings.DEPLOYMENT_LAMBDA

    def _ode_residual_random(self) -> float:
        r_tx = self.config.radio.r_tx
        fn = lambda x: n_random_1d(x, r_tx)
        h = 1e-3 * r_tx
        return max(abs(five_point_derivative(fn, x, h) - (fn(x) - fn(x - r_tx)) / r_tx)
                   for x in kink_free_grid(r_tx))

    def _ode_residual_furthest(self) -> float:
        r_tx = self.config.radio.r_tx
        lam = self._line_lambda()
        alpha = psi(1.0, lam, r_tx)
        fn = lambda x: n_furthest_1d(x, lam, r_tx)
        h = 1e-3 * r_tx
        return max(abs(five_point_derivative(fn, x, h) - (alpha * (fn(x) - fn(x - r_tx)) - lam))
                   for x in kink_free_grid(r_tx))

    def _branch_gap(self, policy: RoutingPolicy) -> float:
        return max(series_branch_gap(n, policy, self.config.radio.r_tx, self._line_lambda()) for n in range(1, 11))

    def _linear_fidelity(self) -> float:
        r_tx = self.config.radio.r_tx
        return max(abs(n_random_1d(x, r_tx) - (2 * x / r_tx + 2 / 3))
                   for x in np.linspace(5 * r_tx, 20 * r_tx, 61))

    def _hidden_node_convergence(self) -> float:
        """Worst |N(x + E[d]) - N(x) - 1| over 750 m < x <= 2000 m"""
        worst = 0.0
        line = Line(settings.DEPLOYMENT_LINE_LENGTH)
        grid = np.arange(775.0, 2000.0 + 1.0, 25.0)
        for policy in RoutingPolicy:
            for lam in HIDDEN_NODE_DENSITIES:
                service = HopCountService(policy, self.config.radio, Deployment(lam, line))
                mean_hop = service.mean_hop()
                for x in grid:
                    worst = max(worst, abs(hidden_node_expected(float(x), mean_hop, service.exact) - 1.0))
        return worst

    def _chebyshev_ratio(self) -> float:
        pairs = [(lam, theta) for lam in CHEBYSHEV_LAMBDAS for theta in CHEBYSHEV_THETAS]
        if self._is_line():
            pairs.append((settings.DEPLOYMENT_LAMBDA_2D, math.radians(settings.DEPLOYMENT_AOP_DEG)))
        else:
            pairs.append((self.config.deployment.lam, self.config.deployment.theta))
        ratios = []
        for lam, theta in pairs:
            term, bound = chebyshev_term(lam, theta, self.config.radio.r_tx)
            ratios.append(term / bound)
        return max(ratios)

    def _fixed_point_residual(self) -> float:
        return fixed_point_residual(ThroughputService(self.hop_service).t_max_mac())

    def _throughput_ordering(self) -> float:
        """Positive when t_max_mac <= C/(1+N(R_cs)) <= t_max_perfect is violated"""
        service = ThroughputService(self.hop_service)
        cs_ceiling = service.perfect_ceiling_cs()
        capacity = self.config.radio.capacity_c
        return max(service.t_max_mac().throughput - cs_ceiling, cs_ceiling - service.t_max_perfect()) / capacity

    def _hop_curve_oracle(self) -> float:
        """Largest Monte Carlo deviation from the analytic curve, in units of its tolerance"""
        grid = self.config.grid
        estimates = self.monte_carlo().estimate_n_detailed(grid)
        fn = self.hop_service.hop_fn()
        # the planar curves are linear approximations, held to a 10% band
        floor = settings.ORACLE_REL_FLOOR if self._is_line() else 0.1
        worst = 0.0
        for x, estimate in zip(grid, estimates):
            if not self._is_line() and x < 2 * self.config.radio.r_tx:
                continue
            reference = fn(x)
            worst = max(worst, abs(estimate.mean - reference) / estimate.tolerance(reference, floor))
        return worst

    def _hop_moment_oracle(self) -> float:
        reference = self.hop_service.mean_hop()
        _, _, first, _ = self.monte_carlo().estimate_hop_moments(settings.MOMENT_TRIALS)
        return abs(first.mean - reference) / first.tolerance(reference)

    def _baseline_inferiority(self) -> float:
        """Exact-series over Gamma-baseline mean absolute deviation from Monte Carlo, random policy"""
        r_tx = self.config.radio.r_tx
        deployment = Deployment(settings.DEPLOYMENT_LAMBDA, Line(settings.HOPCURVE_LINE_LENGTH))
        grid = [r_tx / 2 * k for k in range(1, 11)]
        simulated = MonteCarloService(
            RoutingPolicy.RANDOM, self.config.radio, deployment,
            trials=self.config.trials, master_seed=self.config.master_seed,
            ci_level=self.config.ci_level, workers=self.config.workers,
        ).estimate_n_detailed(grid)
        service = HopCountService(RoutingPolicy.RANDOM, self.config.radio, deployment)
        exact = np.mean([abs(service.exact(x) - estimate.mean) for x, estimate in zip(grid, simulated)])
        baseline = np.mean([abs(service.baseline(x) - estimate.mean) for x, estimate in zip(grid, simulated)])
        logger.info(f"Mean absolute deviation from Monte Carlo: exact {exact:.3f}, Gamma baseline {baseline:.3f}")
        return float(exact / baseline)
