import functools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np
from django.conf import settings
from scipy.stats import norm

from analytic.exceptions import AllCensoredError, DeadEndError, DomainError
from analytic.services import HopCountService
from analytic.types import (
    Deployment,
    HopCurve,
    HopMethod,
    HopSample,
    Line,
    RadioParams,
    RoutingPolicy,
)
from simulate.rng import SeededRun
from simulate.routing import hops_to_pass, route_next_hop, walk_line, walk_plane
from simulate.sampling import sample_ppp_1d, sample_ppp_rect, sample_ppp_sector


logger = logging.getLogger('simulate')

T = TypeVar('T')


@dataclass(frozen=True)
class TrialEstimate:
    """Monte Carlo mean over uncensored trials with its normal-approximation error"""
    mean: float
    stderr: float
    ci_level: float
    trials_run: int
    trials_censored: int
    diagnostic: Optional[str] = None

    def __post_init__(self):
        if self.trials_censored > self.trials_run:
            raise DomainError(f"{self.trials_censored} censored trials out of {self.trials_run} run")
        if not self.stderr >= 0:
            raise DomainError(f"stderr must be nonnegative, got {self.stderr}")
        if not (0 < self.ci_level < 1):
            raise DomainError(f"ci_level must lie in (0, 1), got {self.ci_level}")

    @property
    def censoring_rate(self) -> float:
        return self.trials_censored / self.trials_run if self.trials_run else 0.0

    @property
    def ci_half_width(self) -> float:
        return float(norm.ppf(0.5 + 0.5 * self.ci_level)) * self.stderr

    def tolerance(self, reference: float, rel_floor: float = 0.0) -> float:
        return max(3.0 * self.stderr, rel_floor * abs(reference))

    def agrees_with(self, reference: float, rel_floor: float = 0.0) -> bool:
        return abs(self.mean - reference) <= self.tolerance(reference, rel_floor)

    @classmethod
    def from_samples(cls, samples: np.ndarray, trials_run: int, ci_level: float) -> 'TrialEstimate':
        """
        Build an estimate from the values of the uncensored trials

        Args:
            samples: One value per uncensored trial
            trials_run: Trials attempted, censored ones included
            ci_level: Confidence level reported with the estimate

        Returns:
            TrialEstimate with a censoring diagnostic when the rate is above
            settings.CENSORING_WARN_RATE
        """
        samples = np.asarray(samples, dtype=float)
        if samples.size < 2:
            raise AllCensoredError(
                f"Only {samples.size} of {trials_run} trials stayed connected; at least 2 are needed"
            )
        censored = trials_run - samples.size
        diagnostic = None
        rate = censored / trials_run
        if rate > settings.CENSORING_WARN_RATE:
            diagnostic = f"censoring rate {rate:.3f} above {settings.CENSORING_WARN_RATE:g}"
            logger.warning(f"{censored}/{trials_run} trials censored as disconnected ({diagnostic})")
        return cls(
            mean=float(samples.mean()),
            stderr=float(samples.std(ddof=1) / math.sqrt(samples.size)),
            ci_level=ci_level,
            trials_run=trials_run,
            trials_censored=censored,
            diagnostic=diagnostic,
        )


def run_trials(trial_fn: Callable[[SeededRun], T], trials: int, master_seed: int,
               workers: int = 1) -> List[T]:
    """
    Run trial_fn once per trial index and return the results in index order

    Every trial draws from its own (master_seed, index) stream, so the results
    do not depend on the number of workers. trial_fn must be picklable when
    workers > 1.
    """
    runs = [SeededRun(master_seed, index) for index in range(trials)]
    if workers <= 1:
        return [trial_fn(run) for run in runs]
    chunksize = max(1, trials // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(trial_fn, runs, chunksize=chunksize))


# Trial bodies are module-level so they pickle for the process pool

def _line_trial(run: SeededRun, policy: RoutingPolicy, lam: float, length: float,
                r_tx: float, x_grid: Tuple[float, ...]) -> Optional[np.ndarray]:
    rng = run.generator()
    x_max = max(x_grid)
    nodes = sample_ppp_1d(lam, max(length, x_max + r_tx), rng)
    try:
        reached = walk_line(nodes, policy, r_tx, rng, x_max)
    except DeadEndError:
        return None
    return hops_to_pass(reached, np.asarray(x_grid))


def _plane_trial(run: SeededRun, policy: RoutingPolicy, lam: float, theta: float, width: float,
                 height: float, r_tx: float, x_grid: Tuple[float, ...]) -> Optional[np.ndarray]:
    rng = run.generator()
    x_max = max(x_grid)
    span = max(width, x_max + 2 * r_tx)
    nodes = sample_ppp_rect(lam, span, height, rng)
    try:
        reached = walk_plane(nodes, policy, r_tx, theta, np.array([span, 0.0]), rng, x_max)
    except DeadEndError:
        return None
    return hops_to_pass(reached, np.asarray(x_grid))


def _first_hop_trial(run: SeededRun, policy: RoutingPolicy, lam: float, theta: Optional[float],
                     r_tx: float) -> Optional[float]:
    rng = run.generator()
    try:
        if theta is None:
            nodes = sample_ppp_1d(lam, r_tx, rng)
            return route_next_hop(0.0, nodes, policy, r_tx, rng)
        radii, angles = sample_ppp_sector(lam, theta, r_tx, rng)
        nodes = np.column_stack((radii * np.cos(angles), radii * np.sin(angles)))
        chosen = route_next_hop(np.zeros(2), nodes, policy, r_tx, rng, np.array([r_tx, 0.0]), theta)
    except DeadEndError:
        return None
    return float(np.hypot(chosen[0], chosen[1]))


class MonteCarloService:
    """Seeded Monte Carlo estimates of hop counts for one policy and deployment"""

    def __init__(self, policy: Union[RoutingPolicy, str], radio: RadioParams, deployment: Deployment,
                 trials: Optional[int] = None, master_seed: Optional[int] = None,
                 ci_level: Optional[float] = None, workers: Optional[int] = None):
        self.policy = RoutingPolicy(policy)
        self.radio = radio
        self.deployment = deployment
        self.trials = settings.MONTE_CARLO_TRIALS if trials is None else trials
        self.master_seed = settings.MONTE_CARLO_SEED if master_seed is None else master_seed
        self.ci_level = settings.MONTE_CARLO_CI_LEVEL if ci_level is None else ci_level
        self.workers = settings.MONTE_CARLO_WORKERS if workers is None else workers

        if self.trials < 2:
            raise DomainError(f"At least 2 trials are needed, got {self.trials}")

    def _walk_fn(self, x_grid: Sequence[float]) -> Callable[[SeededRun], Optional[np.ndarray]]:
        geometry = self.deployment.geometry
        grid = tuple(float(x) for x in x_grid)
        if isinstance(geometry, Line):
            return functools.partial(_line_trial, policy=self.policy, lam=self.deployment.lam,
                                     length=geometry.length, r_tx=self.radio.r_tx, x_grid=grid)
        return functools.partial(_plane_trial, policy=self.policy, lam=self.deployment.lam,
                                 theta=geometry.aop_theta, width=geometry.width, height=geometry.height,
                                 r_tx=self.radio.r_tx, x_grid=grid)

    def _hop_matrix(self, x_grid: Sequence[float]) -> np.ndarray:
        """Hops to pass each grid point, one row per connected trial"""
        if len(x_grid) == 0:
            raise DomainError("The distance grid is empty")
        if min(x_grid) < 0:
            raise DomainError("Grid distances must be nonnegative")
        results = run_trials(self._walk_fn(x_grid), self.trials, self.master_seed, self.workers)
        connected = [row for row in results if row is not None]
        if len(connected) < 2:
            raise AllCensoredError(f"{self.trials - len(connected)} of {self.trials} trials were disconnected")
        logger.info(
            f"{self.policy.value} walks: {len(connected)}/{self.trials} connected up to {max(x_grid)} m"
        )
        return np.vstack(connected)

    def estimate_n_detailed(self, x_grid: Sequence[float]) -> List[TrialEstimate]:
        matrix = self._hop_matrix(x_grid)
        return [TrialEstimate.from_samples(matrix[:, j], self.trials, self.ci_level) for j in range(len(x_grid))]

    def estimate_n(self, x_grid: Sequence[float]) -> HopCurve:
        """
        Monte Carlo N(x) over the grid

        Args:
            x_grid: Strictly increasing distances (m)

        Returns:
            HopCurve with method MonteCarlo; params carry trials, censored and ci_level
        """
        estimates = self.estimate_n_detailed(x_grid)
        params = HopCountService(self.policy, self.radio, self.deployment).params()
        params.update({
            'trials': self.trials,
            'censored': estimates[0].trials_censored,
            'ci_level': self.ci_level,
            'seed': self.master_seed,
        })
        samples = tuple(
            HopSample(x=float(x), n=estimate.mean, stderr=estimate.stderr)
            for x, estimate in zip(x_grid, estimates)
        )
        return HopCurve(samples=samples, method=HopMethod.MONTE_CARLO, params=params)

    def estimate_hidden(self, x_grid: Sequence[float],
                        mean_hop: Optional[float] = None) -> List[Tuple[float, TrialEstimate]]:
        """
        Monte Carlo N(x + E[d]) - N(x) over the grid

        Args:
            x_grid: Distances (m)
            mean_hop: E[d]; defaults to the analytic mean hop of the policy

        Returns:
            List of (x, TrialEstimate) pairs
        """
        if mean_hop is None:
            mean_hop = HopCountService(self.policy, self.radio, self.deployment).mean_hop()
        xs = [float(x) for x in x_grid]
        matrix = self._hop_matrix(xs + [x + mean_hop for x in xs])
        width = len(xs)
        differences = matrix[:, width:] - matrix[:, :width]
        return [
            (x, TrialEstimate.from_samples(differences[:, j], self.trials, self.ci_level))
            for j, x in enumerate(xs)
        ]

    def sample_hop_distances(self, trials: Optional[int] = None) -> Tuple[np.ndarray, int]:
        """
        Single-hop distances from a source, one per trial with a nonempty candidate set

        Returns:
            Tuple of (distances, censored trial count)
        """
        trials = self.trials if trials is None else trials
        trial_fn = functools.partial(
            _first_hop_trial, policy=self.policy, lam=self.deployment.lam,
            theta=self.deployment.theta, r_tx=self.radio.r_tx,
        )
        results = run_trials(trial_fn, trials, self.master_seed, self.workers)
        distances = np.array([value for value in results if value is not None], dtype=float)
        return distances, trials - distances.size

    def estimate_hop_moments(self, trials: Optional[int] = None
                             ) -> Tuple[float, float, TrialEstimate, TrialEstimate]:
        """Empirical first and second moment of the single-hop distance"""
        trials = self.trials if trials is None else trials
        distances, _ = self.sample_hop_distances(trials)
        first = TrialEstimate.from_samples(distances, trials, self.ci_level)
        second = TrialEstimate.from_samples(distances ** 2, trials, self.ci_level)
        return first.mean, second.mean, first, second
