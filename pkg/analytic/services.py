import logging
from typing import Callable, Dict, Iterable, Optional, Tuple, Union

from analytic.baseline import furthest_dbar_implicit, gamma_baseline_hops
from analytic.exceptions import DomainError
from analytic.moments import (
    e_x2f2d,
    e_xf2d,
    furthest_moments_1d,
    linear_approx,
    n_furthest_2d_approx,
    n_random_2d_approx,
    random_moments_1d,
    random_moments_2d,
)
from analytic.series import n_furthest_1d, n_random_1d
from analytic.types import (
    Deployment,
    HopCurve,
    HopMethod,
    HopSample,
    MomentMode,
    RadioParams,
    RoutingPolicy,
)


logger = logging.getLogger('analytic')


class HopCountService:
    """Binds a routing policy and deployment to its hop-count functions"""

    EXACT = 'exact'
    APPROX = 'approx'
    BASELINE = 'baseline'
    KINDS = (EXACT, APPROX, BASELINE)

    def __init__(self, policy: Union[RoutingPolicy, str], radio: RadioParams, deployment: Deployment,
                 moment_mode: Union[MomentMode, str] = MomentMode.EXACT):
        self.policy = RoutingPolicy(policy)
        self.radio = radio
        self.deployment = deployment
        self.moment_mode = MomentMode(moment_mode)

    @property
    def dim(self) -> int:
        return self.deployment.dim

    @property
    def r_tx(self) -> float:
        return self.radio.r_tx

    @property
    def lam(self) -> float:
        return self.deployment.lam

    def params(self) -> Dict[str, float]:
        params = {'policy': self.policy.value, 'dim': self.dim, 'r_tx': self.r_tx}
        params.update(self.deployment.describe())
        return params

    def moments(self) -> Tuple[float, float]:
        """First and second moment of a single hop length under this policy"""
        if self.dim == 1:
            if self.policy is RoutingPolicy.RANDOM:
                return random_moments_1d(self.r_tx)
            return furthest_moments_1d(self.lam, self.r_tx)
        if self.policy is RoutingPolicy.RANDOM:
            return random_moments_2d(self.r_tx)
        theta = self.deployment.theta
        return e_xf2d(self.lam, theta, self.r_tx, self.moment_mode), e_x2f2d(self.lam, theta, self.r_tx)

    def mean_hop(self) -> float:
        return self.moments()[0]

    def exact(self, x: float) -> float:
        if self.dim != 1:
            raise DomainError("Exact hop counts exist for 1-D deployments only; use the approximation")
        if self.policy is RoutingPolicy.RANDOM:
            return n_random_1d(x, self.r_tx)
        return n_furthest_1d(x, self.lam, self.r_tx)

    def approx(self, x: float) -> float:
        if self.dim == 1:
            return linear_approx(x, *self.moments())
        if self.policy is RoutingPolicy.RANDOM:
            return n_random_2d_approx(x, self.r_tx)
        return n_furthest_2d_approx(x, self.lam, self.deployment.theta, self.r_tx, self.moment_mode)

    def baseline_dbar(self) -> float:
        if self.policy is RoutingPolicy.RANDOM:
            return self.r_tx / 2.0
        return furthest_dbar_implicit(self.lam)

    def baseline(self, x: float) -> float:
        if self.dim != 1:
            raise DomainError("The Gamma baseline is defined for 1-D deployments only")
        if x < 0:
            return 0.0
        if x == 0:
            return 1.0
        # one transmission from the source plus one per intermediate node
        return 1.0 + gamma_baseline_hops(x, self.lam, self.baseline_dbar(), self.r_tx)

    def default_kind(self) -> str:
        return self.EXACT if self.dim == 1 else self.APPROX

    def hop_fn(self, kind: Optional[str] = None) -> Callable[[float], float]:
        """
        Hop-count function of the given kind

        Args:
            kind: 'exact', 'approx' or 'baseline'; defaults to exact in 1-D and approx in 2-D

        Returns:
            Callable mapping a distance in meters to expected hops
        """
        kind = kind or self.default_kind()
        if kind not in self.KINDS:
            raise DomainError(f"Unknown hop-count kind '{kind}', expected one of {', '.join(self.KINDS)}")
        return getattr(self, kind)

    def method_for(self, kind: str) -> HopMethod:
        if kind == self.BASELINE:
            return HopMethod.GAMMA_BASELINE
        if kind == self.APPROX:
            return HopMethod.LINEAR_APPROX if self.dim == 1 else HopMethod.APPROX_2D
        if self.policy is RoutingPolicy.RANDOM:
            return HopMethod.EXACT_RANDOM_1D
        return HopMethod.EXACT_FURTHEST_1D

    def curve(self, grid: Iterable[float], kind: Optional[str] = None) -> HopCurve:
        """Tabulate the hop-count function of the given kind over a distance grid"""
        kind = kind or self.default_kind()
        fn = self.hop_fn(kind)
        samples = tuple(HopSample(x=float(x), n=fn(float(x))) for x in grid)
        logger.debug(f"Tabulated {len(samples)} {kind} hop counts for {self.policy.value} routing")
        return HopCurve(samples=samples, method=self.method_for(kind), params=self.params())
