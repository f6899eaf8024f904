import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, List, Optional

from django.conf import settings
from scipy.optimize import bisect

from analytic.exceptions import DomainError, NoSolutionError, SaturationError
from analytic.services import HopCountService
from analytic.types import RadioParams


logger = logging.getLogger('throughput')

HopFn = Callable[[float], float]


class MacModel(str, Enum):
    PERFECT = 'PerfectMac'
    DCF = 'Mac80211'


@dataclass(frozen=True)
class ThroughputResult:
    """One operating point of a multi-hop flow; rates in bit/s"""
    offered_rate_r: float
    airtime_x: float
    p_col: float
    contending_hops: float
    blocking_hops: float
    throughput: float
    model: MacModel
    beyond_validity: bool = False

    def __post_init__(self):
        if not (0.0 <= self.airtime_x <= 1.0):
            raise DomainError(f"airtime_x must lie in [0, 1], got {self.airtime_x}")
        if self.model is MacModel.PERFECT and self.p_col != 0.0:
            raise DomainError("A perfect MAC has no collisions")
        if self.beyond_validity:
            return
        if not (0.0 <= self.p_col < 1.0):
            raise DomainError(f"p_col must lie in [0, 1), got {self.p_col}")
        if self.throughput > self.offered_rate_r:
            raise DomainError(f"throughput {self.throughput} exceeds the offered rate {self.offered_rate_r}")


def _require_rate(r: float, capacity_c: float) -> float:
    if not r >= 0:
        raise DomainError(f"Offered rate must be nonnegative, got {r}")
    if r > capacity_c:
        raise DomainError(f"Offered rate {r} exceeds the single-hop capacity {capacity_c}")
    return r / capacity_c


def t_max_perfect(capacity_c: float, hops_blocking: float) -> float:
    """Maximum end-to-end rate with an ideal MAC: C / (1 + N(R_i))"""
    if not capacity_c > 0:
        raise DomainError(f"capacity_c must be positive, got {capacity_c}")
    if not hops_blocking >= 0:
        raise DomainError(f"hops_blocking must be nonnegative, got {hops_blocking}")
    return capacity_c / (1.0 + hops_blocking)


def t_of_r_perfect(r: float, capacity_c: float, hops_blocking: float) -> ThroughputResult:
    ceiling = t_max_perfect(capacity_c, hops_blocking)
    x = _require_rate(r, capacity_c)
    return ThroughputResult(
        offered_rate_r=r,
        airtime_x=x,
        p_col=0.0,
        contending_hops=0.0,
        blocking_hops=hops_blocking,
        throughput=min(r, ceiling),
        model=MacModel.PERFECT,
    )


def p_col(airtime_x: float, a: float, contending_hops: float) -> float:
    """
    Collision probability seen by the first forwarding node

    Args:
        airtime_x: Normalized airtime of each forwarding node, r / C
        a: Share of a successful exchange spent on the data frame
        contending_hops: Forwarding nodes silenced together with the hidden node

    Returns:
        a x / (1 - contending_hops x)

    Raises:
        SaturationError: if contending_hops * x >= 1
    """
    if not airtime_x >= 0:
        raise DomainError(f"airtime_x must be nonnegative, got {airtime_x}")
    if not contending_hops >= 0:
        raise DomainError(f"contending_hops must be nonnegative, got {contending_hops}")
    if not (0 < a <= 1):
        raise DomainError(f"a must lie in (0, 1], got {a}")
    busy = contending_hops * airtime_x
    if busy >= 1.0:
        raise SaturationError(
            f"Contending airtime {busy:.4g} fills the channel (x={airtime_x:.4g}, {contending_hops:.4g} contending hops)"
        )
    return a * airtime_x / (1.0 - busy)


def contending_hops_at(hop_fn: HopFn, r_cs: float, d_i: float = 0.0) -> float:
    """N(d_i + R_cs) - N(d_i)"""
    return hop_fn(d_i + r_cs) - hop_fn(d_i)


def _fixed_point_map(x: float, a: float, contending: float, blocking: float) -> float:
    return x - (1.0 - p_col(x, a, contending)) / (1.0 + blocking)


def t_max_mac(params: RadioParams, hop_fn: HopFn, d_i: float = 0.0) -> ThroughputResult:
    """
    Maximum end-to-end rate under the 802.11 hidden-node collision model

    The operating airtime is the fixed point x* = (1 - P_col(x*)) / (1 + N(R_cs)),
    found by bisection on (0, min(1, 1/contending_hops)).

    Args:
        params: Radio parameters
        hop_fn: Hop-count function of the routing policy
        d_i: Distance of the analysed node from the source

    Returns:
        ThroughputResult at x*, with throughput = x* C
    """
    blocking = hop_fn(params.r_cs)
    contending = contending_hops_at(hop_fn, params.r_cs, d_i)
    a = params.airtime_fraction_a

    upper = 1.0 if contending <= 1.0 else 1.0 / contending
    bracket = (0.0, upper * (1.0 - 1e-12))

    def residual(x: float) -> float:
        return _fixed_point_map(x, a, contending, blocking)

    low, high = residual(bracket[0]), residual(bracket[1])
    if low * high > 0:
        raise NoSolutionError("Airtime fixed point is not bracketed", bracket)
    x_star = bisect(residual, bracket[0], bracket[1], xtol=settings.FIXED_POINT_XTOL)
    collision = p_col(x_star, a, contending)

    logger.debug(
        f"MAC fixed point x*={x_star:.6g}, p_col={collision:.4g}, residual={abs(residual(x_star)):.2e}"
    )
    return ThroughputResult(
        offered_rate_r=x_star * params.capacity_c,
        airtime_x=x_star,
        p_col=collision,
        contending_hops=contending,
        blocking_hops=blocking,
        throughput=x_star * params.capacity_c,
        model=MacModel.DCF,
    )


def fixed_point_residual(result: ThroughputResult) -> float:
    """|x* - (1 - p_col(x*)) / (1 + N(R_cs))| for a t_max_mac result"""
    return abs(result.airtime_x - (1.0 - result.p_col) / (1.0 + result.blocking_hops))


def t_of_r_mac(r: float, params: RadioParams, hop_fn: HopFn,
               t_max: Optional[float] = None, d_i: float = 0.0) -> ThroughputResult:
    """
    Throughput at offered rate r under the collision model

    Operating points past the saturation bracket or above t_max carry the
    beyond_validity flag; past saturation p_col and throughput are NaN.

    Args:
        r: Offered rate (bit/s)
        params: Radio parameters
        hop_fn: Hop-count function of the routing policy
        t_max: Precomputed t_max_mac throughput, computed when omitted
        d_i: Distance of the analysed node from the source

    Returns:
        ThroughputResult for model Mac80211
    """
    x = _require_rate(r, params.capacity_c)
    blocking = hop_fn(params.r_cs)
    contending = contending_hops_at(hop_fn, params.r_cs, d_i)
    if t_max is None:
        t_max = t_max_mac(params, hop_fn, d_i).throughput

    try:
        collision = p_col(x, params.airtime_fraction_a, contending)
    except SaturationError:
        collision = math.nan
    if math.isnan(collision) or collision >= 1.0:
        return ThroughputResult(r, x, math.nan, contending, blocking, math.nan, MacModel.DCF, beyond_validity=True)

    served = (1.0 - collision) * params.capacity_c / (1.0 + blocking)
    return ThroughputResult(
        offered_rate_r=r,
        airtime_x=x,
        p_col=collision,
        contending_hops=contending,
        blocking_hops=blocking,
        throughput=min(r, served),
        model=MacModel.DCF,
        beyond_validity=r > t_max,
    )


def hidden_node_expected(x: float, mean_hop: float, hop_fn: HopFn) -> float:
    """Expected forwarding nodes in (x, x + E[d]]: N(x + E[d]) - N(x)"""
    if not x >= 0:
        raise DomainError(f"x must be nonnegative, got {x}")
    if not mean_hop > 0:
        raise DomainError(f"mean_hop must be positive, got {mean_hop}")
    return hop_fn(x + mean_hop) - hop_fn(x)


class ThroughputService:
    """End-to-end throughput of one routing policy over one deployment"""

    def __init__(self, hop_service: HopCountService, kind: Optional[str] = None):
        self.hop_service = hop_service
        self.radio = hop_service.radio
        self.kind = kind or hop_service.default_kind()
        self.hop_fn = hop_service.hop_fn(self.kind)
        self._t_max_mac: Optional[ThroughputResult] = None

    def t_max_perfect(self) -> float:
        return t_max_perfect(self.radio.capacity_c, self.hop_fn(self.radio.r_i))

    def t_max_mac(self) -> ThroughputResult:
        if self._t_max_mac is None:
            self._t_max_mac = t_max_mac(self.radio, self.hop_fn)
        return self._t_max_mac

    def perfect_ceiling_cs(self) -> float:
        """C / (1 + N(R_cs)), the a -> 0 limit of the collision model"""
        return t_max_perfect(self.radio.capacity_c, self.hop_fn(self.radio.r_cs))

    def at_rate(self, r: float) -> ThroughputResult:
        return t_of_r_mac(r, self.radio, self.hop_fn, t_max=self.t_max_mac().throughput)

    def at_rate_perfect(self, r: float) -> ThroughputResult:
        return t_of_r_perfect(r, self.radio.capacity_c, self.hop_fn(self.radio.r_i))

    def curve(self, rates: Iterable[float]) -> List[ThroughputResult]:
        results = [self.at_rate(r) for r in rates]
        flagged = sum(result.beyond_validity for result in results)
        if flagged:
            logger.info(f"{flagged}/{len(results)} offered rates lie beyond the collision model's validity")
        return results

    def hidden_nodes(self, x: float) -> float:
        return hidden_node_expected(x, self.hop_service.mean_hop(), self.hop_fn)
