import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple, Union

from analytic.exceptions import DomainError


logger = logging.getLogger('analytic')


class RoutingPolicy(str, Enum):
    RANDOM = 'random'
    FURTHEST = 'furthest'


class HopMethod(str, Enum):
    EXACT_RANDOM_1D = 'ExactRandom1D'
    EXACT_FURTHEST_1D = 'ExactFurthest1D'
    LINEAR_APPROX = 'LinearApprox'
    GAMMA_BASELINE = 'GammaBaseline'
    APPROX_2D = 'Approx2D'
    MONTE_CARLO = 'MonteCarlo'


class MomentMode(str, Enum):
    EXACT = 'exact'
    APPROX = 'approx'


@dataclass(frozen=True)
class RadioParams:
    """Ranges in meters, capacity in bit/s, airtime fraction dimensionless"""
    r_tx: float
    r_i: float
    r_cs: float
    capacity_c: float
    airtime_fraction_a: float

    def __post_init__(self):
        if not self.r_tx > 0:
            raise DomainError(f"r_tx must be positive, got {self.r_tx}")
        if not (self.r_tx <= self.r_i <= self.r_cs):
            raise DomainError(
                f"ranges must satisfy r_tx <= r_i <= r_cs, got {self.r_tx}, {self.r_i}, {self.r_cs}"
            )
        if not self.capacity_c > 0:
            raise DomainError(f"capacity_c must be positive, got {self.capacity_c}")
        if not (0 < self.airtime_fraction_a <= 1):
            raise DomainError(f"airtime_fraction_a must lie in (0, 1], got {self.airtime_fraction_a}")
        if not (self.r_tx < self.r_i < 2 * self.r_tx < self.r_cs):
            logger.warning(
                f"Radio ranges r_tx={self.r_tx}, r_i={self.r_i}, r_cs={self.r_cs} "
                f"do not follow the usual ordering r_tx < r_i < 2 r_tx < r_cs"
            )

    def with_airtime(self, a: float) -> 'RadioParams':
        return RadioParams(self.r_tx, self.r_i, self.r_cs, self.capacity_c, a)


@dataclass(frozen=True)
class Line:
    length: float

    def __post_init__(self):
        if not self.length > 0:
            raise DomainError(f"line length must be positive, got {self.length}")


@dataclass(frozen=True)
class Sector:
    """2-D region of width x height meters; next hops are chosen inside an AoP sector"""
    aop_theta: float
    width: float = 2000.0
    height: float = 1000.0

    def __post_init__(self):
        if not (0 < self.aop_theta <= math.pi):
            raise DomainError(f"aop_theta must lie in (0, pi], got {self.aop_theta}")
        if not (self.width > 0 and self.height > 0):
            raise DomainError(f"region extent must be positive, got {self.width} x {self.height}")


@dataclass(frozen=True)
class Deployment:
    lam: float
    geometry: Union[Line, Sector]

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError(f"node density must be positive, got {self.lam}")

    @property
    def dim(self) -> int:
        return 1 if isinstance(self.geometry, Line) else 2

    @property
    def theta(self) -> Optional[float]:
        return self.geometry.aop_theta if isinstance(self.geometry, Sector) else None

    def describe(self) -> Dict[str, float]:
        if isinstance(self.geometry, Line):
            return {'lambda': self.lam, 'length': self.geometry.length}
        return {
            'lambda': self.lam,
            'aop_theta': self.geometry.aop_theta,
            'width': self.geometry.width,
            'height': self.geometry.height,
        }


@dataclass(frozen=True)
class HopSample:
    x: float
    n: float
    stderr: Optional[float] = None


@dataclass(frozen=True)
class HopCurve:
    """Tabulated N(x) with the method that produced it"""
    samples: Tuple[HopSample, ...]
    method: HopMethod
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        xs = [s.x for s in self.samples]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise DomainError("HopCurve x values must be strictly increasing")
        ns = [s.n for s in self.samples]
        # MC means share one trial set per curve, so they are monotone as well
        if any(b < a - 1e-12 for a, b in zip(ns, ns[1:])):
            raise DomainError(f"HopCurve from {self.method.value} is not nondecreasing in x")
        is_mc = self.method is HopMethod.MONTE_CARLO
        if any((s.stderr is not None) != is_mc for s in self.samples):
            raise DomainError("stderr must be present exactly for Monte Carlo curves")

    @property
    def xs(self) -> List[float]:
        return [s.x for s in self.samples]

    @property
    def ns(self) -> List[float]:
        return [s.n for s in self.samples]


@dataclass(frozen=True)
class GammaBaselineParams:
    d_bar: float
    beta: float
    distance_d: float

    def __post_init__(self):
        if not self.d_bar > 0:
            raise DomainError(f"d_bar must be positive, got {self.d_bar}")
        if not self.beta > 1:
            raise DomainError(f"beta must exceed 1, got {self.beta}")
        if not self.distance_d > 0:
            raise DomainError(f"distance must be positive, got {self.distance_d}")

    @classmethod
    def build(cls, distance_d: float, lam: float, d_bar: float,
              r_tx: Optional[float] = None) -> 'GammaBaselineParams':
        if r_tx is not None and d_bar > r_tx:
            raise DomainError(f"d_bar={d_bar} exceeds the transmission range {r_tx}")
        return cls(d_bar=d_bar, beta=1.0 + d_bar * lam, distance_d=distance_d)
