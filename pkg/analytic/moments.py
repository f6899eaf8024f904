"""
Hop-distance moments and the linear hop-count approximations built on them.

1-D random routing draws the next hop uniformly in (0, R]; furthest routing
takes the maximum of a Poisson number of uniforms. In 2-D the next hop is drawn
inside a sector of angle theta oriented towards the destination.
"""

import logging
import math
from typing import Tuple, Union

import mpmath
from django.conf import settings

from analytic.exceptions import DomainError
from analytic.quadrature import adaptive_simpson
from analytic.types import MomentMode


logger = logging.getLogger('analytic')


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if not value > 0:
            raise DomainError(f"{name} must be positive, got {value}")


def _mode(mode: Union[MomentMode, str]) -> MomentMode:
    try:
        return MomentMode(mode)
    except ValueError:
        raise DomainError(f"Unknown moment mode '{mode}', expected 'exact' or 'approx'")


def linear_approx(x: float, moment1: float, moment2: float) -> float:
    """
    Linear approximation of the hop count from the hop-length moments

    Args:
        x: Distance to exceed (m)
        moment1: E[Y], mean hop length (m)
        moment2: E[Y^2] (m^2)

    Returns:
        x / E[Y] + E[Y^2] / (2 E[Y]^2)
    """
    if not moment1 > 0:
        raise DomainError(f"First moment must be positive, got {moment1}")
    # relative slack absorbs rounding in moments of nearly deterministic hops
    if not moment2 >= moment1 ** 2 * (1.0 - 1e-12):
        raise DomainError(
            f"Second moment {moment2} is below the squared mean {moment1 ** 2}; variance would be negative"
        )
    return x / moment1 + moment2 / (2.0 * moment1 ** 2)


def random_moments_1d(r_tx: float) -> Tuple[float, float]:
    _require_positive(r_tx=r_tx)
    return r_tx / 2.0, r_tx ** 2 / 3.0


def random_moments_2d(r_tx: float) -> Tuple[float, float]:
    _require_positive(r_tx=r_tx)
    return 2.0 * r_tx / 3.0, r_tx ** 2 / 2.0


def furthest_moments_1d(lam: float, r_tx: float) -> Tuple[float, float]:
    """
    Mean and second moment of the furthest-neighbor hop length on a line

    The closed forms lose digits to cancellation when lambda*R is small, so they
    are evaluated in a private mpmath context whose precision grows with
    -log10(lambda*R).

    Args:
        lam: Node density (nodes/m)
        r_tx: Transmission range (m)

    Returns:
        Tuple of (mean, second_moment)
    """
    _require_positive(lam=lam, r_tx=r_tx)
    a = lam * r_tx
    ctx = mpmath.MPContext()
    ctx.dps = 30 + math.ceil(3 * max(0.0, -math.log10(a)))

    lam_mp = ctx.mpf(lam)
    r = ctx.mpf(r_tx)
    a_mp = lam_mp * r
    growth = ctx.expm1(a_mp)

    mean = (ctx.expm1(-a_mp) + a_mp) / (lam_mp * -ctx.expm1(-a_mp))
    second = (ctx.exp(a_mp) * (r ** 2 - 2 * r / lam_mp + 2 / lam_mp ** 2) - 2 / lam_mp ** 2) / growth
    return float(mean), float(second)


def n_random_2d_approx(x: float, r_tx: float) -> float:
    """Random-neighbor hop count in 2-D: 3x/(2R) + 9/16"""
    _require_positive(r_tx=r_tx)
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x}")
    return linear_approx(x, *random_moments_2d(r_tx))


def _sector_exponent(lam: float, theta: float, r_tx: float) -> float:
    return 0.5 * theta * lam * r_tx ** 2


def chebyshev_term(lam: float, theta: float, r_tx: float) -> Tuple[float, float]:
    """
    Integral term of the furthest 2-D mean and its Chebyshev upper bound

    Args:
        lam: Node density (nodes/m^2)
        theta: Angle of progression (rad)
        r_tx: Transmission range (m)

    Returns:
        Tuple of (integral term, bound 2 / (R lambda theta))
    """
    _require_positive(lam=lam, theta=theta, r_tx=r_tx)
    c = _sector_exponent(lam, theta, r_tx)
    b = c / r_tx ** 2

    # e^{b x^2 - c} keeps the integrand in [e^-c, 1] whatever the density
    scaled = adaptive_simpson(
        lambda x: math.exp(b * x * x - c), 0.0, r_tx, rtol=settings.QUADRATURE_RTOL
    )
    term = scaled / -math.expm1(-c)
    bound = 2.0 / (r_tx * lam * theta)
    return term, bound


def e_xf2d(lam: float, theta: float, r_tx: float,
           mode: Union[MomentMode, str] = MomentMode.EXACT) -> float:
    """
    Mean distance to the furthest node inside the sector

    Args:
        lam: Node density (nodes/m^2)
        theta: Angle of progression (rad)
        r_tx: Transmission range (m)
        mode: 'exact' integrates numerically; 'approx' substitutes the Chebyshev bound

    Returns:
        E[X_F2D] in meters
    """
    mode = _mode(mode)
    _require_positive(lam=lam, theta=theta, r_tx=r_tx)
    c = _sector_exponent(lam, theta, r_tx)
    head = r_tx / -math.expm1(-c)

    if mode is MomentMode.APPROX:
        return head - 2.0 / (r_tx * lam * theta)
    term, _ = chebyshev_term(lam, theta, r_tx)
    return head - term


def e_x2f2d(lam: float, theta: float, r_tx: float) -> float:
    """Second moment of the furthest 2-D hop length: R^2/(1 - e^-c) - 2/(lambda theta)"""
    _require_positive(lam=lam, theta=theta, r_tx=r_tx)
    c = _sector_exponent(lam, theta, r_tx)
    return r_tx ** 2 / -math.expm1(-c) - 2.0 / (lam * theta)


def n_furthest_2d_approx(x: float, lam: float, theta: float, r_tx: float,
                         mode: Union[MomentMode, str] = MomentMode.EXACT) -> float:
    """Furthest-neighbor hop count in 2-D: (x + R/2) / E[X_F2D]"""
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x}")
    return (x + r_tx / 2.0) / e_xf2d(lam, theta, r_tx, mode)
