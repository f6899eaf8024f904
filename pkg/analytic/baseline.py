"""Incomplete-Gamma hop-count baseline, kept for comparison with the exact series."""

import logging
import math
from typing import Optional

from django.conf import settings
from scipy.optimize import bisect
from scipy.special import gammainc

from analytic.exceptions import ConvergenceError, DomainError, NoRootError
from analytic.types import GammaBaselineParams


logger = logging.getLogger('analytic')

BRACKET_STEPS = 64


def gamma_baseline_hops(distance_d: float, lam: float, d_bar: float,
                        r_tx: Optional[float] = None) -> float:
    """
    Expected hop count from the Gamma law of the number of intermediate nodes

    P(N_H = n) = gamma_n(D; lambda, n beta) - gamma_n(D; lambda, (n+1) beta), so
    P(N_H > n) telescopes to gammainc((n+1) beta, lambda D). Terms are summed
    until that tail falls below settings.GAMMA_TAIL_MASS.

    Args:
        distance_d: Distance to the destination D (m)
        lam: Node density (nodes/m)
        d_bar: Mean hop length under the routing policy (m)
        r_tx: Transmission range; when given, d_bar may not exceed it

    Returns:
        E[N_H] = sum of n P(N_H = n), the expected number of intermediate nodes
    """
    if not lam > 0:
        raise DomainError(f"Node density must be positive, got {lam}")
    params = GammaBaselineParams.build(distance_d, lam, d_bar, r_tx)
    scaled = lam * params.distance_d
    threshold = settings.GAMMA_TAIL_MASS
    cap = 10 * math.ceil(params.distance_d / params.d_bar)

    expected = 0.0
    tail = float(gammainc(params.beta, scaled))
    n = 0
    while tail >= threshold:
        n += 1
        if n > cap:
            raise ConvergenceError(
                f"Gamma baseline tail mass {tail:.3g} still above {threshold:g} after {cap} terms "
                f"(D={distance_d}, lambda={lam}, d_bar={d_bar})",
                tail_mass=tail,
                terms=cap,
            )
        # tail is P(N_H >= n)
        expected += tail
        tail = float(gammainc((n + 1) * params.beta, scaled))

    logger.debug(f"Gamma baseline at D={distance_d} summed {n} terms")
    return expected


def _furthest_dbar_residual(d: float, lam: float) -> float:
    return d - math.log1p(-lam * d / (lam - lam * d - 1.0)) / lam


def furthest_dbar_implicit(lam: float) -> float:
    """
    Mean hop length fed to the Gamma baseline for furthest routing

    Solves d = (1/lambda) ln(1 - lambda d / (lambda - lambda d - 1)) by a bracket
    scan over (0, 1/lambda] followed by bisection. d = 0 always satisfies the
    equation and is skipped.

    Args:
        lam: Node density (nodes/m)

    Returns:
        The positive root d_bar (m)

    Raises:
        NoRootError: if no sign change is found on the scan
    """
    if not lam > 0:
        raise DomainError(f"Node density must be positive, got {lam}")

    def residual(d: float) -> float:
        return _furthest_dbar_residual(d, lam)

    step = 1.0 / (BRACKET_STEPS * lam)
    lower, f_lower = step, None
    try:
        f_lower = residual(lower)
        for k in range(2, BRACKET_STEPS + 1):
            upper = k * step
            f_upper = residual(upper)
            if math.isnan(f_lower) or math.isnan(f_upper):
                break
            if f_lower == 0.0:
                return lower
            if f_lower * f_upper < 0:
                return bisect(residual, lower, upper, xtol=1e-15, rtol=settings.ROOT_RTOL)
            lower, f_lower = upper, f_upper
    except (ValueError, ZeroDivisionError) as e:
        raise NoRootError(f"Implicit furthest d_bar equation is undefined for lambda={lam}: {e}")

    raise NoRootError(
        f"No sign change of the furthest d_bar equation on (0, {1.0 / lam:g}] for lambda={lam}"
    )
