"""
Exact 1-D hop counts from the renewal series.

Both series alternate in sign and their terms grow like e^{psi(x)}, so double
precision loses every digit after a few transmission ranges. Each call builds a
private mpmath context whose precision covers the largest exponent in play;
nothing mutable is shared between calls except the memoized C_n prefixes, which
only ever grow or get rebuilt at a higher precision.
"""

import logging
import math
from typing import Dict, List, Optional, Tuple

import mpmath
from django.conf import settings

from analytic.exceptions import DomainError
from analytic.moments import furthest_moments_1d, linear_approx, random_moments_1d
from analytic.types import RoutingPolicy


logger = logging.getLogger('analytic')

BRANCH_GAP_TOLERANCE = 1e-8


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if not value > 0:
            raise DomainError(f"{name} must be positive, got {value}")


def _require_number(x: float) -> None:
    if math.isnan(x) or math.isinf(x):
        raise DomainError(f"x must be finite, got {x}")


def _working_dps(exponent: float) -> int:
    """Decimal digits that absorb cancellation among terms of size e^exponent"""
    digits = 30 + math.ceil(2.0 * max(exponent, 0.0) / math.log(10))
    return 20 * math.ceil(digits / 20)


def _context(dps: int) -> mpmath.MPContext:
    ctx = mpmath.MPContext()
    ctx.dps = dps
    return ctx


def _horizon(horizon: Optional[int]) -> int:
    return settings.SERIES_STABILITY_HORIZON if horizon is None else horizon


def psi(x: float, lam: float, r_tx: float) -> float:
    """lambda x / (1 - e^{-lambda R}); negative x is allowed"""
    _require_positive(lam=lam, r_tx=r_tx)
    return lam * x / -math.expm1(-lam * r_tx)


def _psi_mp(ctx, x, lam: float, r_tx: float):
    lam_mp = ctx.mpf(lam)
    return lam_mp * x / -ctx.expm1(-lam_mp * r_tx)


# Random neighbor

def _random_branch(ctx, n: int, u):
    return ctx.fsum(
        (-1) ** k * (u - k) ** k * ctx.exp(u - k) / ctx.factorial(k)
        for k in range(n)
    )


def n_random_1d(x: float, r_tx: float, horizon: Optional[int] = None) -> float:
    """
    Expected number of hops to pass x under random-neighbor routing

    The value depends on x/R only; node density does not enter.

    Args:
        x: Distance (m)
        r_tx: Transmission range (m)
        horizon: Largest ceil(x/R) evaluated by the series; defaults to
            settings.SERIES_STABILITY_HORIZON

    Returns:
        Expected hop count (0 for x < 0, 1 at x = 0)
    """
    _require_positive(r_tx=r_tx)
    _require_number(x)
    if x < 0:
        return 0.0
    if x == 0:
        return 1.0

    n = math.ceil(x / r_tx)
    limit = _horizon(horizon)
    if n > limit:
        logger.warning(
            f"x={x} needs {n} series branches (horizon {limit}); switching to the linear approximation"
        )
        return linear_approx(x, *random_moments_1d(r_tx))

    ctx = _context(_working_dps(x / r_tx))
    return float(_random_branch(ctx, n, ctx.mpf(x) / r_tx))


# Furthest neighbor

def _furthest_branch(ctx, n: int, x, lam: float, r_tx: float, table):
    """Closed form valid on ((n-1)R, nR]; table holds C_1..C_n"""
    q = -ctx.expm1(-ctx.mpf(lam) * r_tx)
    head = _psi_mp(ctx, x, lam, r_tx)
    terms = [table[n - 1] * ctx.exp(head), n * q]
    for k in range(1, n):
        tail = _psi_mp(ctx, x - k * r_tx, lam, r_tx)
        terms.append(
            (-1) ** k * head * tail ** (k - 1) * ctx.exp(tail) * table[n - k - 1] / ctx.factorial(k)
        )
    return ctx.fsum(terms)


# (lam, r_tx) -> (dps, C_1..C_k); a prefix is extended in place while the
# precision suffices and rebuilt at the new precision otherwise
_C_TABLES: Dict[Tuple[float, float], Tuple[int, List]] = {}


def _extend_c_table(ctx, lam: float, r_tx: float, table: List, n: int) -> None:
    """Append C_{k+1}..C_n to a table holding C_1..C_k, all at ctx precision"""
    a = _psi_mp(ctx, ctx.mpf(r_tx), lam, r_tx)
    q = -ctx.expm1(-ctx.mpf(lam) * r_tx)
    table[:] = [ctx.mpf(value) for value in table] or [1 - q]
    growth = [ctx.exp(a * j) for j in range(n)]
    factorials = [ctx.factorial(k) for k in range(n)]

    def at(index):
        # C_0 is zero
        return table[index - 1] if index > 0 else ctx.zero

    for size in range(len(table) + 1, n + 1):
        m = size - 1
        head = a * m
        # weights[k - 1] = (-1)^k psi(mR) psi^{k-1}((m-k)R) / k!
        weights = [(-1) ** k * head * (a * (m - k)) ** (k - 1) / factorials[k] for k in range(1, m + 1)]

        value = at(size - 1) - q / growth[m] + ctx.fsum(
            weights[k - 1] / growth[k] * (at(size - 1 - k) - at(size - k))
            for k in range(1, m + 1)
        )
        table.append(value)

        # C_n is defined by continuity at (n-1)R
        left = at(size - 1) * growth[m] + m * q + ctx.fsum(
            weights[k - 1] * growth[m - k] * at(size - 1 - k) for k in range(1, m)
        )
        right = value * growth[m] + size * q + ctx.fsum(
            weights[k - 1] * growth[m - k] * at(size - k) for k in range(1, m + 1)
        )
        gap = abs(right - left)
        if gap > BRANCH_GAP_TOLERANCE:
            logger.warning(f"C_{size} leaves a continuity gap of {float(gap):.3g} at x={m * r_tx} (lambda={lam})")


def _c_table(lam: float, r_tx: float, n: int) -> Tuple[int, Tuple]:
    """Working precision and C_1..C_n, precise enough for branches up to n"""
    needed = _working_dps(psi(n * r_tx, lam, r_tx))
    dps, table = _C_TABLES.get((lam, r_tx), (0, []))
    if dps < needed:
        dps, table = needed, []
    if len(table) < n:
        table = list(table)
        _extend_c_table(_context(dps), lam, r_tx, table, n)
        _C_TABLES[(lam, r_tx)] = (dps, table)
    return dps, tuple(table[:n])


def _require_index(n: int) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    return int(n)


def c_n(n: int, lam: float, r_tx: float) -> float:
    """
    Constant of the n-th branch of the furthest-neighbor series

    Args:
        n: Branch index, n >= 1
        lam: Node density (nodes/m)
        r_tx: Transmission range (m)

    Returns:
        C_n as a float; C_1 = e^{-lambda R}
    """
    n = _require_index(n)
    _require_positive(lam=lam, r_tx=r_tx)
    _, table = _c_table(lam, r_tx, n)
    return float(table[-1])


def n_furthest_1d(x: float, lam: float, r_tx: float, horizon: Optional[int] = None) -> float:
    """
    Expected number of hops to pass x under furthest-neighbor routing

    Args:
        x: Distance (m)
        lam: Node density (nodes/m)
        r_tx: Transmission range (m)
        horizon: Largest ceil(x/R) evaluated by the series; defaults to
            settings.SERIES_STABILITY_HORIZON

    Returns:
        Expected hop count (0 for x < 0, 1 at x = 0)
    """
    _require_positive(lam=lam, r_tx=r_tx)
    _require_number(x)
    if x < 0:
        return 0.0
    if x == 0:
        return 1.0

    n = math.ceil(x / r_tx)
    limit = _horizon(horizon)
    if n > limit:
        logger.warning(
            f"x={x} needs {n} series branches (horizon {limit}); switching to the linear approximation"
        )
        return linear_approx(x, *furthest_moments_1d(lam, r_tx))

    dps, table = _c_table(lam, r_tx, n)
    ctx = _context(dps)
    table = [ctx.mpf(value) for value in table]
    return float(_furthest_branch(ctx, n, ctx.mpf(x), lam, r_tx, table))


def series_branch_gap(n: int, policy: RoutingPolicy, r_tx: float, lam: Optional[float] = None) -> float:
    """
    |branch_n(nR) - branch_{n+1}(nR)|, the jump the series would show at nR

    Args:
        n: Boundary index, n >= 1
        policy: Routing policy selecting the series
        r_tx: Transmission range (m)
        lam: Node density, required for furthest routing

    Returns:
        The absolute gap, evaluated at working precision
    """
    n = _require_index(n)
    _require_positive(r_tx=r_tx)
    policy = RoutingPolicy(policy)

    if policy is RoutingPolicy.RANDOM:
        ctx = _context(_working_dps(n + 1))
        u = ctx.mpf(n)
        return float(abs(_random_branch(ctx, n, u) - _random_branch(ctx, n + 1, u)))

    if lam is None:
        raise DomainError("Furthest-neighbor series needs the node density")
    _require_positive(lam=lam)
    dps, table = _c_table(lam, r_tx, n + 1)
    ctx = _context(dps)
    table = [ctx.mpf(value) for value in table]
    boundary = ctx.mpf(r_tx) * n
    return float(abs(
        _furthest_branch(ctx, n, boundary, lam, r_tx, table)
        - _furthest_branch(ctx, n + 1, boundary, lam, r_tx, table)
    ))
