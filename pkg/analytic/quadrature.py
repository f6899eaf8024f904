import logging
from typing import Callable, List, Tuple

from analytic.exceptions import QuadratureError


logger = logging.getLogger('analytic')

MAX_DEPTH = 60
MAX_RESCALES = 4


def _simpson(fa: float, fm: float, fb: float, width: float) -> float:
    return width * (fa + 4.0 * fm + fb) / 6.0


def _integrate(f: Callable[[float], float], lower: float, upper: float,
               abs_tol: float, max_depth: int) -> Tuple[float, float]:
    """Returns (estimate, error left on panels that hit max_depth)"""
    fa, fm, fb = f(lower), f(0.5 * (lower + upper)), f(upper)
    span = upper - lower
    total = 0.0
    unresolved = 0.0
    stack: List[Tuple[float, float, float, float, float, float, int]] = [
        (lower, upper, fa, fm, fb, _simpson(fa, fm, fb, span), 0)
    ]
    while stack:
        a, b, fa, fm, fb, estimate, depth = stack.pop()
        m = 0.5 * (a + b)
        flm, frm = f(0.5 * (a + m)), f(0.5 * (m + b))
        left = _simpson(fa, flm, fm, m - a)
        right = _simpson(fm, frm, fb, b - m)
        delta = left + right - estimate

        if abs(delta) <= 15.0 * abs_tol * (b - a) / span or depth >= max_depth:
            total += left + right + delta / 15.0
            if depth >= max_depth:
                unresolved += abs(delta) / 15.0
            continue
        stack.append((m, b, fm, frm, fb, right, depth + 1))
        stack.append((a, m, fa, flm, fm, left, depth + 1))
    return total, unresolved


def adaptive_simpson(f: Callable[[float], float], lower: float, upper: float,
                     rtol: float = 1e-10, max_depth: int = MAX_DEPTH) -> float:
    """
    Integrate a smooth function over [lower, upper] by adaptive Simpson bisection

    Panels are processed from an explicit stack. A panel is accepted once its two
    halves differ from the whole-panel estimate by at most 15 times its share of
    the absolute tolerance; the Richardson-corrected value is accumulated. The
    absolute tolerance starts from the three-point estimate and is tightened
    when the converged integral turns out much smaller.

    Args:
        f: Integrand, evaluated at plain floats
        lower: Lower limit
        upper: Upper limit
        rtol: Requested relative tolerance on the integral
        max_depth: Bisection depth at which a panel is accepted unconverged

    Returns:
        The integral estimate

    Raises:
        QuadratureError: if depth-capped panels leave more than rtol of relative error
    """
    if upper == lower:
        return 0.0
    if upper < lower:
        return -adaptive_simpson(f, upper, lower, rtol, max_depth)

    span = upper - lower
    scale = abs(_simpson(f(lower), f(0.5 * (lower + upper)), f(upper), span)) or 1.0
    for _ in range(MAX_RESCALES):
        total, unresolved = _integrate(f, lower, upper, rtol * scale, max_depth)
        if abs(total) >= 0.5 * scale or total == 0.0:
            break
        scale = abs(total)

    achieved = unresolved / (abs(total) or 1.0)
    if achieved > rtol:
        raise QuadratureError(
            f"Adaptive Simpson did not converge on [{lower}, {upper}] within depth {max_depth}",
            achieved,
        )
    return total
