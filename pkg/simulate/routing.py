import math
from typing import Optional, Union

import numpy as np

from analytic.exceptions import DeadEndError, DomainError
from analytic.types import RoutingPolicy


Position = Union[float, np.ndarray]

# absorbs rounding in the sector test for nodes on its edge
SECTOR_SLACK = 1e-12


def _next_on_line(current: float, nodes: np.ndarray, policy: RoutingPolicy, r_tx: float,
                  rng: np.random.Generator) -> float:
    lo = int(np.searchsorted(nodes, current, side='right'))
    hi = int(np.searchsorted(nodes, current + r_tx, side='right'))
    if hi <= lo:
        raise DeadEndError(f"No forward neighbor within {r_tx} m of {current:.3f} m")
    if policy is RoutingPolicy.RANDOM:
        index = lo + int(rng.integers(hi - lo))
    else:
        # lowest index among nodes sharing the furthest position
        index = int(np.searchsorted(nodes, nodes[hi - 1], side='left'))
    return float(nodes[index])


def _next_in_plane(current: np.ndarray, nodes: np.ndarray, policy: RoutingPolicy, r_tx: float,
                   rng: np.random.Generator, destination: np.ndarray, theta: float) -> np.ndarray:
    offsets = nodes - current
    distances = np.hypot(offsets[:, 0], offsets[:, 1])
    heading = destination - current
    heading = heading / np.hypot(heading[0], heading[1])
    with np.errstate(invalid='ignore', divide='ignore'):
        cosines = (offsets @ heading) / distances
    mask = (distances > 0) & (distances <= r_tx) & (cosines >= math.cos(0.5 * theta) - SECTOR_SLACK)
    candidates = np.flatnonzero(mask)
    if candidates.size == 0:
        raise DeadEndError(f"No neighbor within {r_tx} m inside the {theta:.3f} rad sector at {current}")
    if policy is RoutingPolicy.RANDOM:
        index = candidates[int(rng.integers(candidates.size))]
    else:
        index = candidates[int(np.argmax(distances[candidates]))]
    return nodes[index]


def route_next_hop(current: Position, nodes: np.ndarray, policy: Union[RoutingPolicy, str], r_tx: float,
                   rng: np.random.Generator, destination: Optional[np.ndarray] = None,
                   theta: Optional[float] = None) -> Position:
    """
    Choose the next forwarder among the nodes ahead of current

    On a line, nodes must be sorted and the candidates are those in
    (current, current + r_tx]. In the plane, candidates lie within r_tx inside
    the sector of angle theta whose axis points at the destination.

    Args:
        current: Position of the transmitter (float on a line, (2,) array in the plane)
        nodes: Sorted positions (line) or (n, 2) coordinates (plane)
        policy: Random picks uniformly; furthest maximises the distance covered
        r_tx: Transmission range (m)
        rng: Generator of the trial
        destination: Target point, required in the plane
        theta: Angle of progression (rad), required in the plane

    Returns:
        Position of the chosen node

    Raises:
        DeadEndError: if there is no candidate
    """
    policy = RoutingPolicy(policy)
    if np.ndim(current) == 0:
        return _next_on_line(float(current), nodes, policy, r_tx, rng)
    if destination is None or theta is None:
        raise DomainError("Planar routing needs a destination and an angle of progression")
    return _next_in_plane(np.asarray(current, dtype=float), nodes, policy, r_tx, rng,
                          np.asarray(destination, dtype=float), theta)


def walk_line(nodes: np.ndarray, policy: RoutingPolicy, r_tx: float, rng: np.random.Generator,
              x_max: float) -> np.ndarray:
    """Positions reached hop by hop from the origin until one lies beyond x_max"""
    reached = []
    current = 0.0
    while current <= x_max:
        current = route_next_hop(current, nodes, policy, r_tx, rng)
        reached.append(current)
    return np.asarray(reached)


def walk_plane(nodes: np.ndarray, policy: RoutingPolicy, r_tx: float, theta: float,
               destination: np.ndarray, rng: np.random.Generator, x_max: float) -> np.ndarray:
    """Euclidean distances from the origin after each hop, until one exceeds x_max"""
    hop_cap = 10 * math.ceil(x_max / r_tx) + 10
    reached = []
    current = np.zeros(2)
    progress = 0.0
    while progress <= x_max:
        if len(reached) >= hop_cap:
            raise DeadEndError(f"Walk exceeded {hop_cap} hops before passing {x_max} m")
        current = route_next_hop(current, nodes, policy, r_tx, rng, destination, theta)
        progress = float(np.hypot(current[0], current[1]))
        reached.append(progress)
    return np.asarray(reached)


def hops_to_pass(reached: np.ndarray, x_grid: np.ndarray) -> np.ndarray:
    """First hop index (1-based) whose progress exceeds each grid distance"""
    running = np.maximum.accumulate(reached)
    return np.searchsorted(running, x_grid, side='right') + 1
