"""
Homogeneous Poisson point processes.

The point count is drawn first and the locations are then placed uniformly,
which is the defining construction of a homogeneous PPP.
"""

import math
from typing import Tuple, Union

import numpy as np

from analytic.exceptions import DomainError
from simulate.rng import SeededRun


RandomSource = Union[SeededRun, np.random.Generator]


def as_generator(source: RandomSource) -> np.random.Generator:
    if isinstance(source, SeededRun):
        return source.generator()
    return source


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if not value > 0:
            raise DomainError(f"{name} must be positive, got {value}")


def sample_ppp_1d(lam: float, length: float, source: RandomSource) -> np.ndarray:
    """Node positions on [0, length], sorted ascending"""
    _require_positive(lam=lam, length=length)
    rng = as_generator(source)
    count = rng.poisson(lam * length)
    return np.sort(rng.uniform(0.0, length, count))


def sample_ppp_sector(lam: float, theta: float, radius: float,
                      source: RandomSource) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodes of a PPP restricted to a sector of angle theta and the given radius

    Args:
        lam: Node density (nodes/m^2)
        theta: Sector angle (rad), centred on angle 0
        radius: Sector radius (m)
        source: Seeded run or generator

    Returns:
        Tuple of (radii, angles); radii have density 2x/radius^2
    """
    _require_positive(lam=lam, theta=theta, radius=radius)
    if theta > math.pi:
        raise DomainError(f"Sector angle must not exceed pi, got {theta}")
    rng = as_generator(source)
    count = rng.poisson(lam * 0.5 * theta * radius ** 2)
    radii = radius * np.sqrt(rng.uniform(0.0, 1.0, count))
    angles = rng.uniform(-0.5 * theta, 0.5 * theta, count)
    return radii, angles


def sample_ppp_rect(lam: float, width: float, height: float, source: RandomSource) -> np.ndarray:
    """Nodes on [0, width] x [-height/2, height/2] as an (n, 2) array"""
    _require_positive(lam=lam, width=width, height=height)
    rng = as_generator(source)
    count = rng.poisson(lam * width * height)
    xs = rng.uniform(0.0, width, count)
    ys = rng.uniform(-0.5 * height, 0.5 * height, count)
    return np.column_stack((xs, ys))
