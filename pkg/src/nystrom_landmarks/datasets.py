"""Seeded synthetic manifolds with ground-truth tags."""
from __future__ import annotations

import numpy as np

from .exceptions import ParameterError
from .kernels import PointCloud
from .sampling import SeedLike, as_generator

LINE_DIRECTION = np.array([1.0, 2.0, 2.0]) / 3.0


def fishbowl(N: int, cap_z: float, seed: SeedLike) -> PointCloud:
    """Uniform points on the unit sphere below the plane ``z = cap_z``.

    Uses Archimedes' theorem: on the sphere, ``z`` is uniform on
    ``[-1, 1]``, so conditioning on ``z < cap_z`` means drawing ``z``
    uniformly from ``[-1, cap_z)``. Tags are ``(azimuth, polar angle)``.
    """
    if N < 4:
        raise ParameterError("fishbowl needs N >= 4")
    if not (0 < cap_z < 1):
        raise ParameterError(f"cap_z must lie in (0, 1), got {cap_z}")
    rng = as_generator(seed)
    z = rng.uniform(-1.0, cap_z, size=N)
    phi = rng.uniform(0.0, 2 * np.pi, size=N)
    r = np.sqrt(1.0 - z**2)
    pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return PointCloud(pts, np.column_stack([phi, np.arccos(z)]))


def uneven_line(N: int, seed: SeedLike, length: float = 1.0, noise: float = 1e-3,
                a: float = 2.0, b: float = 5.0) -> PointCloud:
    """Points on a straight segment in R^3 sampled at uneven speed.

    Positions along the segment are ``length * t`` with ``t ~ Beta(a, b)``,
    sorted, plus isotropic Gaussian noise of standard deviation
    ``noise * length``. The tag is ``t``.
    """
    if N < 4:
        raise ParameterError("uneven_line needs N >= 4")
    rng = as_generator(seed)
    t = np.sort(rng.beta(a, b, size=N))
    pts = length * t[:, None] * LINE_DIRECTION[None, :]
    pts = pts + rng.normal(scale=noise * length, size=pts.shape)
    return PointCloud(pts, t)
