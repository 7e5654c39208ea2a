"""Exact samplers for Brownian first-passage times and the last-hitting time g.

A Brownian motion from 0 first reaches level a at T_a, which has the law of
a**2 / N**2 for N standard normal. The last time g at which BES(3) from r sits
at its ultimate minimum has the law of T_{r(1-U)} with U uniform on [0, 1],
so ``g = r**2 (1-U)**2 / N**2``.

Draw order is part of the API: ``sample_g_exact`` consumes one uniform, then
one normal. The ``*_many`` variants consume a block of n uniforms, then a
block of n normals.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FirstPassageSample:
    level_distance: float
    time: float


@dataclass(frozen=True)
class GSample:
    u: float
    a: float  # ultimate minimum I_inf = r*u
    g: float


def _nonzero_normal(rng) -> float:
    n = rng.draw_standard_normal()
    while n == 0.0:
        n = rng.draw_standard_normal()
    return n


def _nonzero_normals(rng, size: int) -> np.ndarray:
    n = np.asarray(rng.draw_standard_normal(size), dtype=float)
    zero = n == 0.0
    while zero.any():
        n[zero] = rng.draw_standard_normal(int(zero.sum()))
        zero = n == 0.0
    return n


def sample_first_passage(rng, distance: float) -> FirstPassageSample:
    """First time a standard Brownian motion travels ``distance``."""
    if distance < 0:
        raise ValueError(f"distance must be >= 0, got {distance}")
    if distance == 0:
        return FirstPassageSample(0.0, 0.0)
    n = _nonzero_normal(rng)
    return FirstPassageSample(float(distance), distance * distance / (n * n))


def sample_first_passage_many(rng, distance, size: int | None = None) -> np.ndarray:
    """Vectorised first-passage times; ``distance`` may be a scalar or an array."""
    d = np.asarray(distance, dtype=float)
    if np.any(d < 0):
        raise ValueError("distance must be >= 0")
    if size is None:
        size = d.size
    n = _nonzero_normals(rng, size)
    return d * d / (n * n)


def sample_g_exact(rng, r: float, *, u_power: float = 1.0) -> GSample:
    """One exact draw of (U, I_inf, g) for BES(3) started at ``r``.

    ``u_power`` exists only for mutation testing (U**2 in place of U).
    """
    if not r > 0:
        raise ValueError(f"r must be > 0, got {r}")
    u = rng.draw_uniform01()
    if u_power != 1.0:
        u = u**u_power
    n = _nonzero_normal(rng)
    d = r * (1.0 - u)
    return GSample(u=u, a=r * u, g=d * d / (n * n))


def sample_g_exact_many(rng, r: float, size: int, *, u_power: float = 1.0):
    """Arrays ``(u, a, g)`` of ``size`` exact draws."""
    if not r > 0:
        raise ValueError(f"r must be > 0, got {r}")
    u = np.asarray(rng.draw_uniform01(size), dtype=float)
    if u_power != 1.0:
        u = u**u_power
    n = _nonzero_normals(rng, size)
    d = r * (1.0 - u)
    return u, r * u, d * d / (n * n)
