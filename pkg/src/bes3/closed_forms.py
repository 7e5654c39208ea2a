"""Closed-form laws for BES(3) from r > 0 and its last-hitting time g.

* ultimate infimum I_inf is uniform on [0, r]
* Azema supermartingale Z_t = P(g > t | F_t) = I_t / R_t
* E[exp(-lam g)] = (1 - exp(-sqrt(2 lam) r)) / (sqrt(2 lam) r)
* density of g:  p(t) = (1 - exp(-r^2 / 2t)) / (r sqrt(2 pi t))
* Brownian first passage to a: |a| exp(-a^2 / 2t) / sqrt(2 pi t^3)

Integrals over t use the substitution t = v**2, which turns the 1/sqrt(t)
endpoint singularity of p into a bounded integrand and leaves a 1/v**2 tail
that QUADPACK's infinite-range rule handles directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from scipy import integrate, special

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class DomainError(ValueError):
    """Argument outside the domain of a closed-form law."""


class QuadratureError(ArithmeticError):
    def __init__(self, message, value, error):
        super().__init__(f"{message} (value={value!r}, error estimate={error!r})")
        self.value = value
        self.error = error


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


class QuadResult(NamedTuple):
    value: float
    error: float


DEFAULT_QUAD = QuadratureSpec()


def _quad(f, lo, hi, quad: QuadratureSpec) -> QuadResult:
    # full_output appends a message only when QUADPACK reports ier > 0
    value, error, _info, *message = integrate.quad(
        f, lo, hi,
        epsabs=quad.abs_tol, epsrel=quad.rel_tol, limit=quad.max_subdivisions,
        full_output=1,
    )
    tol = max(quad.abs_tol, quad.rel_tol * abs(value))
    if not math.isfinite(value) or (message and error > tol):
        raise QuadratureError("quadrature did not converge", value, error)
    return QuadResult(value, error)


def _check_r(r):
    if not r > 0:
        raise DomainError(f"start level r must be > 0, got {r}")


def hitting_density(t: float, a: float) -> float:
    """Density at t of the first time a Brownian motion from 0 reaches ``a``.

    For a = 0 the law is a point mass at 0, so the density is 0 for t > 0.
    """
    if not t > 0:
        raise DomainError(f"t must be > 0, got {t}")
    a = abs(a)
    if a == 0:
        return 0.0
    return a * math.exp(-a * a / (2.0 * t)) / (_SQRT_2PI * t * math.sqrt(t))


def hitting_cdf(t: float, a: float) -> float:
    """P(T_a <= t) = erfc(|a| / sqrt(2t))."""
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    a = abs(a)
    if a == 0:
        return 1.0
    if t == 0:
        return 0.0
    return float(special.erfc(a / math.sqrt(2.0 * t)))


def g_density(t: float, r: float) -> float:
    if not t > 0:
        raise DomainError(f"t must be > 0, got {t}")
    _check_r(r)
    return -math.expm1(-r * r / (2.0 * t)) / (r * _SQRT_2PI * math.sqrt(t))


def _g_density_v(v: float, r: float) -> float:
    # p(v^2) * 2v, with its limit 2 / (r sqrt(2 pi)) at v = 0
    if v == 0.0:
        return 2.0 / (r * _SQRT_2PI)
    return -2.0 * math.expm1(-r * r / (2.0 * v * v)) / (r * _SQRT_2PI)


def g_cdf(t: float, r: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """P(g <= t) by quadrature of the density."""
    _check_r(r)
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    if t == 0:
        return 0.0
    upper = math.sqrt(t)
    # the integrand changes scale at v ~ r; split there so wide ranges stay accurate
    knee = min(upper, 4.0 * r)
    res = _quad(lambda v: _g_density_v(v, r), 0.0, knee, quad)
    value = res.value
    if upper > knee:
        value += _quad(lambda v: _g_density_v(v, r), knee, upper, quad).value
    return min(1.0, max(0.0, value))


def g_laplace(lam: float, r: float) -> float:
    """E[exp(-lam g)] in closed form."""
    _check_r(r)
    if lam < 0:
        raise DomainError(f"lambda must be >= 0, got {lam}")
    x = math.sqrt(2.0 * lam) * r
    if x < 1e-8:
        return 1.0 - x / 2.0 + x * x / 6.0
    return -math.expm1(-x) / x


def g_laplace_numeric(lam: float, r: float, quad: QuadratureSpec = DEFAULT_QUAD) -> QuadResult:
    """Integral of exp(-lam t) p(t) over (0, inf), with its error estimate."""
    _check_r(r)
    if lam < 0:
        raise DomainError(f"lambda must be >= 0, got {lam}")

    def f(v):
        return math.exp(-lam * v * v) * _g_density_v(v, r)

    knee = 4.0 * r
    head = _quad(f, 0.0, knee, quad)
    tail = _quad(f, knee, math.inf, quad)
    return QuadResult(head.value + tail.value, head.error + tail.error)


def azema_Z(i_t: float, r_t: float) -> float:
    """Z_t = I_t / R_t."""
    if not (i_t > 0 and r_t > 0):
        raise DomainError(f"I_t and R_t must be > 0, got {i_t}, {r_t}")
    if i_t > r_t:
        raise DomainError(f"running infimum {i_t} exceeds current value {r_t}")
    return i_t / r_t


def ultimate_inf_cdf(x: float, r: float) -> float:
    """P(I_inf <= x) for I_inf uniform on [0, r]."""
    _check_r(r)
    return min(1.0, max(0.0, x / r))


def g_tail_bound(t: float, r: float) -> float:
    """Upper bound r / sqrt(2 pi t) on P(g > t), used as a finite-horizon allowance."""
    _check_r(r)
    if not t > 0:
        raise DomainError(f"t must be > 0, got {t}")
    return r / math.sqrt(2.0 * math.pi * t)


def density_mass(density, upper: float = math.inf, quad: QuadratureSpec = DEFAULT_QUAD,
                 scale: float = 1.0) -> QuadResult:
    """Integral of ``density(t)`` over (0, upper) via t = v**2.

    ``scale`` is the time scale where the integrand turns over; the range is
    split at ``4 sqrt(scale)`` in v.
    """
    def f(v):
        return 0.0 if v == 0.0 else 2.0 * v * density(v * v)

    knee = 4.0 * math.sqrt(scale)
    vmax = math.sqrt(upper) if math.isfinite(upper) else math.inf
    if vmax <= knee:
        return _quad(f, 0.0, vmax, quad)
    head = _quad(f, 0.0, knee, quad)
    tail = _quad(f, knee, vmax, quad)
    return QuadResult(head.value + tail.value, head.error + tail.error)
