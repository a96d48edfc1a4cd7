"""Closed-form special-function values used as exact oracles elsewhere.

Volumes are carried as natural logarithms: the unit-ball volume underflows
binary64 a little past n = 340.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

LOG_PI = math.log(math.pi)


class LogReal(float):
    """A float holding ``log(q)`` for some positive quantity ``q``."""

    __slots__ = ()

    @property
    def log_value(self) -> float:
        return float(self)

    def exp(self) -> float:
        return math.exp(self)

    def __repr__(self):
        return f"LogReal({float(self)!r})"


@dataclass(frozen=True)
class SectionConstant:
    n: int
    k: int
    value: float


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0``."""
    x = float(x)
    if not x > 0 or not math.isfinite(x):
        raise DomainError(f"log_gamma needs a positive finite argument, got {x}")
    return math.lgamma(x)


def _check_dim(n, name="n", minimum=1):
    if int(n) != n or n < minimum:
        raise DomainError(f"{name} must be an integer >= {minimum}, got {n}")
    return int(n)


def unit_ball_log_volume(n: int) -> LogReal:
    """``log |B_2^n| = (n/2) log(pi) - log Gamma(n/2 + 1)``."""
    n = _check_dim(n)
    return LogReal(0.5 * n * LOG_PI - math.lgamma(0.5 * n + 1.0))


def sphere_log_surface(n: int) -> LogReal:
    """Log of the (n-1)-dimensional area of S^{n-1} in R^n, i.e. n |B_2^n|."""
    n = _check_dim(n)
    return LogReal(math.log(2.0) + 0.5 * n * LOG_PI - math.lgamma(0.5 * n))


def lp_ball_log_volume(n: int, p: float) -> LogReal:
    """Log-volume of the unit ball of l_p^n, ``2^n Gamma(1+1/p)^n / Gamma(1+n/p)``.

    ``p = inf`` gives the cube [-1, 1]^n.
    """
    n = _check_dim(n)
    if not p >= 1:
        raise DomainError(f"p must be >= 1, got {p}")
    if math.isinf(p):
        return LogReal(n * math.log(2.0))
    return LogReal(n * math.log(2.0) + n * math.lgamma(1.0 + 1.0 / p)
                   - math.lgamma(1.0 + n / p))


def sphere_moment(n: int, p: float) -> float:
    """E|x_1|^p for x uniform on S^{n-1} (normalized measure), valid for p > -1."""
    n = _check_dim(n)
    if not p > -1:
        raise DomainError(f"sphere_moment needs p > -1, got {p}")
    if n == 1:
        return 1.0
    return math.exp(math.lgamma(0.5 * (p + 1)) + math.lgamma(0.5 * n)
                    - 0.5 * LOG_PI - math.lgamma(0.5 * (n + p)))


def section_constant(n: int, k: int) -> SectionConstant:
    """``c_{n,k} = |B_2^n|^{(n-k)/n} / |B_2^{n-k}|``, always in (e^{-k/2}, 1)."""
    n = _check_dim(n, minimum=2)
    if int(k) != k or not 1 <= k < n:
        raise DomainError(f"need 1 <= k < n, got n={n}, k={k}")
    k = int(k)
    log_c = (n - k) / n * unit_ball_log_volume(n) - unit_ball_log_volume(n - k)
    value = math.exp(log_c)
    if not math.exp(-k / 2) < value < 1:
        raise AssertionError(f"c_{{{n},{k}}} = {value} escaped (e^-k/2, 1)")
    return SectionConstant(n, k, value)


def dimension_factor(n: int, k: int) -> float:
    """The factor n/(n-k) appearing in the slicing bound; lies in (1, e^k)."""
    if not 1 <= k < n:
        raise DomainError(f"need 1 <= k < n, got n={n}, k={k}")
    return n / (n - k)
