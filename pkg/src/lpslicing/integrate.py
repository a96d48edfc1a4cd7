"""Monte-Carlo volumes and measures by spherical-radial decomposition.

For a star body K, a radial density f(x) = g(|x|) and an m-dimensional
subspace H (H = R^n for the full body),

    mu(K ∩ H) = |B_2^m| * E_theta[ m * int_0^{rho_K(theta)} r^{m-1} g(r) dr ],

with theta uniform on S^{m-1} ∩ H. Densities supply the bracketed radial mass
in log form, so the only Monte-Carlo error is the average over directions.
With g = 1 the radial mass is rho^m and this is the polar volume formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate as _quad
from scipy import special as _sp
from scipy.linalg import expm

from .bodies import StarBody
from .errors import ConfigError, DataError, DomainError
from .sampling import (SeedSpec, SubspaceFrame, as_seed, sample_grassmann,
                       sample_sphere, sphere_map, tree_sum)
from .special import unit_ball_log_volume


@dataclass(frozen=True)
class Estimate:
    """A Monte-Carlo estimate with its provenance.

    ``log_value`` is set for quantities computed in log space (volumes and
    measures); ``value`` is then ``exp(log_value)``.
    """

    value: float
    std_error: float
    samples: int
    seed: SeedSpec = field(default_factory=SeedSpec)
    log_value: float | None = None

    @property
    def rel_error(self) -> float:
        return self.std_error / abs(self.value) if self.value else math.inf

    def to_dict(self):
        return {"value": self.value, "std_error": self.std_error, "samples": self.samples,
                "log_value": self.log_value, **self.seed.to_dict()}


def log_mean_exp(logs) -> tuple[float, float]:
    """Return ``(log(mean(exp(logs))), relative standard error of that mean)``."""
    logs = np.asarray(logs, dtype=float)
    if logs.size == 0:
        raise DomainError("empty sample")
    top = float(np.max(logs))
    if not math.isfinite(top):
        raise DataError("all radial masses vanish or are non-finite")
    w = np.exp(logs - top)
    mean = tree_sum(w) / w.size
    if w.size > 1:
        var = tree_sum((w - mean) ** 2) / (w.size - 1)
        rel = math.sqrt(var / w.size) / mean
    else:
        rel = math.inf
    return top + math.log(mean), rel


# -- densities ----------------------------------------------------------------

class Density:
    """Even continuous density f(x) = g(|x|) on R^n."""

    kind = "custom"

    def profile(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.profile(np.linalg.norm(x, axis=-1))

    def log_radial_mass(self, log_rho: np.ndarray, m: int) -> np.ndarray:
        """``log(m * int_0^rho r^(m-1) g(r) dr)`` for each entry of ``log_rho``."""
        raise NotImplementedError

    def to_spec(self) -> dict:
        raise NotImplementedError

    @property
    def label(self) -> str:
        spec = self.to_spec()
        params = ",".join(f"{k}={v}" for k, v in spec.items() if k != "kind")
        return f"{spec['kind']}({params})" if params else spec["kind"]


class Uniform(Density):
    kind = "uniform"

    def profile(self, r):
        return np.ones_like(np.asarray(r, dtype=float))

    def log_radial_mass(self, log_rho, m):
        return m * log_rho

    def to_spec(self):
        return {"kind": "uniform"}


class Gaussian(Density):
    """Unnormalized ``exp(-|x|^2 / (2 sigma^2))``."""

    kind = "gaussian"

    def __init__(self, sigma: float = 1.0):
        if not sigma > 0 or not math.isfinite(sigma):
            raise DomainError(f"gaussian sigma must be positive, got {sigma}")
        self.sigma = float(sigma)

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        return np.exp(-0.5 * (r / self.sigma) ** 2)

    def log_radial_mass(self, log_rho, m):
        # m int_0^rho r^(m-1) e^(-r^2/2s^2) dr = s^m 2^(m/2) Gamma(m/2 + 1) P(m/2, rho^2/2s^2)
        x = 0.5 * np.exp(2.0 * log_rho) / self.sigma ** 2
        with np.errstate(divide="ignore"):
            log_p = np.log(_sp.gammainc(0.5 * m, x))
        return (m * math.log(self.sigma) + 0.5 * m * math.log(2.0)
                + math.lgamma(0.5 * m + 1.0) + log_p)

    def to_spec(self):
        return {"kind": "gaussian", "sigma": self.sigma}


class RadialPower(Density):
    """``|x|^alpha`` with ``alpha >= 0``."""

    kind = "radial_power"

    def __init__(self, alpha: float):
        if not alpha >= 0 or not math.isfinite(alpha):
            raise DomainError(f"radial_power alpha must be >= 0, got {alpha}")
        self.alpha = float(alpha)

    def profile(self, r):
        return np.asarray(r, dtype=float) ** self.alpha

    def log_radial_mass(self, log_rho, m):
        return (m + self.alpha) * log_rho + math.log(m / (m + self.alpha))

    def to_spec(self):
        return {"kind": "radial_power", "alpha": self.alpha}


class RadialProfile(Density):
    """Arbitrary continuous profile ``g``; radial integrals by adaptive quadrature."""

    kind = "radial_profile"

    def __init__(self, g: Callable[[float], float], continuous: bool = True, name="custom"):
        if not continuous:
            raise ConfigError("discontinuous densities are not supported")
        self.g = g
        self.name = name

    def _checked(self, r):
        v = float(self.g(r))
        if not math.isfinite(v) or v < 0:
            raise DataError(f"density profile returned {v} at r={r}")
        return v

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        return np.vectorize(self._checked, otypes=[float])(r)

    def log_radial_mass(self, log_rho, m):
        out = np.empty_like(log_rho)
        for i, lr in enumerate(log_rho):
            rho = math.exp(lr)
            val, _ = _quad.quad(lambda r: r ** (m - 1) * self._checked(r), 0.0, rho,
                                epsrel=1e-9, epsabs=0.0, limit=200)
            out[i] = math.log(m * val) if val > 0 else -math.inf
        return out

    def to_spec(self):
        return {"kind": "radial_profile", "name": self.name}


UNIFORM = Uniform()

_DENSITY_KEYS = {"uniform": set(), "gaussian": {"sigma"}, "radial_power": {"alpha"}}


def density_from_spec(spec: dict) -> Density:
    """Parse the JSON density schema; unknown fields are rejected."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("density spec must be an object with a 'kind' field")
    kind = spec["kind"]
    if kind not in _DENSITY_KEYS:
        raise ConfigError(f"unknown density kind {kind!r}")
    keys = set(spec) - {"kind"}
    if keys != _DENSITY_KEYS[kind]:
        raise ConfigError(f"{kind} density takes fields {sorted(_DENSITY_KEYS[kind])}, got {sorted(keys)}")
    for key in keys:
        if isinstance(spec[key], bool) or not isinstance(spec[key], (int, float)):
            raise ConfigError(f"{kind}.{key} must be a number")
    if kind == "uniform":
        return UNIFORM
    if kind == "gaussian":
        return Gaussian(spec["sigma"])
    return RadialPower(spec["alpha"])


# -- estimators ---------------------------------------------------------------

def _radial_estimate(body, density, basis, count, seed) -> Estimate:
    seed = as_seed(seed)
    m = body.n if basis is None else basis.shape[1]

    def per_sample(theta):
        with np.errstate(divide="ignore"):
            log_rho = np.log(body.radial(theta))
        out = density.log_radial_mass(log_rho, m)
        if np.any(np.isnan(out)) or np.any(out == np.inf):
            raise DataError("non-finite radial mass")
        return out

    logs = sphere_map(per_sample, body.n, count, seed, basis=basis)
    lme, rel = log_mean_exp(logs)
    log_value = unit_ball_log_volume(m) + lme
    value = math.exp(log_value)
    return Estimate(value, value * rel, int(count), seed, log_value)


def measure_body(body: StarBody, density: Density, count: int, seed) -> Estimate:
    """mu(K) = int_K f."""
    return _radial_estimate(body, density, None, count, seed)


def volume_polar(body: StarBody, count: int, seed) -> Estimate:
    """|K| = |B_2^n| E[rho_K^n]; the uniform-density case of :func:`measure_body`."""
    return measure_body(body, UNIFORM, count, seed)


def _check_frame(body, frame):
    if frame.n != body.n:
        raise DomainError(f"frame lives in R^{frame.n}, body in R^{body.n}")


def measure_section(body: StarBody, density: Density, frame: SubspaceFrame,
                    count: int, seed) -> Estimate:
    """mu(K ∩ H), an m-dimensional integral for H = span(frame)."""
    _check_frame(body, frame)
    return _radial_estimate(body, density, frame.basis, count, seed)


def section_volume(body: StarBody, frame: SubspaceFrame, count: int, seed) -> Estimate:
    """m-dimensional volume of K ∩ H."""
    return measure_section(body, UNIFORM, frame, count, seed)


class SectionMax(NamedTuple):
    frame: SubspaceFrame
    estimate: Estimate
    restart_values: tuple


def _skew(rng, n):
    a = rng.standard_normal((n, n))
    return (a - a.T) / math.sqrt(2.0 * n)


def max_section_measure(body: StarBody, density: Density, k: int, restarts: int = 6,
                        local_steps: int = 30, count: int = 100_000, seed=0,
                        search_count: int = 2048) -> SectionMax:
    """Heuristic max of mu(K ∩ H) over H in Gr_{n-k}.

    Each restart starts from a Haar-random frame and hill-climbs by rotating
    it with ``expm(step * A)`` for random skew ``A``; the step doubles after a
    success (up to its starting size) and shrinks by 0.6 after a failure. The search
    compares frames on one shared set of ``search_count`` directions, so
    differences between frames are not drowned in sampling noise. The winning
    frame is then re-estimated with ``count`` fresh samples. No global
    optimality is claimed.
    """
    n = body.n
    if not 1 <= k < n:
        raise DomainError(f"need 1 <= k < n, got n={n}, k={k}")
    if restarts < 1:
        raise DomainError("restarts must be >= 1")
    seed = as_seed(seed)
    m = n - k
    omega = sample_sphere(m, search_count, seed.derive("search"))

    def objective(basis):
        with np.errstate(divide="ignore"):
            log_rho = np.log(body.radial(omega @ basis.T))
        return log_mean_exp(density.log_radial_mass(log_rho, m))[0]

    best_val, best_basis, values = -math.inf, None, []
    for r in range(restarts):
        basis = sample_grassmann(n, m, seed.derive(f"restart/{r}")).basis
        val = objective(basis)
        rng = seed.derive(f"walk/{r}").generator()
        step = 0.5
        for _ in range(local_steps):
            cand = expm(step * _skew(rng, n)) @ basis
            cval = objective(cand)
            if cval > val:
                basis, val = cand, cval
                step = min(2.0 * step, 0.5)
            else:
                step *= 0.6
        values.append(math.exp(unit_ball_log_volume(m) + val))
        if val > best_val:
            best_val, best_basis = val, basis
    q, rr = np.linalg.qr(best_basis)
    frame = SubspaceFrame(q * np.where(np.diag(rr) < 0, -1.0, 1.0))
    est = measure_section(body, density, frame, count, seed.derive("final"))
    return SectionMax(frame, est, tuple(values))
