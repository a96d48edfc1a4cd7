"""Spherical Radon transforms, intersection bodies and k-radial sums."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bodies import RadialClosure, StarBody, euclidean_ball
from .errors import DomainError
from .integrate import Estimate, section_volume
from .report import Check, VerificationReport
from .sampling import (SubspaceFrame, as_seed, complement_frame, random_orthogonal,
                       sample_sphere, sphere_map, tree_sum)
from .special import sphere_log_surface


@dataclass(frozen=True)
class SphereFunction:
    """A function on S^{n-1}, vectorized over rows of an (N, n) array."""

    n: int
    fn: Callable[[np.ndarray], np.ndarray]
    even: bool = False

    def __post_init__(self):
        if self.even:
            probes = sample_sphere(self.n, 64, as_seed(0xE7E4).derive("even-probe"))
            a, b = self(probes), self(-probes)
            if np.any(np.abs(a - b) > 1e-10 * np.maximum(1.0, np.abs(a))):
                raise DomainError("function flagged even but g(-x) != g(x)")

    def __call__(self, theta):
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        return np.asarray(self.fn(theta), dtype=float)


def radial_power_function(body: StarBody, power: float) -> SphereFunction:
    """``theta -> rho_K(theta)^power``; the integrand behind section volumes."""
    return SphereFunction(body.n, lambda t: body.radial(t) ** power, even=True)


def _mean_estimate(values, log_scale, seed) -> Estimate:
    n = values.size
    mean = tree_sum(values) / n
    sd = math.sqrt(tree_sum((values - mean) ** 2) / (n - 1)) if n > 1 else math.inf
    scale = math.exp(log_scale)
    return Estimate(scale * mean, scale * sd / math.sqrt(n), n, seed)


def radon_nk(g: SphereFunction, frame: SubspaceFrame, count: int, seed) -> Estimate:
    """``R_{n-k} g(H) = int_{S^{n-1} ∩ H} g``, H spanned by ``frame`` (dim n-k)."""
    if frame.n != g.n:
        raise DomainError(f"frame lives in R^{frame.n}, function on S^{g.n - 1}")
    if not 1 <= frame.m <= g.n - 1:
        raise DomainError(f"subspace dimension must be in [1, n-1], got {frame.m}")
    seed = as_seed(seed)
    values = sphere_map(g, g.n, count, seed, basis=frame.basis)
    return _mean_estimate(values, sphere_log_surface(frame.m), seed)


def radon_transform(g: SphereFunction, xi, count: int, seed) -> Estimate:
    """``R g(xi) = int_{S^{n-1} ∩ xi^perp} g``."""
    if g.n < 2:
        raise DomainError("the spherical Radon transform needs n >= 2")
    xi = np.asarray(xi, dtype=float)
    if abs(np.linalg.norm(xi) - 1.0) > 1e-9:
        raise DomainError("xi must be a unit vector")
    return radon_nk(g, complement_frame(xi), count, seed)


def _canonical(theta):
    nz = np.flatnonzero(np.abs(theta) > 1e-12)
    if nz.size and theta[nz[0]] < 0:
        return -theta
    return theta


class IntersectionBody(RadialClosure):
    """The star body with ``rho(xi) = |L ∩ xi^perp|``.

    Each radial value is a Monte-Carlo section volume of ``L`` with the same
    seed, memoized on the sign-canonicalized direction quantized at 1e-12.
    """

    def __init__(self, L: StarBody, count: int = 100_000, seed=0):
        if L.n < 2:
            raise DomainError("intersection bodies need n >= 2")
        self.base = L
        self.count = int(count)
        self.seed = as_seed(seed)
        self._cache = {}
        self._lock = threading.Lock()
        super().__init__(L.n, self._radial_values, label="intersection_body")

    def _one(self, theta):
        theta = _canonical(theta)
        key = tuple(np.round(theta * 1e12).astype(np.int64))
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        value = section_volume(self.base, complement_frame(theta), self.count, self.seed).value
        with self._lock:
            # racing writers compute the identical value from the same seed
            self._cache.setdefault(key, value)
        return value

    def _radial_values(self, theta):
        return np.array([self._one(t) for t in theta])


def intersection_body_of(L: StarBody, count: int = 100_000, seed=0) -> IntersectionBody:
    return IntersectionBody(L, count, seed)


def _power_sum(bodies, k):
    n = bodies[0].n

    def rho(theta):
        stack = np.sort(np.stack([b.radial(theta) ** k for b in bodies]), axis=0)
        return stack.sum(axis=0) ** (1.0 / k)

    return RadialClosure(n, rho, label=f"{k}-radial_sum")


def k_radial_sum(K: StarBody, L: StarBody, k: float) -> RadialClosure:
    """``K +_k L`` with ``rho^k = rho_K^k + rho_L^k``."""
    if K.n != L.n:
        raise DomainError(f"dimension mismatch: {K.n} vs {L.n}")
    if not k >= 1:
        raise DomainError(f"k must be >= 1, got {k}")
    return _power_sum([K, L], k)


def bp_body_from_ellipsoids(ellipsoids, k: float) -> RadialClosure:
    """k-radial sum of origin-symmetric ellipsoids, a member of BP_k^n by construction.

    Summands are sorted per direction before adding so the result does not
    depend on the input order, not even in the last bit.
    """
    ellipsoids = list(ellipsoids)
    if not ellipsoids:
        raise DomainError("need at least one ellipsoid")
    if len({e.n for e in ellipsoids}) != 1:
        raise DomainError("ellipsoids live in different dimensions")
    if not k >= 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if any(e.as_ellipsoid() is None for e in ellipsoids):
        raise DomainError("bp_body_from_ellipsoids accepts ellipsoids only")
    return _power_sum(ellipsoids, k)


def genint_identity_check(n: int, k: int, g: SphereFunction, count: int = 200_000,
                          seed=0, frames: int = 64) -> VerificationReport:
    """Both sides of the generalized k-intersection body identity for K = B_2^n.

    The measure on Gr_{n-k} is uniform on ``frames`` Haar rotations Q, each
    contributing the n subspaces spanned by cyclic windows of n-k consecutive
    columns of Q; every subspace gets mass |S^{n-1}| / (frames * n * |S^{n-k-1}|).
    Each window is Haar distributed, so the right side is unbiased, and within
    one rotation the windows cover every direction equally often, which makes
    the identity exact for g = 1 and for quadratics. The right side's error bar
    is the spread of the per-rotation averages.
    """
    if n < 2 or not 1 <= k < n:
        raise DomainError(f"need n >= 2 and 1 <= k < n, got n={n}, k={k}")
    if g.n != n:
        raise DomainError(f"function lives on S^{g.n - 1}, expected S^{n - 1}")
    if not g.even:
        raise DomainError("the identity is checked for even functions only")
    seed = as_seed(seed)
    ball = euclidean_ball(n)
    m = n - k
    log_surface = sphere_log_surface(n)

    lhs_seed = seed.derive("genint/lhs")
    lhs_vals = sphere_map(lambda t: ball.gauge(t) ** (-k) * g(t), n, count, lhs_seed)
    lhs = _mean_estimate(lhs_vals, log_surface, lhs_seed)

    per_frame = max(256, count // (frames * n))
    weight = math.exp(log_surface - sphere_log_surface(m)) / frames
    r_vals = []
    for j in range(frames):
        q = random_orthogonal(n, seed.derive(f"genint/frame/{j}"))
        windows = [SubspaceFrame(q[:, [(i + t) % n for t in range(m)]]) for i in range(n)]
        vals = [radon_nk(g, w, per_frame, seed.derive(f"genint/inner/{j}/{i}")).value
                for i, w in enumerate(windows)]
        r_vals.append(tree_sum(vals) / n)
    r_vals = np.array(r_vals)
    rhs_value = weight * tree_sum(r_vals)
    rhs_se = weight * frames * float(np.std(r_vals, ddof=1)) / math.sqrt(frames)

    joint = math.hypot(lhs.std_error, rhs_se)
    diff = abs(lhs.value - rhs_value)
    ok = diff <= 3.0 * joint or diff <= 1e-12 * abs(lhs.value)
    rel = diff / abs(lhs.value) if lhs.value else math.inf
    return VerificationReport(
        name="genint_identity",
        checks=[Check("identity", lhs.value, rhs_value, joint, ok)],
        seed=seed.to_dict(),
        samples={"sphere": count, "rotations": frames, "subspaces": frames * n, "per_frame": per_frame},
        extra={"n": n, "k": k, "relative_discrepancy": rel,
               "lhs_se": lhs.std_error, "rhs_se": rhs_se},
    )
