"""Enclosing ellipsoids and outer volume ratio bounds for L_p subspace balls.

Every origin-symmetric ellipsoid is a generalized k-intersection body for all
k, so any enclosing ellipsoid E gives the upper bound (|E| / |K|)^{1/n} on the
outer volume ratio distance to those classes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bodies import Ellipsoid, LpSubspaceBall, StarBody, lewis_residual
from .errors import ConvergenceError, DegenerateBodyError, DomainError, InvariantViolation, PositionError
from .integrate import volume_polar
from .report import Check, VerificationReport
from .sampling import as_seed, random_orthogonal, sample_sphere, sphere_map, tree_sum
from .special import lp_ball_log_volume, sphere_moment, unit_ball_log_volume


@dataclass(frozen=True)
class MVEEResult:
    ellipsoid: Ellipsoid
    epsilon: float
    iterations: int
    weights: np.ndarray

    @property
    def M(self) -> np.ndarray:
        return self.ellipsoid.M

    def log_volume(self) -> float:
        return self.ellipsoid.log_volume()


def mvee(points, eps: float = 1e-4, max_iter: int = 1_000_000) -> MVEEResult:
    """Minimum-volume origin-centered ellipsoid containing ``±points``.

    Khachiyan's dual coordinate ascent on the weights ``u`` of
    ``X(u) = sum u_i x_i x_i^T`` with Wolfe away steps (Todd and Yildirim).
    Stops once ``max_i x_i^T X^{-1} x_i <= (1 + eps) n``; the returned form
    ``M = X^{-1} / max_i(...)`` contains every point, and its volume is within
    a factor ``(1 + eps)^{n/2}`` of the optimum. Because the symmetric problem
    is already centered, no lifting to R^{n+1} is needed.
    """
    x = np.array(points, dtype=float, ndmin=2)
    N, n = x.shape
    if not 0 < eps < 1:
        raise DomainError(f"eps must be in (0, 1), got {eps}")
    if np.linalg.matrix_rank(x) < n:
        raise DegenerateBodyError("points do not span R^n")

    u = np.full(N, 1.0 / N)

    def refresh():
        xinv = np.linalg.inv((x.T * u) @ x)
        return xinv, np.einsum("ij,jk,ik->i", x, xinv, x)

    xinv, kappa = refresh()
    it = 0
    while True:
        j = int(np.argmax(kappa))
        kmax = kappa[j]
        if kmax <= (1.0 + eps) * n:
            break
        if it >= max_iter:
            raise ConvergenceError(f"mvee did not converge in {max_iter} iterations",
                                   residual=kmax / n - 1.0)
        support = np.flatnonzero(u > 0)
        a = support[np.argmin(kappa[support])]
        if n - kappa[a] > kmax - n:
            j = int(a)
            # away step: beta < 0, clipped so u_j stays >= 0; for kappa_j <= 1 the
            # objective decreases all the way, so drop the point entirely
            drop = -u[j] / (1.0 - u[j])
            beta = drop if kappa[j] <= 1.0 else max((kappa[j] / n - 1.0) / (kappa[j] - 1.0), drop)
        else:
            beta = (kmax / n - 1.0) / (kmax - 1.0)
        kj = kappa[j]
        # X' = (1 - beta) X + beta x_j x_j^T, inverse by Sherman-Morrison
        t = beta / (1.0 - beta)
        y = xinv @ x[j]
        z = x @ y
        denom = 1.0 + t * kj
        xinv = (xinv - (t / denom) * np.outer(y, y)) / (1.0 - beta)
        kappa = (kappa - (t / denom) * z * z) / (1.0 - beta)
        u *= 1.0 - beta
        u[j] += beta
        if u[j] < 1e-300:
            u[j] = 0.0
        it += 1
        if it % 1000 == 0:
            xinv, kappa = refresh()
    xinv, kappa = refresh()
    kmax = float(np.max(kappa))
    M = xinv / kmax
    return MVEEResult(Ellipsoid(0.5 * (M + M.T)), kmax / n - 1.0, it, u.copy())


def loewner_ovr_details(body: StarBody, boundary_count: int | None = None, eps: float = 1e-3,
                        volume_count: int = 200_000, seed=0, probes: int = 100_000) -> dict:
    """Löwner-ellipsoid upper bound on the outer volume ratio, with its pieces."""
    seed = as_seed(seed)
    n = body.n
    if boundary_count is None:
        boundary_count = max(1000, 50 * n * n)
    theta = sample_sphere(n, boundary_count, seed.derive("ovr/boundary"))
    pts = theta * body.radial(theta)[:, None]
    res = mvee(pts, eps)
    # probe-based certificate: grow E until a fresh direction sample lies inside
    M = res.M
    probe_max = sphere_map(lambda t: np.sqrt(np.einsum("ij,ij->i", t @ M, t)) * body.radial(t),
                           n, probes, seed.derive("ovr/probe"))
    inflate = max(1.0, float(np.max(probe_max)))
    log_e = res.log_volume() + n * math.log(inflate)
    vol = volume_polar(body, volume_count, seed.derive("ovr/volume"))
    ratio = math.exp((log_e - vol.log_value) / n)
    return {"ovr": ratio, "ovr_se": ratio * vol.rel_error / n, "inflation": inflate,
            "mvee_epsilon": res.epsilon, "mvee_iterations": res.iterations,
            "log_ellipsoid_volume": log_e, "log_volume": vol.log_value,
            "log_volume_se": vol.rel_error, "M": (M / inflate ** 2)}


def loewner_ovr(body: StarBody, boundary_count: int | None = None, eps: float = 1e-3,
                volume_count: int = 200_000, seed=0) -> float:
    """``(|E| / |K|)^{1/n}`` for an (inflated) Löwner ellipsoid E of K."""
    return loewner_ovr_details(body, boundary_count, eps, volume_count, seed)["ovr"]


# -- the L_p subspace ball chain --------------------------------------------------

@dataclass(frozen=True)
class Prop2Report:
    p: float
    n: int
    k: int
    log_volume: float
    log_volume_se: float
    containment_radius: float
    R: float
    R_over_sqrt_p: float
    seed: int | None = None
    samples: int | None = None
    max_radial_ratio: float | None = None

    def to_dict(self):
        return dict(p=self.p, n=self.n, k=self.k, log_volume=self.log_volume,
                    log_volume_se=self.log_volume_se, containment_radius=self.containment_radius,
                    R=self.R, R_over_sqrt_p=self.R_over_sqrt_p, seed=self.seed,
                    samples=self.samples, max_radial_ratio=self.max_radial_ratio)


def containment_radius(n: int, p: float) -> float:
    """``n^{1/2 - 1/p}``: the Euclidean ball of this radius contains K in Lewis position."""
    return n ** (0.5 - 1.0 / p)


def _ratio(n, p, log_volume):
    log_ball = n * math.log(containment_radius(n, p)) + unit_ball_log_volume(n)
    return math.exp((log_ball - log_volume) / n)


def _check_p_k(p, n, k):
    if not p > 2:
        raise DomainError(f"p must exceed 2, got {p}")
    if not 1 <= k < n:
        raise DomainError(f"need 1 <= k < n, got n={n}, k={k}")


def prop2_check(p: float, n: int, k: int) -> Prop2Report:
    """Closed-form ratio for the standard l_p^n ball (which is in Lewis position)."""
    _check_p_k(p, n, k)
    log_vol = lp_ball_log_volume(n, p)
    R = _ratio(n, p, log_vol)
    return Prop2Report(p, n, k, float(log_vol), 0.0, containment_radius(n, p), R, R / math.sqrt(p))


def _require_lewis(body, tol=1e-8):
    if not isinstance(body, LpSubspaceBall):
        raise DomainError("expected an LpSubspaceBall")
    res = lewis_residual(body)
    if res >= tol:
        raise PositionError(f"body is not in Lewis position (residual {res:.3g})")
    if not body.p > 2:
        raise DomainError(f"p must exceed 2, got {body.p}")


def max_radial_ratio(body: LpSubspaceBall, count: int, seed) -> float:
    """Sampled sup of ``rho_K(theta) / n^{1/2 - 1/p}``."""
    r = containment_radius(body.n, body.p)
    vals = sphere_map(lambda t: body.radial(t) / r, body.n, count, as_seed(seed))
    return float(np.max(vals))


def prop2_empirical(body: LpSubspaceBall, k: int, volume_count: int = 200_000, seed=0,
                    containment_count: int = 100_000) -> Prop2Report:
    """Monte-Carlo ratio for a body in Lewis position, after checking containment."""
    _require_lewis(body)
    _check_p_k(body.p, body.n, k)
    seed = as_seed(seed)
    ratio = max_radial_ratio(body, containment_count, seed.derive("prop2/containment"))
    if ratio > 1.0 + 1e-9:
        raise InvariantViolation(f"body escapes n^(1/2-1/p) B_2^n: sup ratio {ratio}")
    vol = volume_polar(body, volume_count, seed.derive("prop2/volume"))
    R = _ratio(body.n, body.p, vol.log_value)
    return Prop2Report(body.p, body.n, k, vol.log_value, vol.rel_error,
                       containment_radius(body.n, body.p), R, R / math.sqrt(body.p),
                       seed.seed, volume_count, ratio)


def lewis_union_body(n: int, p: float, bases: int, seed) -> LpSubspaceBall:
    """Union of ``bases`` Haar-rotated orthonormal bases with weights 1/bases.

    ``sum_i c_i u_i u_i^T = (1/bases) sum_j Q_j Q_j^T = I``, so the body is in
    Lewis position by construction.
    """
    seed = as_seed(seed)
    dirs = np.vstack([random_orthogonal(n, seed.derive(f"lewis/{j}")).T for j in range(bases)])
    return LpSubspaceBall(p, dirs, np.full(len(dirs), 1.0 / bases))


def moment_monotonicity(body: StarBody, p: float, count: int, seed, exact_moment=None) -> Check:
    """``(int ||x||^p dsigma)^{-1/p} <= (int ||x||^{-n} dsigma)^{1/n}``.

    The right side equals ``(|K| / |B_2^n|)^{1/n}``. When ``exact_moment`` is
    given it replaces the Monte-Carlo p-th moment.
    """
    seed = as_seed(seed)
    n = body.n
    if exact_moment is None:
        g = sphere_map(lambda t: body.gauge(t) ** p, n, count, seed.derive("mono/p"))
        exact_moment = tree_sum(g) / g.size
    left = exact_moment ** (-1.0 / p)
    vol = volume_polar(body, count, seed.derive("mono/volume"))
    right = math.exp((vol.log_value - unit_ball_log_volume(n)) / n)
    se = right * vol.rel_error / n
    ok = left <= right + 3.0 * se or left <= right * (1.0 + 1e-12)
    return Check("c_monotonicity", left, right, se, ok, note=f"margin={right - left:.6g}")


def volume_lower_bound_check(body: LpSubspaceBall, count: int = 200_000, seed=0) -> VerificationReport:
    """Walk the volume lower-bound argument for a body in Lewis position.

    (a) Fubini: ``int ||x||^p dsigma = E|x_1|^p * nu_total`` (MC cross-check).
    (b) Trace of the second Lewis identity: ``nu_total = n``.
    (c) Moment monotonicity between the p-th and (-n)-th moments of the gauge.
    (d) The resulting bound ``|K|^{1/n} >= |B_2^n|^{1/n} (n E|x_1|^p)^{-1/p}``,
        plus the empirical constants in its Stirling-simplified forms.
    """
    _require_lewis(body)
    seed = as_seed(seed)
    n, p = body.n, body.p
    moment = sphere_moment(n, p)
    nu = body.nu_total
    checks = []

    exact = moment * nu
    g = sphere_map(lambda t: body.gauge(t) ** p, n, count, seed.derive("chain/fubini"))
    mc = tree_sum(g) / g.size
    se = float(np.std(g, ddof=1)) / math.sqrt(g.size)
    checks.append(Check("a_fubini", mc, exact, se, abs(mc - exact) <= 3.0 * se))

    checks.append(Check("b_trace", nu, float(n), 0.0, abs(nu - n) <= 1e-9 * n))

    mono = moment_monotonicity(body, p, count, seed, exact_moment=exact)
    checks.append(mono)

    vol = volume_polar(body, count, seed.derive("mono/volume"))
    vol_root = math.exp(vol.log_value / n)
    vol_root_se = vol_root * vol.rel_error / n
    bound = math.exp(unit_ball_log_volume(n) / n) * exact ** (-1.0 / p)
    checks.append(Check("d_volume_bound", bound, vol_root, vol_root_se,
                        bound <= vol_root + 3.0 * vol_root_se))

    # constants hidden in the asymptotic forms of the argument
    stirling_C = moment ** (2.0 / p) * (n + p) / p
    c_simple = vol_root / (n ** (-1.0 / p) * math.sqrt((n + p) / (n * p)))
    c_ball = vol_root / (n ** (0.5 - 1.0 / p) / math.sqrt(p) * math.exp(unit_ball_log_volume(n) / n))
    return VerificationReport(
        name="volume_lower_bound",
        checks=checks,
        seed=seed.to_dict(),
        samples={"sphere": count},
        extra={"n": n, "p": p, "nu_total": nu, "sphere_moment": moment,
               "stirling_C": stirling_C, "c_empirical": c_simple, "c_empirical_ball_form": c_ball},
    )
