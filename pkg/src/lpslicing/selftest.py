"""Fast invariant suite behind ``lpslicing selftest`` (a few seconds on one core)."""

from __future__ import annotations

import itertools
import math

import numpy as np

from .bodies import euclidean_ball, lewis_residual, lp_ball
from .integrate import UNIFORM, Gaussian, measure_body, section_volume, volume_polar
from .ovr import lewis_union_body, mvee, prop2_check
from .radon import SphereFunction, genint_identity_check, k_radial_sum, radial_power_function, radon_transform
from .sampling import SeedSpec, complement_frame, sample_grassmann, sample_sphere
from .slicing import verify_prop1, Counts
from .special import dimension_factor, section_constant, sphere_moment, lp_ball_log_volume


def _checks(seed):
    s = SeedSpec(seed)

    def constants():
        return all(math.exp(-k / 2) < section_constant(n, k).value < 1
                   and 1 < dimension_factor(n, k) < math.exp(k)
                   for n in range(2, 60) for k in range(1, n))

    def moment():
        x = sample_sphere(5, 100_000, s.derive("moment"))
        est = np.mean(np.abs(x[:, 0]) ** 3)
        return abs(est / sphere_moment(5, 3) - 1) < 0.02

    def polar_volume():
        est = volume_polar(lp_ball(3, 1), 200_000, s.derive("volume"))
        return abs(est.value - 8 / 6) <= 4 * est.std_error

    def homogeneity():
        body = lewis_union_body(4, 3.0, 2, s.derive("body"))
        x = sample_sphere(4, 100, s.derive("x")) * 3.7
        return np.allclose(body.gauge(-2.5 * x), 2.5 * body.gauge(x), rtol=1e-10)

    def lewis():
        return lewis_residual(lp_ball(6, 4)) <= 1e-12 and \
            lewis_residual(lewis_union_body(6, 4.0, 3, s.derive("lw"))) <= 1e-12

    def frames():
        f = sample_grassmann(7, 3, s.derive("frame"))
        return np.max(np.abs(f.basis.T @ f.basis - np.eye(3))) <= 1e-10

    def radon_section():
        L = lp_ball(3, math.inf)
        xi = np.array([0.0, 0.0, 1.0])
        r = radon_transform(radial_power_function(L, 2), xi, 50_000, s.derive("r"))
        v = section_volume(L, complement_frame(xi), 50_000, s.derive("v"))
        return abs(r.value / 2 - v.value) <= 3 * math.hypot(r.std_error / 2, v.std_error)

    def radial_sum():
        b = euclidean_ball(3, 1.5)
        t = sample_sphere(3, 50, s.derive("t"))
        return np.allclose(k_radial_sum(b, b, 2).radial(t), 2 ** 0.5 * 1.5, rtol=1e-12)

    def genint():
        g = SphereFunction(3, lambda t: t[:, 0] ** 2, even=True)
        return genint_identity_check(3, 1, g, 40_000, s.derive("genint"), frames=32).passed

    def cube_mvee():
        v = np.array(list(itertools.product([-1.0, 1.0], repeat=4)))
        return np.allclose(mvee(v, 1e-4).M, np.eye(4) / 4, atol=1e-3)

    def prop2_grid():
        return all(prop2_check(p, n, 1).R_over_sqrt_p <= 2.5
                   for p in (2.5, 4, 16, 64) for n in (4, 16, 64))

    def prop1_ball():
        counts = Counts(volume=20_000, section=20_000, probes=20_000)
        rep = verify_prop1(euclidean_ball(3), Gaussian(1.0), 1, counts, s.derive("prop1"))
        return rep.prop1_passed

    def lp_volume_closed_form():
        return abs(lp_ball_log_volume(2, math.inf) - math.log(4)) < 1e-14 and \
            abs(measure_body(euclidean_ball(2), UNIFORM, 10, s).log_value - math.log(math.pi)) < 1e-14

    return [("constants", constants), ("moment", moment), ("polar_volume", polar_volume),
            ("homogeneity", homogeneity), ("lewis", lewis), ("frames", frames),
            ("radon_section", radon_section), ("radial_sum", radial_sum), ("genint", genint),
            ("cube_mvee", cube_mvee), ("prop2_grid", prop2_grid), ("prop1_ball", prop1_ball),
            ("closed_forms", lp_volume_closed_form)]


def run_selftest(seed: int = 0) -> list:
    results = []
    for name, fn in _checks(seed):
        try:
            ok, detail = bool(fn()), ""
        except Exception as exc:  # report, keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append({"check": name, "passed": ok, "detail": detail})
    return results
