import math

import numpy as np
import pytest
from scipy import integrate as quad

from lpslicing.bodies import Ellipsoid, euclidean_ball, lp_ball
from lpslicing.errors import DomainError
from lpslicing.integrate import section_volume
from lpslicing.radon import (SphereFunction, bp_body_from_ellipsoids, genint_identity_check,
                             intersection_body_of, k_radial_sum, radial_power_function, radon_nk,
                             radon_transform)
from lpslicing.sampling import SeedSpec, complement_frame, sample_grassmann, sample_sphere
from lpslicing.special import sphere_log_surface, unit_ball_log_volume


def test_radon_x1_squared_at_e3():
    oracle, _ = quad.quad(lambda t: math.cos(t) ** 2, 0, 2 * math.pi, epsabs=1e-14)
    g = SphereFunction(3, lambda t: t[:, 0] ** 2, even=True)
    est = radon_transform(g, [0.0, 0.0, 1.0], 200_000, 1)
    assert abs(est.value - oracle) <= 4 * est.std_error


def test_radon_of_constant_is_sphere_area():
    g = SphereFunction(5, lambda t: np.ones(len(t)), even=True)
    est = radon_transform(g, sample_sphere(5, 1, 2)[0], 1000, 3)
    assert est.value == pytest.approx(math.exp(sphere_log_surface(4)), rel=1e-13)


def test_radon_nk_of_constant():
    g = SphereFunction(6, lambda t: np.ones(len(t)), even=True)
    for m in (1, 2, 5):
        est = radon_nk(g, sample_grassmann(6, m, m), 100, 0)
        assert est.value == pytest.approx(math.exp(sphere_log_surface(m)), rel=1e-13)


def test_radon_of_radial_power_is_section_volume():
    # |L ∩ xi^perp| = (1/(n-1)) R(rho_L^{n-1})(xi), same directions on both sides
    L = lp_ball(3, math.inf)
    xi = np.array([1.0, 2.0, 2.0]) / 3
    r = radon_transform(radial_power_function(L, 2), xi, 50_000, 5)
    v = section_volume(L, complement_frame(xi), 50_000, 5)
    assert r.value / 2 == pytest.approx(v.value, rel=1e-12)


def test_radon_domain():
    g = SphereFunction(3, lambda t: t[:, 0] ** 2, even=True)
    with pytest.raises(DomainError):
        radon_transform(g, [1.0, 1.0, 0.0], 10, 0)
    with pytest.raises(DomainError):
        radon_transform(SphereFunction(1, lambda t: t[:, 0]), [1.0], 10, 0)
    with pytest.raises(DomainError):
        SphereFunction(3, lambda t: t[:, 0], even=True)


def test_intersection_body_of_ball():
    I = intersection_body_of(euclidean_ball(4), 1000, 0)
    t = sample_sphere(4, 5, 1)
    assert np.allclose(I.radial(t), math.exp(unit_ball_log_volume(3)), rtol=1e-13)


def test_intersection_body_of_ellipsoid():
    axes = (3.0, 2.0, 1.0)
    I = intersection_body_of(Ellipsoid(np.diag([1 / a ** 2 for a in axes])), 100_000, 4)
    xi = sample_sphere(3, 3, 5)
    a, b, c = axes
    oracle = math.pi * a * b * c / np.sqrt(a * a * xi[:, 0] ** 2 + b * b * xi[:, 1] ** 2 + c * c * xi[:, 2] ** 2)
    assert np.allclose(I.radial(xi), oracle, rtol=0.01)


def test_intersection_body_is_even_and_memoized():
    I = intersection_body_of(lp_ball(3, 1), 5000, 6)
    xi = sample_sphere(3, 4, 7)
    a = I.radial(xi)
    assert np.array_equal(a, I.radial(-xi))
    assert len(I._cache) == 4


def test_k_radial_sum_ellipsoids():
    e1 = Ellipsoid(np.diag([1.0, 4.0]))
    e2 = Ellipsoid(np.diag([4.0, 1.0]))
    t = sample_sphere(2, 100, 8)
    s = k_radial_sum(e1, e2, 2.0)
    assert np.allclose(s.radial(t) ** 2, e1.radial(t) ** 2 + e2.radial(t) ** 2, rtol=1e-13)


def test_k_radial_sum_domain():
    with pytest.raises(DomainError):
        k_radial_sum(euclidean_ball(2), euclidean_ball(3), 1)
    with pytest.raises(DomainError):
        k_radial_sum(euclidean_ball(2), euclidean_ball(2), 0.5)


def test_bp_body_order_invariant():
    rng = np.random.default_rng(0)
    ells = []
    for _ in range(5):
        a = rng.standard_normal((4, 4))
        ells.append(Ellipsoid(a @ a.T + np.eye(4)))
    t = sample_sphere(4, 500, 9)
    a = bp_body_from_ellipsoids(ells, 2).radial(t)
    b = bp_body_from_ellipsoids(ells[::-1], 2).radial(t)
    assert np.array_equal(a, b)
    with pytest.raises(DomainError):
        bp_body_from_ellipsoids([lp_ball(4, 3)], 2)
    with pytest.raises(DomainError):
        bp_body_from_ellipsoids([], 2)


@pytest.mark.parametrize("n, k, fn", [
    (3, 1, lambda t: t[:, 0] ** 2),
    (4, 2, lambda t: np.abs(t[:, 1]) ** 3 + 1.0),
    (5, 3, lambda t: t[:, 0] ** 2 * t[:, 2] ** 2),
])
def test_genint_identity(n, k, fn):
    rep = genint_identity_check(n, k, SphereFunction(n, fn, even=True), 100_000, SeedSpec(n, k), frames=64)
    assert rep.passed, rep.to_dict()


def test_genint_identity_exact_for_constant():
    g = SphereFunction(4, lambda t: np.ones(len(t)), even=True)
    rep = genint_identity_check(4, 1, g, 5000, 0, frames=8)
    assert rep.extra["relative_discrepancy"] < 1e-12


def test_genint_domain():
    g = SphereFunction(3, lambda t: t[:, 0] ** 2, even=False)
    with pytest.raises(DomainError):
        genint_identity_check(3, 1, g, 1000, 0)
    with pytest.raises(DomainError):
        genint_identity_check(3, 3, SphereFunction(3, lambda t: t[:, 0] ** 2, even=True), 1000, 0)
