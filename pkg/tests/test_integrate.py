import math

import numpy as np
import pytest
from scipy import integrate as quad

from lpslicing.bodies import Ellipsoid, euclidean_ball, lp_ball
from lpslicing.errors import ConfigError, DataError, DomainError
from lpslicing.integrate import (UNIFORM, Estimate, Gaussian, RadialPower, RadialProfile,
                                 density_from_spec, log_mean_exp, max_section_measure, measure_body,
                                 measure_section, section_volume, volume_polar)
from lpslicing.sampling import SeedSpec, SubspaceFrame, complement_frame, sample_sphere
from lpslicing.special import lp_ball_log_volume


def _close(est, exact, k=4.0):
    return abs(est.value - exact) <= k * est.std_error + 1e-12 * abs(exact)


def test_log_mean_exp():
    lme, rel = log_mean_exp([0.0, 0.0, 0.0])
    assert lme == 0.0 and rel == 0.0
    logs = np.log([1.0, 2.0, 3.0, 4.0])
    lme, rel = log_mean_exp(logs)
    assert lme == pytest.approx(math.log(2.5))
    assert rel == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2 / 2.5)
    # far outside the float range, still finite
    lme, _ = log_mean_exp([-5000.0, -5000.0])
    assert lme == pytest.approx(-5000.0)
    with pytest.raises(DomainError):
        log_mean_exp([])


def test_ball_volume_is_exact():
    # rho = 1 everywhere, so there is no sampling error at all
    est = volume_polar(euclidean_ball(5), 1000, 0)
    assert est.log_value == pytest.approx(math.log(8 * math.pi ** 2 / 15), abs=1e-14)
    assert est.std_error < 1e-14


@pytest.mark.parametrize("n, p", [(2, 1), (3, 1), (3, 4), (4, 1.5), (3, math.inf)])
def test_lp_ball_volume(n, p):
    est = volume_polar(lp_ball(n, p), 400_000, SeedSpec(n, int(10 * min(p, 99))))
    assert _close(est, math.exp(lp_ball_log_volume(n, p)))


def test_cross_polytope_example():
    est = volume_polar(lp_ball(3, 1), 1_000_000, 7)
    assert abs(est.value - 4 / 3) <= 3 * est.std_error
    assert est.samples == 1_000_000


def test_ellipsoid_volume_exact():
    M = np.diag([1 / 9, 1 / 4, 1.0])
    est = volume_polar(Ellipsoid(M), 300_000, 1)
    assert _close(est, 4 * math.pi * 6 / 3)
    assert Ellipsoid(M).log_volume() == pytest.approx(math.log(8 * math.pi))


def test_gaussian_measure_of_disc():
    est = measure_body(euclidean_ball(2), Gaussian(1.0), 100, 0)
    assert est.value == pytest.approx(2 * math.pi * (1 - math.exp(-0.5)), rel=1e-12)


def test_gaussian_measure_with_sigma_quadrature_oracle():
    sigma, n = 0.7, 4
    # mu(B_2^4) = |S^3| int_0^1 r^3 exp(-r^2 / 2 sigma^2) dr
    radial_part, _ = quad.quad(lambda r: r ** 3 * math.exp(-r * r / (2 * sigma ** 2)), 0, 1, epsabs=0, epsrel=1e-13)
    oracle = 2 * math.pi ** 2 * radial_part
    est = measure_body(euclidean_ball(n), Gaussian(sigma), 100, 0)
    assert est.value == pytest.approx(oracle, rel=1e-10)


def test_radial_power_on_disc():
    est = measure_body(euclidean_ball(2), RadialPower(2.0), 100, 0)
    assert est.value == pytest.approx(math.pi / 2, rel=1e-12)


def test_radial_power_on_square_quadrature_oracle():
    oracle, _ = quad.dblquad(lambda y, x: x * x + y * y, -1, 1, -1, 1)
    est = measure_body(lp_ball(2, math.inf), RadialPower(2.0), 400_000, 3)
    assert _close(est, oracle)


def test_custom_profile_matches_gaussian():
    body = lp_ball(3, 3)
    g = RadialProfile(lambda r: math.exp(-r * r / 2))
    a = measure_body(body, g, 3000, 5)
    b = measure_body(body, Gaussian(1.0), 3000, 5)
    assert a.value == pytest.approx(b.value, rel=1e-8)


def test_custom_profile_validation():
    with pytest.raises(ConfigError):
        RadialProfile(lambda r: 1.0, continuous=False)
    with pytest.raises(DataError):
        measure_body(euclidean_ball(2), RadialProfile(lambda r: -1.0), 10, 0)
    with pytest.raises(DataError):
        measure_body(euclidean_ball(2), RadialProfile(lambda r: math.nan), 10, 0)


def test_density_validation():
    with pytest.raises(DomainError):
        Gaussian(0.0)
    with pytest.raises(DomainError):
        RadialPower(-1.5)
    assert density_from_spec({"kind": "uniform"}) is UNIFORM
    assert density_from_spec({"kind": "gaussian", "sigma": 2}).sigma == 2
    for spec in [{"kind": "gaussian"}, {"kind": "gaussian", "sigma": 1, "mu": 0},
                 {"kind": "laplace"}, {"kind": "radial_power", "alpha": "x"}, "uniform"]:
        with pytest.raises(ConfigError):
            density_from_spec(spec)


def test_density_roundtrip():
    for d in (UNIFORM, Gaussian(0.3), RadialPower(1.5)):
        again = density_from_spec(d.to_spec())
        r = np.linspace(0, 3, 7)
        assert np.allclose(d.profile(r), again.profile(r))


def test_estimate_to_dict():
    e = Estimate(2.0, 0.1, 10, SeedSpec(3, 4), math.log(2.0))
    assert e.rel_error == pytest.approx(0.05)
    assert e.to_dict()["seed"] == 3 and e.to_dict()["stream"] == 4


# -- sections -------------------------------------------------------------------------

def _ellipsoid_section_area(axes, xi):
    # central section of the ellipsoid with semi-axes a, b, c and unit normal xi
    a, b, c = axes
    return math.pi * a * b * c / math.sqrt(a * a * xi[0] ** 2 + b * b * xi[1] ** 2 + c * c * xi[2] ** 2)


@pytest.mark.parametrize("j", range(4))
def test_ellipsoid_section_area(j):
    axes = (3.0, 2.0, 1.0)
    body = Ellipsoid(np.diag([1 / a ** 2 for a in axes]))
    xi = sample_sphere(3, 1, SeedSpec(50 + j))[0]
    est = section_volume(body, complement_frame(xi), 200_000, SeedSpec(60 + j))
    assert _close(est, _ellipsoid_section_area(axes, xi))


def test_square_diagonal_and_axis_sections():
    sq = lp_ball(2, math.inf)
    axis = section_volume(sq, SubspaceFrame(np.array([1.0, 0.0])), 10, 0)
    diag = section_volume(sq, SubspaceFrame(np.array([1.0, 1.0]) / math.sqrt(2)), 10, 0)
    assert axis.value == pytest.approx(2.0, rel=1e-14)
    assert diag.value == pytest.approx(2 * math.sqrt(2), rel=1e-14)


def test_section_frame_dimension_mismatch():
    with pytest.raises(DomainError):
        section_volume(lp_ball(3, 2), SubspaceFrame(np.eye(2)), 10, 0)


def test_gaussian_section_of_ball():
    # 2-dimensional Gaussian mass of the unit disc in any plane of R^3
    est = measure_section(euclidean_ball(3), Gaussian(1.0), complement_frame([1.0, 2.0, 2.0]), 50, 0)
    assert est.value == pytest.approx(2 * math.pi * (1 - math.exp(-0.5)), rel=1e-12)


def test_square_max_section_against_angle_grid():
    sq = lp_ball(2, math.inf)
    angles = np.linspace(0, math.pi, 100_001)
    chords = 2 / np.maximum(np.abs(np.cos(angles)), np.abs(np.sin(angles)))
    oracle = chords.max()
    res = max_section_measure(sq, UNIFORM, 1, restarts=4, local_steps=40, count=20_000, seed=1)
    assert res.estimate.value == pytest.approx(oracle, rel=1e-3)
    assert res.frame.m == 1


def test_ellipsoid_max_section_against_grid():
    axes = (3.0, 2.0, 1.0)
    body = Ellipsoid(np.diag([1 / a ** 2 for a in axes]))
    # brute-force over normals on a fine polar grid
    th, ph = np.meshgrid(np.linspace(0, math.pi, 361), np.linspace(0, 2 * math.pi, 721))
    xi = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1).reshape(-1, 3)
    a, b, c = axes
    oracle = np.max(math.pi * a * b * c / np.sqrt(a * a * xi[:, 0] ** 2 + b * b * xi[:, 1] ** 2 + c * c * xi[:, 2] ** 2))
    res = max_section_measure(body, UNIFORM, 1, restarts=6, local_steps=40, count=100_000, seed=2)
    assert res.estimate.value == pytest.approx(oracle, rel=0.01)
    assert res.estimate.value <= oracle * (1 + 4 * res.estimate.rel_error)


def test_max_section_domain():
    with pytest.raises(DomainError):
        max_section_measure(lp_ball(3, 2), UNIFORM, 3)
    with pytest.raises(DomainError):
        max_section_measure(lp_ball(3, 2), UNIFORM, 1, restarts=0)


def test_max_section_deterministic():
    body = lp_ball(3, 1)
    a = max_section_measure(body, UNIFORM, 1, restarts=2, local_steps=5, count=4000, seed=9)
    b = max_section_measure(body, UNIFORM, 1, restarts=2, local_steps=5, count=4000, seed=9)
    assert a.estimate.value == b.estimate.value
    assert np.array_equal(a.frame.basis, b.frame.basis)
