"""Tests for the quadrature / Bessel / DFT layer.

Oracle values are either classical closed forms or recomputed in-test by an
independent method (power series plus bisection for the Bessel zero,
brute-force panel summation for the oscillatory integral).
"""

import numpy as np
import pytest

from fracheat.quadrature import (
    QuadratureSpec,
    ErrorEstimate,
    RadialGrid,
    QuadratureError,
    integrate,
    bessel_j,
    bessel_zeros,
    oscillatory_bessel_integral,
    dft_1d,
)


# ---------------------------------------------------------------- integrate

def test_gaussian_integral():
    value, est = integrate(lambda x: np.exp(-x * x), 0.0, np.inf)
    assert est.converged
    assert value == pytest.approx(np.sqrt(np.pi) / 2, rel=1e-12)


def test_integrate_declared_endpoint_singularity():
    # int_0^1 x^{-1/2} dx = 2, integrable endpoint blow-up declared by caller
    value, est = integrate(lambda x: 1.0 / np.sqrt(x), 0.0, 1.0,
                           singular_a=-0.5)
    assert est.converged
    assert value == pytest.approx(2.0, rel=1e-10)


def test_integrate_upper_endpoint_singularity():
    # int_0^1 (1-x)^{-1/3} dx = 3/2
    value, est = integrate(lambda x: (1.0 - x) ** (-1.0 / 3.0), 0.0, 1.0,
                           singular_b=-1.0 / 3.0)
    assert est.converged
    assert value == pytest.approx(1.5, rel=1e-10)


def test_integrate_both_endpoints_singular():
    # Beta(1/2, 1/2) = pi
    value, est = integrate(
        lambda x: 1.0 / np.sqrt(x * (1.0 - x)), 0.0, 1.0,
        singular_a=-0.5, singular_b=-0.5)
    assert est.converged
    assert value == pytest.approx(np.pi, rel=1e-9)


def test_integrate_consistency_under_tighter_tolerance():
    # halving rel_tol must not move the result by more than the coarser
    # error estimate
    f = lambda x: np.sin(3 * x) * np.exp(-x)
    coarse = QuadratureSpec(rel_tol=1e-6)
    fine = QuadratureSpec(rel_tol=5e-7)
    v1, e1 = integrate(f, 0.0, np.inf, coarse)
    v2, _ = integrate(f, 0.0, np.inf, fine)
    assert abs(v1 - v2) <= max(e1.abs_err, 1e-14)


def test_integrate_nonconvergence_carries_partial_value():
    # highly oscillatory integrand with a starved subdivision budget
    spec = QuadratureSpec(max_subdivisions=3, abs_tol=1e-13, rel_tol=1e-13)
    with pytest.raises(QuadratureError) as exc_info:
        integrate(lambda x: np.sin(50.0 * x * x), 0.0, 40.0, spec)
    err = exc_info.value
    assert np.isfinite(err.value)
    assert not err.estimate.converged


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(abs_tol=-1.0)
    with pytest.raises(ValueError):
        QuadratureSpec(scheme_id="simpson")
    with pytest.raises(ValueError):
        ErrorEstimate(abs_err=-1.0, rel_err=0.0, converged=True)


def test_radial_grid_validation():
    grid = RadialGrid(radii=np.array([0.0, 1.0, 2.0]),
                      values=np.array([1.0, 0.5, 0.1]), dim=3)
    assert grid.dim == 3
    with pytest.raises(ValueError):
        RadialGrid(radii=np.array([1.0, 1.0]), values=np.array([1.0, 2.0]), dim=1)
    with pytest.raises(ValueError):
        RadialGrid(radii=np.array([0.0, 1.0]), values=np.array([1.0]), dim=1)


# ------------------------------------------------------------------ bessel

def _bessel_j0_series(x: float) -> float:
    # independent oracle: defining power series, adequate for |x| <= 12
    total, term = 1.0, 1.0
    q = 0.25 * x * x
    for k in range(1, 60):
        term *= -q / (k * k)
        total += term
    return total


def test_bessel_j_matches_power_series():
    for x in (0.5, 1.0, 2.0, 5.0, 8.0):
        assert bessel_j(0.0, x) == pytest.approx(_bessel_j0_series(x), rel=1e-12)


def test_bessel_j_half_order_closed_form():
    # J_{1/2}(x) = sqrt(2/(pi x)) sin x
    x = np.linspace(0.3, 30.0, 50)
    expect = np.sqrt(2.0 / (np.pi * x)) * np.sin(x)
    assert np.allclose(bessel_j(0.5, x), expect, rtol=1e-12, atol=1e-14)


def test_bessel_j_recurrence():
    # J_{nu-1}(x) + J_{nu+1}(x) = (2 nu / x) J_nu(x)
    rng = np.random.default_rng(42)
    x = rng.uniform(0.5, 50.0, size=200)
    for nu in (0.5, 1.0, 1.5, 2.0, 3.0):
        lhs = bessel_j(nu - 1.0, x) + bessel_j(nu + 1.0, x)
        rhs = 2.0 * nu / x * bessel_j(nu, x)
        assert np.allclose(lhs, rhs, rtol=1e-10, atol=1e-10)


def test_bessel_j_large_argument_accuracy():
    # spot-check against the half-order closed form out to x = 1e3
    x = np.array([100.0, 500.0, 1000.0])
    expect = np.sqrt(2.0 / (np.pi * x)) * np.sin(x)
    assert np.allclose(bessel_j(0.5, x), expect, rtol=1e-12, atol=1e-15)


def test_bessel_j_domain_errors():
    with pytest.raises(ValueError):
        bessel_j(-1.0, 1.0)
    with pytest.raises(ValueError):
        bessel_j(0.0, -1.0)


def _first_j0_zero_by_bisection() -> float:
    # independent oracle for j_{0,1} from the power series
    lo, hi = 2.0, 3.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _bessel_j0_series(lo) * _bessel_j0_series(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def test_bessel_zeros_first_zero():
    oracle = _first_j0_zero_by_bisection()
    assert oracle == pytest.approx(2.404825557695773, abs=1e-12)
    zeros = bessel_zeros(0.0, 5)
    assert zeros[0] == pytest.approx(oracle, abs=1e-12)
    # zeros interlace and are roughly pi apart far out
    assert np.all(np.diff(zeros) > 0)
    gaps = np.diff(bessel_zeros(0.0, 40))
    assert gaps[-1] == pytest.approx(np.pi, abs=1e-3)


def test_bessel_zeros_half_order_are_multiples_of_pi():
    zeros = bessel_zeros(0.5, 10)
    assert np.allclose(zeros, np.pi * np.arange(1, 11), rtol=1e-12)


# -------------------------------------------------- oscillatory integrals

def _brute_force_bessel_integral(g, nu, omega, upper, panels=400_000):
    # midpoint rule on a fine uniform mesh; slow but independent
    from scipy.special import jv
    x = (np.arange(panels) + 0.5) * (upper / panels)
    return float(np.sum(g(x) * jv(nu, omega * x)) * (upper / panels))


def test_oscillatory_lorentzian_closed_form():
    # int_0^infty e^{-r} J_0(omega r) dr = (1 + omega^2)^{-1/2}
    for omega in (0.5, 1.0, 3.0, 12.0):
        value, est = oscillatory_bessel_integral(
            lambda r: np.exp(-r), 0.0, omega)
        assert est.converged
        assert value == pytest.approx((1.0 + omega ** 2) ** -0.5, rel=1e-8)


def test_oscillatory_gaussian_oracle():
    # int_0^infty r e^{-r^2/4} J_0(omega r) dr = 2 e^{-omega^2}
    omega = 1.0
    g = lambda r: r * np.exp(-0.25 * r * r)
    closed = 2.0 * np.exp(-omega ** 2)
    assert closed == pytest.approx(2.0 / np.e, rel=1e-15)
    brute = _brute_force_bessel_integral(g, 0.0, omega, upper=30.0)
    assert brute == pytest.approx(closed, rel=1e-7)
    value, est = oscillatory_bessel_integral(g, 0.0, omega)
    assert est.converged
    assert value == pytest.approx(closed, rel=1e-8)


def test_oscillatory_high_frequency():
    # frequencies well past the tail cutoff still converge fast
    g = lambda r: np.exp(-0.5 * r)
    for omega in (40.0, 120.0):
        value, est = oscillatory_bessel_integral(g, 0.0, omega)
        assert est.converged
        expect = (0.25 + omega ** 2) ** -0.5
        assert value == pytest.approx(expect, rel=1e-7)


def test_oscillatory_slow_algebraic_decay_needs_acceleration():
    # int_0^infty J_0(r)/(1+r^2)^{1/2} ... no elementary form; cross-check
    # against brute force at modest accuracy, acceleration must converge
    g = lambda r: (1.0 + r * r) ** -1.0
    value, est = oscillatory_bessel_integral(g, 0.0, 1.0)
    assert est.converged
    brute = _brute_force_bessel_integral(g, 0.0, 1.0, upper=4000.0, panels=2_000_000)
    assert value == pytest.approx(brute, abs=5e-4)


def test_oscillatory_half_order_sine_integral():
    # J_{1/2} reduces to sine: int_0^infty e^{-r} J_{1/2}(r) dr
    # = sqrt(2/pi) int_0^infty e^{-r} sin(r)/sqrt(r) dr; oracle by QUADPACK
    from scipy.integrate import quad
    oracle, _ = quad(lambda r: np.exp(-r) * np.sin(r) / np.sqrt(r), 0, np.inf,
                     limit=400)
    oracle *= np.sqrt(2.0 / np.pi)
    value, est = oscillatory_bessel_integral(lambda r: np.exp(-r), 0.5, 1.0)
    assert est.converged
    assert value == pytest.approx(oracle, rel=1e-8)


def test_oscillatory_complex_weight():
    # complex g handled componentwise: g = e^{-(1+2i) r}
    # int_0^infty e^{-z r} J_0(omega r) dr = 1/sqrt(z^2 + omega^2)
    z = 1.0 + 2.0j
    omega = 3.0
    value, est = oscillatory_bessel_integral(
        lambda r: np.exp(-z * r), 0.0, omega)
    assert est.converged
    expect = 1.0 / np.sqrt(z * z + omega ** 2)
    assert abs(value - expect) < 1e-8 * abs(expect)


def test_oscillatory_rejects_bad_arguments():
    with pytest.raises(ValueError):
        oscillatory_bessel_integral(lambda r: np.exp(-r), 0.0, -1.0)
    with pytest.raises(ValueError):
        oscillatory_bessel_integral(lambda r: np.exp(-r), -2.0, 1.0)


# --------------------------------------------------------------------- dft

def test_dft_roundtrip_and_parseval():
    rng = np.random.default_rng(7)
    for size in (8, 65, 1024, 4096):
        v = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        fwd = dft_1d(v, "forward")
        back = dft_1d(fwd, "inverse")
        assert np.max(np.abs(back - v)) < 1e-12
        # unitary normalization preserves the l2 norm exactly
        assert np.linalg.norm(fwd) == pytest.approx(np.linalg.norm(v), rel=1e-12)


def test_dft_single_mode():
    # forward transform of e^{2 pi i j k0 / N} / sqrt(N) is the k0 indicator
    size, k0 = 64, 5
    j = np.arange(size)
    v = np.exp(2j * np.pi * j * k0 / size) / np.sqrt(size)
    fwd = dft_1d(v, "forward")
    expect = np.zeros(size)
    expect[k0] = 1.0
    assert np.max(np.abs(fwd - expect)) < 1e-13


def test_dft_rejects_bad_input():
    with pytest.raises(ValueError):
        dft_1d(np.zeros((2, 2)), "forward")
    with pytest.raises(ValueError):
        dft_1d(np.array([1.0]), "sideways")
    with pytest.raises(ValueError):
        dft_1d(np.array([]), "forward")
