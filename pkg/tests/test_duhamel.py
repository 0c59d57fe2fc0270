"""Tests for the Duhamel series module.

Oracles: for constant V the iteration commutes with the free semigroup,
so K_j = (c t)^j / j! K_0 exactly and the signed sum has row mass
e^{-c t}; a dense matrix exponential of the lattice Hamiltonian checks
the full signed kernel; a two-dimensional Riemann sum of the continuum
Duhamel integral checks one narrow-bump term against the alpha = 1/2
Poisson kernel; the Laplace transform of that kernel at mu = 1 has the
closed form (-Ci(r) cos r + (pi/2 - Si(r)) sin r) / pi.
"""

import math
import warnings

import numpy as np
import pytest
from scipy.linalg import circulant as scipy_circulant
from scipy.linalg import expm
from scipy.special import sici

from fracheat.kernels import BoundReport, FracParams, comparison_I
from fracheat.kato import (
    box_potential,
    gaussian_potential,
    inverse_power_potential,
    kato_norm_curve,
    make_kato_profile,
    zero_potential,
)
from fracheat.duhamel import (
    DomainSizeError,
    ResolutionError,
    SpaceTimeGrid,
    TimeHorizonError,
    build_series,
    comparison_mass_constant,
    doubling_extend,
    duhamel_step,
    free_columns,
    laplace_consistency,
    lattice_c1,
    lattice_potential_values,
    lattice_resolvent_terms,
    lattice_symbol,
    make_grid,
    periodic_distances,
    product_inequality_check,
    resolvent_bound_check,
    resolvent_kernel,
    series_sum,
    verify_33,
)

PARAMS = FracParams(0.5, 1)


def cauchy_profile():
    # alpha = 1/2, n = 1 profile with constant sources pinned near their
    # continuum values; omega = e C1 C2 C4
    c1 = BoundReport(1.0 / np.pi, (1.0, 12.0), 0.0, 1200)
    c2 = BoundReport(0.3183094, (1.0, 1.0), 0.0, 100)
    return make_kato_profile(PARAMS, c1, c2)


def free_matrix(grid, t):
    # independent construction of the full free kernel at an arbitrary time
    sym = lattice_symbol(PARAMS, grid)
    col = np.fft.ifft(np.exp(-t * sym)).real / grid.dx
    return scipy_circulant(col)


def dense_propagator(grid, V, t):
    # matrix exponential of the lattice Hamiltonian, in kernel units
    sym = lattice_symbol(PARAMS, grid)
    h0 = scipy_circulant(np.fft.ifft(sym).real)
    vx = lattice_potential_values(V, grid)
    return expm(-t * (h0 + np.diag(vx))) / grid.dx


def l1_norm(A, dx):
    return np.abs(A).sum(axis=1).max() * dx


@pytest.fixture(scope="module")
def profile():
    return cauchy_profile()


@pytest.fixture(scope="module")
def grid17():
    return make_grid(PARAMS, N=128, L=60.0, T=1.0, n_times=17)


@pytest.fixture(scope="module")
def k0_17(grid17):
    return free_columns(PARAMS, grid17)


@pytest.fixture(scope="module")
def const_bundle(grid17, profile):
    # V = c on the whole periodic cell: every term is exactly
    # (c t)^j / j! times the free kernel
    c = 0.3
    V = box_potential(amplitude=c, radius=30.0)
    series = build_series(V, PARAMS, grid17, profile, n_terms=3)
    return c, V, series


@pytest.fixture(scope="module")
def box_series(grid17, profile):
    V = box_potential(amplitude=0.4, radius=1.0)
    return build_series(V, PARAMS, grid17, profile, n_terms=4)


@pytest.fixture(scope="module")
def box_series5(grid17, profile):
    V = box_potential(amplitude=0.4, radius=1.0)
    return build_series(V, PARAMS, grid17, profile, n_terms=5)


@pytest.fixture(scope="module")
def zero_series(grid17, profile):
    return build_series(zero_potential(), PARAMS, grid17, profile, n_terms=3)


@pytest.fixture(scope="module")
def laplace_bundle(profile):
    # long horizon so the Laplace tail of the iterated terms is negligible
    # at mu = 2; omega K_V >= 1 out there, which only disables the
    # geometric sum, not the term arrays themselves
    grid = make_grid(PARAMS, N=128, L=60.0, T=10.0, n_times=25)
    V = box_potential(amplitude=0.4, radius=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        series = build_series(V, PARAMS, grid, profile, n_terms=2)
    rterms = lattice_resolvent_terms(series, 2.0)
    return series, rterms


@pytest.fixture(scope="module")
def bump_bundle(grid17, profile):
    V = gaussian_potential(amplitude=1.0, width=1.5, center=0.5)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        series = build_series(V, PARAMS, grid17, profile, n_terms=1)
    return V, series


# ------------------------------------------------------------------- grids

def test_make_grid_grading():
    grid = make_grid(PARAMS, N=64, L=40.0, T=2.0, n_times=9)
    g = 1.0 + 1.0 / (2.0 * 0.5)
    i = np.arange(1, 10, dtype=float)
    assert np.allclose(grid.t_nodes, 2.0 * (i / 9) ** g, rtol=1e-15)
    assert grid.horizon == 2.0
    assert grid.n_points == 64
    assert math.isclose(grid.length, 40.0)
    assert math.isclose(grid.dx, 40.0 / 64)
    assert grid.x_nodes[0] == -20.0 and grid.x_nodes[-1] < 20.0


def test_make_grid_grading_tracks_alpha():
    grid = make_grid(FracParams(0.75, 1), N=64, L=40.0, T=1.0, n_times=9)
    g = 1.0 + 1.0 / 1.5
    assert np.allclose(grid.t_nodes, (np.arange(1, 10) / 9.0) ** g)


def test_grid_validation():
    with pytest.raises(ValueError, match="power of two"):
        make_grid(PARAMS, N=100)
    with pytest.raises(ValueError, match="one-dimensional"):
        make_grid(FracParams(0.5, 2))
    with pytest.raises(ValueError, match="positive"):
        make_grid(PARAMS, T=-1.0)
    x = np.linspace(-1.0, 1.0, 8, endpoint=False)
    with pytest.raises(ValueError, match="strictly increasing"):
        SpaceTimeGrid(x_nodes=x, t_nodes=np.array([0.2, 0.1]), dx=0.25)
    with pytest.raises(ValueError, match="positive"):
        SpaceTimeGrid(x_nodes=x, t_nodes=np.array([0.0, 0.1]), dx=0.25)
    with pytest.raises(ValueError, match="uniform"):
        SpaceTimeGrid(x_nodes=x ** 3, t_nodes=np.array([0.1]), dx=0.25)
    with pytest.raises(ValueError, match="s_panels"):
        SpaceTimeGrid(x_nodes=x, t_nodes=np.array([0.1]), dx=0.25, s_panels=1)


def test_free_columns_mass_and_symmetry(grid17, k0_17):
    # unit row mass is the zero mode of the symbol; evenness in the
    # periodic coordinate is evenness of the symbol
    for i in (0, 8, 16):
        col = k0_17[i]
        assert math.isclose(col.sum() * grid17.dx, 1.0, rel_tol=1e-13)
        assert np.allclose(col[1:], col[1:][::-1], rtol=0,
                           atol=1e-13 * col.max())
    assert k0_17.shape == (17, 128)


def test_free_columns_chapman_kolmogorov(grid17, k0_17):
    t = float(grid17.t_nodes[8])
    K = scipy_circulant(k0_17[8])
    composed = (K @ K) * grid17.dx
    assert np.abs(composed - free_matrix(grid17, 2 * t)).max() < 1e-13


# ------------------------------------------------------- potential sampling

def test_support_exceeding_cell_rejected(grid17):
    V = box_potential(amplitude=1.0, radius=40.0)
    with pytest.raises(ValueError, match="periodic cell"):
        lattice_potential_values(V, grid17)


def test_singular_node_gets_cell_mean():
    # node exactly on the singularity: the sample is replaced by the cell
    # mean of the local power law, (dx/2)^p / (1 + p) per unit amplitude
    grid = make_grid(PARAMS, N=1024, L=4.0, T=1.0, n_times=3)
    V = inverse_power_potential(gamma=0.2, cutoff=1.0)
    vals = lattice_potential_values(V, grid)
    k = int(np.argmin(np.abs(grid.x_nodes)))
    assert abs(grid.x_nodes[k]) < 1e-14
    expected = (0.5 * grid.dx) ** -0.2 / 0.8
    assert math.isclose(vals[k], expected, rel_tol=1e-12)
    off = grid.x_nodes[k + 7]
    assert math.isclose(vals[k + 7], abs(off) ** -0.2, rel_tol=1e-12)


def test_resolution_error_on_coarse_grid(grid17, k0_17):
    # gamma = 1/2 needs dx <= 2 R (0.01)^2; no practical grid reaches that
    V = inverse_power_potential(gamma=0.5, cutoff=1.0)
    with pytest.raises(ResolutionError) as exc:
        duhamel_step(k0_17, V, k0_17, grid17, params=PARAMS)
    assert math.isclose(exc.value.required_dx, 2.0 * 0.01 ** 2, rel_tol=1e-12)
    assert exc.value.required_dx < grid17.dx


def test_resolution_threshold_crossing():
    V = inverse_power_potential(gamma=0.2, cutoff=1.0)
    req = 2.0 * 0.01 ** (1.0 / 0.8)
    coarse = make_grid(PARAMS, N=512, L=4.0, T=1.0, n_times=3)
    fine = make_grid(PARAMS, N=1024, L=4.0, T=1.0, n_times=3)
    assert coarse.dx > req > fine.dx
    from fracheat.duhamel import _resolution_check
    with pytest.raises(ResolutionError) as exc:
        _resolution_check(V, coarse)
    assert math.isclose(exc.value.required_dx, req, rel_tol=1e-12)
    _resolution_check(V, fine)


def test_nonintegrable_power_rejected(grid17, k0_17):
    V = inverse_power_potential(gamma=1.2, cutoff=1.0)
    with pytest.raises(ResolutionError, match="not integrable"):
        duhamel_step(k0_17, V, k0_17, grid17, params=PARAMS)


# ------------------------------------------------------------ single steps

def test_first_term_constant_potential(grid17, k0_17, const_bundle):
    c, V, series = const_bundle
    for i, t in enumerate(grid17.t_nodes):
        exact = c * float(t) * scipy_circulant(k0_17[i])
        err = np.abs(series.terms[1][i] - exact).max() / np.abs(exact).max()
        assert err < 1e-9


def test_standalone_step_matches_series_first_term(grid17, k0_17,
                                                   const_bundle):
    c, V, series = const_bundle
    k1 = duhamel_step(k0_17, V, k0_17, grid17, params=PARAMS)
    assert np.abs(k1 - series.terms[1]).max() < 1e-14


def test_step_linear_in_potential():
    grid = make_grid(PARAMS, N=64, L=60.0, T=1.0, n_times=5)
    k0 = free_columns(PARAMS, grid)
    k1a = duhamel_step(k0, box_potential(amplitude=0.4, radius=1.0),
                       k0, grid, params=PARAMS)
    k1b = duhamel_step(k0, box_potential(amplitude=0.8, radius=1.0),
                       k0, grid, params=PARAMS)
    scale = np.abs(k1b).max()
    assert np.abs(k1b - 2.0 * k1a).max() < 1e-12 * scale


def test_step_recovers_symbol_without_params(grid17, k0_17, const_bundle):
    c, V, series = const_bundle
    k1 = duhamel_step(k0_17, V, k0_17, grid17)
    scale = np.abs(series.terms[1]).max()
    assert np.abs(k1 - series.terms[1]).max() < 1e-9 * scale


def test_step_rejects_decayed_columns():
    grid = make_grid(PARAMS, N=128, L=60.0, T=50.0, n_times=2)
    k0 = free_columns(PARAMS, grid)
    with pytest.raises(ValueError, match="pass params"):
        duhamel_step(k0, box_potential(amplitude=0.4, radius=1.0), k0, grid)


def test_step_zero_potential_is_zero(grid17, k0_17):
    out = duhamel_step(k0_17, zero_potential(), k0_17, grid17, params=PARAMS)
    assert out.shape == (17, 128, 128)
    assert not np.any(out)


def test_standalone_second_step_away_from_earliest_times(grid17, k0_17,
                                                         const_bundle):
    # a standalone call lacks the anchored evaluator, so only the nodes
    # past the first few carry the documented accuracy
    c, V, series = const_bundle
    k2 = duhamel_step(series.terms[1], V, k0_17, grid17, params=PARAMS)
    errs = []
    for i, t in enumerate(grid17.t_nodes):
        exact = (c * float(t)) ** 2 / 2.0 * scipy_circulant(k0_17[i])
        errs.append(np.abs(k2[i] - exact).max() / np.abs(exact).max())
    assert max(errs[4:]) < 2e-2
    assert errs[-1] < 1e-3


# ------------------------------------------------------------ build_series

def test_series_constant_potential_higher_terms(grid17, k0_17, const_bundle):
    # through the anchored chain the early nodes hold up as well; the
    # third term's first nodes are checked against the free kernel scale
    # since their own magnitude is c^3 t^3 / 6 of it
    c, V, series = const_bundle
    k0max = [np.abs(k0_17[i]).max() for i in range(17)]
    for i, t in enumerate(grid17.t_nodes):
        exact2 = (c * float(t)) ** 2 / 2.0 * scipy_circulant(k0_17[i])
        err2 = np.abs(series.terms[2][i] - exact2).max() / np.abs(exact2).max()
        assert err2 < 2e-2
        exact3 = (c * float(t)) ** 3 / 6.0 * scipy_circulant(k0_17[i])
        gap3 = np.abs(series.terms[3][i] - exact3).max()
        assert gap3 < 5e-7 * k0max[i]
    last2 = np.abs(series.terms[2][-1]
                   - (c ** 2 / 2.0) * scipy_circulant(k0_17[-1])).max()
    last3 = np.abs(series.terms[3][-1]
                   - (c ** 3 / 6.0) * scipy_circulant(k0_17[-1])).max()
    assert last2 < 1e-4 * (c ** 2 / 2.0) * k0max[-1]
    assert last3 < 1e-4 * (c ** 3 / 6.0) * k0max[-1]


def test_series_terms_symmetric(box_series):
    for term in box_series.terms[1:]:
        for i in range(term.shape[0]):
            assert np.abs(term[i] - term[i].T).max() == 0.0


def test_series_shapes_and_q(box_series, grid17):
    assert box_series.n_terms == 4
    assert len(box_series.q_values) == 17
    assert all(0 < q < 1 for q in box_series.q_values)
    assert np.all(np.diff(box_series.q_values) > 0)
    assert box_series.terms[0].shape == (17, 128)
    assert box_series.terms[1].shape == (17, 128, 128)
    assert np.isfinite(box_series.truncation_bound)


def test_series_zero_potential(zero_series, grid17, k0_17):
    for term in zero_series.terms[1:]:
        assert not np.any(term)
    assert zero_series.truncation_bound == 0.0
    t = float(grid17.t_nodes[5])
    total, bound = series_sum(zero_series, t)
    assert np.array_equal(total, scipy_circulant(k0_17[5]))
    assert bound == 0.0


def test_series_warns_outside_geometric_regime(profile):
    grid = make_grid(PARAMS, N=64, L=60.0, T=10.0, n_times=5)
    V = box_potential(amplitude=0.4, radius=1.0)
    with pytest.warns(UserWarning, match="doubling"):
        series = build_series(V, PARAMS, grid, profile, n_terms=1)
    assert series.q_values[-1] >= 1.0
    assert np.isinf(series.truncation_bound)


def test_series_validation(grid17, profile):
    V = box_potential(amplitude=0.4, radius=1.0)
    with pytest.raises(ValueError, match="at least one"):
        build_series(V, PARAMS, grid17, profile, n_terms=0)
    other = FracParams(0.75, 1)
    with pytest.raises(ValueError, match="different parameters"):
        build_series(V, other, grid17, profile)


# -------------------------------------------------------------- signed sum

def test_sum_constant_potential_mass(const_bundle, grid17):
    # row mass of the signed sum is exactly the partial exponential sum,
    # up to the term quadrature; the gap to e^{-c t} then obeys the
    # alternating remainder bound
    c, V, series = const_bundle
    for i in (0, 8, 16):
        t = float(grid17.t_nodes[i])
        total, _ = series_sum(series, t)
        mass = total.sum(axis=1).max() * grid17.dx
        x = c * t
        partial = sum((-x) ** j / math.factorial(j) for j in range(4))
        assert abs(mass - partial) < 1e-6
        assert abs(mass - math.exp(-x)) < x ** 4 / 24.0 + 1e-6


def test_sum_truncation_bound_honest(box_series, box_series5, grid17):
    # adding a term moves the sum by less than the previous tail bound
    for i in (3, 8, 16):
        t = float(grid17.t_nodes[i])
        K4, bound4 = series_sum(box_series, t)
        K5, _ = series_sum(box_series5, t)
        delta = np.abs(K5 - K4).max()
        assert delta <= bound4
        assert bound4 < 1.0


def test_sum_against_dense_propagator(box_series, grid17):
    V = box_series.V
    t = float(grid17.t_nodes[-1])
    total, bound = series_sum(box_series, t)
    err = l1_norm(total - dense_propagator(grid17, V, t), grid17.dx)
    assert err <= bound
    assert err < 1e-4


def test_sum_validation(box_series, bump_bundle):
    with pytest.raises(ValueError, match="not one of the grid times"):
        series_sum(box_series, 0.123456)
    with pytest.raises(ValueError, match="alternating"):
        series_sum(box_series, 1.0, signs="absolute")
    V, bump_series = bump_bundle
    with pytest.raises(ValueError, match="doubling_extend"):
        series_sum(bump_series, 1.0)


def test_first_term_against_riemann_sum(bump_bundle, grid17):
    # continuum Duhamel integrand on the alpha = 1/2 Poisson kernel,
    # integrated by midpoint rule in (s, z)
    V, series = bump_bundle
    t = float(grid17.t_nodes[-1])
    ix = int(np.argmin(np.abs(grid17.x_nodes + 1.0)))
    iy = int(np.argmin(np.abs(grid17.x_nodes - 0.3)))
    xs, ys = grid17.x_nodes[ix], grid17.x_nodes[iy]
    hs, hz = 5e-4, 5e-3
    sg = np.arange(hs / 2, t, hs)
    zg = np.arange(0.5 - 7.5, 0.5 + 7.5, hz) + hz / 2
    vz = V.eval(zg)

    def pois(tt, rr):
        return (1.0 / np.pi) * tt / (tt * tt + rr * rr)

    acc = 0.0
    for s in sg:
        acc += np.sum(pois(t - s, xs - zg) * vz * pois(s, zg - ys))
    riemann = acc * hs * hz
    lattice = series.terms[1][-1][ix, iy]
    assert abs(lattice - riemann) / abs(riemann) < 1e-2


# -------------------------------------------------------- term-wise bounds

def test_lattice_c1_report(box_series, grid17):
    rep = lattice_c1(box_series)
    # periodization and band limiting push the lattice constant above the
    # continuum 1/pi; the worst point sits at the earliest time
    assert 1.0 / np.pi < rep.empirical_constant < 2.5
    assert math.isclose(rep.worst_point[0], float(grid17.t_nodes[0]))
    assert rep.margin > 0.0
    assert rep.n_samples == 17 * 128
    for i, t in enumerate(grid17.t_nodes):
        ratio = np.abs(box_series.terms[0][i]) / comparison_I(
            PARAMS, float(t), periodic_distances(grid17))
        assert ratio.max() <= rep.empirical_constant * (1 + 1e-12)


def test_verify_33_per_term_ratios(box_series, profile):
    c1 = lattice_c1(box_series).empirical_constant
    curve = kato_norm_curve(box_series.V, profile)
    reports = verify_33(box_series, c1, profile.omega_const, curve)
    assert len(reports) == 5
    assert abs(reports[0].empirical_constant - 1.0) < 1e-9
    bands = [(0.1, 0.3), (0.02, 0.09), (0.004, 0.02), (5e-4, 4e-3)]
    for rep, (lo, hi) in zip(reports[1:], bands):
        assert lo < rep.empirical_constant < hi
    assert reports[0].n_samples == 17 * 128
    assert reports[1].n_samples == 17 * 128 * 128


def test_verify_33_zero_potential(zero_series, profile):
    c1 = lattice_c1(zero_series).empirical_constant
    curve = kato_norm_curve(zero_series.V, profile)
    reports = verify_33(zero_series, c1, profile.omega_const, curve)
    for rep in reports[1:]:
        assert rep.empirical_constant == 0.0


def test_verify_33_curve_must_cover_grid(box_series, profile):
    short = kato_norm_curve(box_series.V, profile,
                            t_grid=np.geomspace(0.01, 1.0, 5))
    c1 = lattice_c1(box_series).empirical_constant
    with pytest.raises(ValueError, match="does not cover"):
        verify_33(box_series, c1, profile.omega_const, short)


# ------------------------------------------------------- product inequality

def test_product_inequality_random_sweep():
    rep = product_inequality_check(PARAMS, seed=0)
    assert rep.empirical_constant <= 2.0 + 1e-9
    assert abs(rep.empirical_constant - 1.9996621610589649) < 1e-9
    assert rep.margin > 0.0
    assert rep.n_samples == 100000
    assert len(rep.worst_point) == 4
    rep1 = product_inequality_check(PARAMS, seed=1)
    assert rep1.empirical_constant <= 2.0 + 1e-9
    assert abs(rep1.empirical_constant - rep.empirical_constant) < 0.01


def test_product_inequality_explicit_samples():
    # t = s, x = y = 0 attains C4 = 2 exactly at alpha = 1/2, n = 1:
    # the ratio reduces to I(t,0)/I(2t,0) = 2
    rep = product_inequality_check(PARAMS, samples=[[1.0, 1.0, 0.0, 0.0]])
    assert rep.empirical_constant == 2.0
    # generic point in the tail branch: ratio = (2/9) / (2/3) = 1/3
    rep = product_inequality_check(PARAMS,
                                   samples=[[0.5, 1.0, 1.5, -0.5]])
    assert math.isclose(rep.empirical_constant, 1.0 / 3.0, rel_tol=1e-12)


def test_product_inequality_validation():
    with pytest.raises(ValueError, match="rows"):
        product_inequality_check(PARAMS, samples=[[1.0, 1.0, 0.0]])
    with pytest.raises(ValueError, match="positive"):
        product_inequality_check(PARAMS, samples=[[1.0, -1.0, 0.0, 0.0]])


# --------------------------------------------------------------- resolvent

def test_resolvent_closed_form():
    # int_0^infty e^{-t} (1/pi) t/(t^2+r^2) dt in terms of sine and
    # cosine integrals
    radii = np.array([0.5, 1.0, 2.0])
    rk = resolvent_kernel(PARAMS, 1.0, radii)
    si, ci = sici(radii)
    exact = (-ci * np.cos(radii) + (np.pi / 2 - si) * np.sin(radii)) / np.pi
    rel = np.abs(rk.radial.values - exact) / exact
    assert rel.max() < 1e-6
    assert math.isclose(rk.radial.values[1], 0.1093005998610483, rel_tol=1e-8)


def test_resolvent_scaling_identity():
    # R(mu, r) = mu^{n/2a - 1} R(1, mu^{1/2a} r) holds exactly because the
    # quadrature nodes scale with 1/mu
    for params in (PARAMS, FracParams(0.75, 1)):
        a = params.alpha
        mu = 3.7
        radii = np.geomspace(0.1, 5.0, 7)
        left = resolvent_kernel(params, mu, radii).radial.values
        right = resolvent_kernel(params, 1.0,
                                 radii * mu ** (1 / (2 * a))).radial.values
        right = mu ** (1.0 / (2 * a) - 1.0) * right
        assert np.abs(left / right - 1.0).max() < 1e-10


def test_resolvent_origin_rules():
    with pytest.raises(ValueError, match="diverges"):
        resolvent_kernel(PARAMS, 1.0, [0.0, 1.0])
    rk = resolvent_kernel(FracParams(0.75, 1), 1.0, [0.0, 1.0])
    assert rk.radial.values[0] > rk.radial.values[1] > 0


def test_resolvent_validation():
    with pytest.raises(ValueError, match="positive"):
        resolvent_kernel(PARAMS, -1.0, [1.0])
    with pytest.raises(ValueError, match="increasing"):
        resolvent_kernel(PARAMS, 1.0, [2.0, 1.0])
    with pytest.raises(ValueError, match="positive"):
        resolvent_bound_check(PARAMS, mu_sweep=(0.0,))


def test_resolvent_bound_constant(profile):
    rep = resolvent_bound_check(PARAMS)
    # the ratio climbs toward 1/pi in the far tail; the default sweep
    # stops at r = 500/mu
    assert abs(rep.empirical_constant - 0.31755193167443796) < 1e-6
    assert rep.empirical_constant < 1.0 / np.pi
    assert rep.worst_point[0] == 0.1
    assert rep.worst_point[1] > 100.0
    assert rep.n_samples == 240


def test_resolvent_bound_mu_collapse():
    # with the auto radial sweep the ratio profile is mu-independent
    a = resolvent_bound_check(PARAMS, mu_sweep=(0.5,))
    b = resolvent_bound_check(PARAMS, mu_sweep=(2.0,))
    assert math.isclose(a.empirical_constant, b.empirical_constant,
                        rel_tol=1e-9)


def test_resolvent_bound_refinement_stable():
    base = resolvent_bound_check(PARAMS, mu_sweep=(0.1,))
    dense = resolvent_bound_check(
        PARAMS, mu_sweep=(0.1,),
        r_sweep=np.geomspace(0.01, 50.0, 160) * 0.1 ** -1.0)
    assert base.empirical_constant <= dense.empirical_constant * (1 + 1e-9)
    assert dense.empirical_constant < base.empirical_constant * 1.02


def test_resolvent_bound_profile_mismatch(profile):
    other = FracParams(0.75, 1)
    with pytest.raises(ValueError, match="different parameters"):
        resolvent_bound_check(other, profile=profile)


# ------------------------------------------------------ Laplace consistency

def test_laplace_consistency_terms(laplace_bundle):
    series, rterms = laplace_bundle
    report = laplace_consistency(series, rterms, 2.0)
    assert report.per_term[0] < 1e-12
    assert report.per_term[1] < 1e-2
    assert report.per_term[2] < 1e-2
    assert report.max_error == max(report.per_term)
    assert tuple(report) == report.per_term
    assert len(report) == 3


def test_laplace_consistency_short_horizon(box_series):
    rterms = lattice_resolvent_terms(box_series, 2.0)
    with pytest.raises(TimeHorizonError) as exc:
        laplace_consistency(box_series, rterms, 2.0)
    assert 1.0 < exc.value.required_t < 50.0


def test_laplace_validation(laplace_bundle):
    series, rterms = laplace_bundle
    with pytest.raises(ValueError, match="positive"):
        laplace_consistency(series, rterms, -2.0)
    with pytest.raises(ValueError, match="positive"):
        lattice_resolvent_terms(series, 0.0)


def test_lattice_resolvent_term_shapes(laplace_bundle):
    series, rterms = laplace_bundle
    assert len(rterms) == 3
    n = series.grid.n_points
    for r in rterms:
        assert r.shape == (n, n)
    # R_0 row mass is 1/mu exactly: the zero mode of 1/(mu + symbol)
    mass = rterms[0].sum(axis=1) * series.grid.dx
    assert np.allclose(mass, 0.5, rtol=1e-12)


# ---------------------------------------------------------------- doubling

def test_comparison_mass_closed_form():
    assert comparison_mass_constant(PARAMS) == 4.0
    assert comparison_mass_constant(FracParams(0.75, 1)) == 2.0 * (1 + 1 / 1.5)
    # quadrature check: 2 int_0^R min(t/x^2, 1/t) dx + tail 2t/R
    t, R = 0.5, 400.0
    x = np.linspace(1e-6, R, 400001)
    val = 2.0 * np.trapezoid(np.minimum(t / x ** 2, 1.0 / t), x) + 2.0 * t / R
    assert math.isclose(val, 4.0, rel_tol=1e-3)


def test_doubling_free_kernel(grid17, k0_17):
    t = float(grid17.t_nodes[8])
    K_t, pref = doubling_extend(scipy_circulant(k0_17[8]), grid17,
                                prefactor=2.0 / np.pi, params=PARAMS)
    exact = free_matrix(grid17, 2 * t)
    assert np.abs(K_t - exact).max() / np.abs(exact).max() < 1e-12
    # prefactor chain: 2 C4 C8 pref^2 with C4 = 2, C8 = 4
    assert math.isclose(pref, 64.0 / np.pi ** 2, rel_tol=1e-12)


def test_doubling_without_chain(grid17, k0_17):
    K_t, pref = doubling_extend(scipy_circulant(k0_17[8]), grid17)
    assert pref is None
    with pytest.raises(ValueError, match="params are required"):
        doubling_extend(scipy_circulant(k0_17[8]), grid17, prefactor=0.5)


def test_doubling_shape_validation(grid17, k0_17):
    with pytest.raises(ValueError, match="full"):
        doubling_extend(k0_17, grid17)


def test_doubling_seam_guard():
    # heavy tails on a short box: the minimum-image far zone holds far
    # more than 1% of each row's mass
    grid = make_grid(PARAMS, N=64, L=20.0, T=1.0, n_times=3)
    K = free_matrix(grid, 1.0)
    with pytest.raises(DomainSizeError) as exc:
        doubling_extend(K, grid)
    assert exc.value.required_length > 20.0
    assert "seam" in str(exc.value)
    doubling_extend(K, grid, mass_tol=0.5)


def test_doubling_matches_direct_series(box_series5, grid17, profile):
    t_half = float(grid17.t_nodes[8])
    K_half, bound_half = series_sum(box_series5, t_half)
    K_dbl, _ = doubling_extend(K_half, grid17, mass_tol=0.05)
    grid2 = make_grid(PARAMS, N=128, L=60.0, T=2 * t_half, n_times=17)
    series2 = build_series(box_series5.V, PARAMS, grid2, profile, n_terms=5)
    K_direct, bound_direct = series_sum(series2, 2 * t_half)
    assert np.abs(K_dbl - K_direct).max() < 1e-6
    assert np.abs(K_dbl - K_direct).max() < bound_half + bound_direct


def test_repeated_doubling_against_propagator(box_series5, grid17):
    V = box_series5.V
    t = float(grid17.t_nodes[8])
    K_half, _ = series_sum(box_series5, t)
    K1, _ = doubling_extend(K_half, grid17, mass_tol=0.05)
    e1 = l1_norm(K1 - dense_propagator(grid17, V, 2 * t), grid17.dx)
    K2, _ = doubling_extend(K1, grid17, mass_tol=0.05)
    e2 = l1_norm(K2 - dense_propagator(grid17, V, 4 * t), grid17.dx)
    assert e1 < 1e-5
    assert e2 < 5.0 * e1 + 1e-12
