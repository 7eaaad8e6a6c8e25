"""Grid, quadrature, differentiation, and serialization tests."""
import math

import numpy as np
import pytest

from spslab import (GridError, RadialFunction, apply_laplacian,
                    cumulative_integral, derivative, grid_from_nodes,
                    integrate, lp_power, make_grid, resample)

RNG_SEED = 20240817


def test_uniform_grid_spacing():
    g = make_grid(n=16, r_max=40.0)
    assert g.uniform
    assert g.nodes[0] == 0.0
    assert g.nodes[-1] == 40.0
    steps = np.diff(g.nodes)
    assert np.allclose(steps, 40.0 / 15.0, rtol=1e-14)


def test_grid_rejects_small_n():
    with pytest.raises(GridError):
        make_grid(n=5, r_max=4.0)


def test_grid_rejects_bad_domain():
    with pytest.raises(GridError, match="non-positive domain"):
        make_grid(n=16, r_max=-1.0)


def test_grid_rejects_bad_stretch():
    with pytest.raises(GridError):
        make_grid(n=32, r_max=10.0, stretch=0.5)


def test_stretched_grid_is_geometric():
    g = make_grid(n=64, r_max=30.0, stretch=4.0)
    assert not g.uniform
    steps = np.diff(g.nodes)
    assert g.nodes[0] == 0.0
    assert g.nodes[-1] == pytest.approx(30.0, rel=1e-13)
    assert steps[-1] / steps[0] == pytest.approx(4.0, rel=1e-10)
    ratios = steps[1:] / steps[:-1]
    assert np.allclose(ratios, ratios[0], rtol=1e-10)


def test_quadrature_weights_sum_to_domain_length():
    for n in (16, 17, 256, 257):
        g = make_grid(n=n, r_max=7.0)
        assert np.sum(g.weights) == pytest.approx(7.0, rel=1e-12)


def test_integrate_exponential_oracle():
    # 4*pi * int r^2 e^{-2r} dr = 4*pi/4 = pi
    g = make_grid(n=4096, r_max=40.0)
    f = RadialFunction.from_callable(g, lambda r: np.exp(-2.0 * r))
    assert integrate(f) == pytest.approx(math.pi, rel=1e-8)


def test_integrate_zero():
    g = make_grid(n=64, r_max=5.0)
    f = RadialFunction(g, np.zeros(64))
    assert integrate(f) == 0.0


def test_integrate_ball_volume():
    g = make_grid(n=257, r_max=1.0)
    f = RadialFunction(g, np.ones(257))
    assert integrate(f) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-12)


def test_integrate_linearity():
    rng = np.random.default_rng(RNG_SEED)
    g = make_grid(n=129, r_max=8.0)
    f = RadialFunction(g, rng.normal(size=129))
    h = RadialFunction(g, rng.normal(size=129))
    a, b = 2.5, -0.75
    combo = RadialFunction(g, a * f.values + b * h.values)
    assert integrate(combo) == pytest.approx(
        a * integrate(f) + b * integrate(h), rel=1e-12, abs=1e-12)


def test_quadrature_convergence_order():
    errs = []
    for n in (257, 513, 1025):
        g = make_grid(n=n, r_max=40.0)
        f = RadialFunction.from_callable(g, lambda r: np.exp(-2.0 * r))
        errs.append(abs(integrate(f) - math.pi))
    # scheme is at least 4th order: halving h cuts the error by ~16
    assert errs[0] / errs[1] > 8.0
    assert errs[1] / errs[2] > 8.0


def test_lp_power_exponential_oracles():
    g = make_grid(n=4097, r_max=40.0)
    u = RadialFunction.from_callable(g, lambda r: np.exp(-r))
    assert lp_power(u, 2.0) == pytest.approx(math.pi, rel=1e-7)
    assert lp_power(u, 4.0) == pytest.approx(math.pi / 8.0, rel=1e-7)


def test_lp_power_zero_profile():
    g = make_grid(n=32, r_max=3.0)
    assert lp_power(RadialFunction(g, np.zeros(32)), 3.0) == 0.0


def test_lp_power_rejects_small_exponent():
    g = make_grid(n=32, r_max=3.0)
    with pytest.raises(ValueError):
        lp_power(RadialFunction(g, np.ones(32)), 0.5)


def test_derivative_linear_profile():
    g = make_grid(n=33, r_max=8.0)
    u = RadialFunction(g, g.nodes.copy())
    du = derivative(u, regular=False)
    assert np.allclose(du.values, 1.0, atol=1e-11)


def test_derivative_constant_profile():
    g = make_grid(n=33, r_max=8.0)
    du = derivative(RadialFunction(g, np.full(33, 4.2)), regular=False)
    assert np.allclose(du.values, 0.0, atol=1e-11)


def test_derivative_exponential_pointwise():
    g = make_grid(n=257, r_max=8.0)
    u = RadialFunction.from_callable(g, lambda r: np.exp(-r))
    du = derivative(u, regular=False)
    i = np.argmin(np.abs(g.nodes - 1.0))
    h = g.h
    assert abs(du.values[i] - (-math.exp(-1.0))) < h ** 2


def test_derivative_regular_flag_zeroes_origin():
    g = make_grid(n=257, r_max=8.0)
    u = RadialFunction.from_callable(g, lambda r: np.exp(-r * r))
    du = derivative(u, regular=True)
    assert du.values[0] == 0.0
    # interior still accurate
    i = np.argmin(np.abs(g.nodes - 1.0))
    exact = -2.0 * math.exp(-1.0)
    assert du.values[i] == pytest.approx(exact, rel=1e-6)


def test_integration_by_parts_consistency():
    # 4*pi int f' g r^2 dr + 4*pi int f g' r^2 dr + 8*pi int f g r dr = 0
    # for decaying f, g (boundary terms vanish); checked within O(h^2)
    g = make_grid(n=513, r_max=20.0)
    f = RadialFunction.from_callable(g, lambda r: np.exp(-r))
    w = RadialFunction.from_callable(g, lambda r: np.exp(-r * r / 2.0))
    df = derivative(f, regular=False)
    dw = derivative(w, regular=True)
    lhs = integrate(RadialFunction(g, df.values * w.values))
    lhs += integrate(RadialFunction(g, f.values * dw.values))
    r = g.nodes
    cross = integrate(RadialFunction(g, np.where(r > 0, 2.0 * f.values * w.values / np.maximum(r, 1e-300), 0.0)))
    # the r-weighted cross term: d/dr(f g r^2) = (f'g + fg')r^2 + 2 f g r
    assert lhs + cross == pytest.approx(0.0, abs=1e-4)


def test_apply_laplacian_gaussian():
    # lap e^{-r^2} = (4r^2 - 6) e^{-r^2}
    errs = []
    for n in (257, 513):
        g = make_grid(n=n, r_max=10.0)
        vals = np.exp(-g.nodes ** 2)
        lap = apply_laplacian(g, vals)
        exact = (4.0 * g.nodes ** 2 - 6.0) * np.exp(-g.nodes ** 2)
        errs.append(np.max(np.abs(lap - exact)[:-1]))
    assert errs[0] < 1e-4
    assert errs[0] / errs[1] > 8.0


def test_cumulative_integral_polynomial():
    x = np.linspace(0.0, 2.0, 41)
    f = 3.0 * x ** 2
    F = cumulative_integral(x, f)
    assert np.allclose(F, x ** 3, atol=1e-12)


def test_cumulative_integral_exponential():
    x = np.linspace(0.0, 5.0, 201)
    F = cumulative_integral(x, np.exp(-x))
    exact = 1.0 - np.exp(-x)
    assert np.max(np.abs(F - exact)) < 1e-7


def test_csv_round_trip_bit_identical():
    rng = np.random.default_rng(RNG_SEED)
    g = make_grid(n=64, r_max=12.0)
    u = RadialFunction(g, rng.normal(size=64))
    text = u.to_csv_text()
    v = RadialFunction.from_csv_text(text)
    assert text == v.to_csv_text()
    assert np.array_equal(u.values, v.values)
    assert np.array_equal(u.grid.nodes, v.grid.nodes)


def test_csv_file_round_trip(tmp_path):
    g = make_grid(n=32, r_max=4.0)
    u = RadialFunction.from_callable(g, lambda r: np.exp(-r))
    path = tmp_path / "profile.csv"
    u.to_csv(str(path))
    v = RadialFunction.from_csv(str(path))
    assert np.array_equal(u.values, v.values)


def test_csv_rejects_bad_header():
    with pytest.raises(ValueError):
        RadialFunction.from_csv_text("x,y\n0,1\n")


def test_profile_rejects_non_finite():
    g = make_grid(n=16, r_max=1.0)
    vals = np.ones(16)
    vals[3] = np.nan
    with pytest.raises(ValueError):
        RadialFunction(g, vals)


def test_profile_rejects_length_mismatch():
    g = make_grid(n=16, r_max=1.0)
    with pytest.raises(ValueError):
        RadialFunction(g, np.ones(17))


def test_is_decaying_flag():
    g = make_grid(n=64, r_max=30.0)
    assert RadialFunction.from_callable(g, lambda r: np.exp(-r)).is_decaying
    assert not RadialFunction(g, np.ones(64)).is_decaying


def test_grid_from_nodes_round_trip():
    g = make_grid(n=48, r_max=9.0, stretch=2.0)
    g2 = grid_from_nodes(g.nodes.copy())
    assert g2.same_nodes(g)
    assert np.allclose(g2.weights, g.weights)


def test_grid_from_nodes_rejects_unsorted():
    nodes = np.linspace(0, 1, 20)
    nodes[5] = nodes[7]
    with pytest.raises(GridError):
        grid_from_nodes(nodes)


def test_resample_cubic_accuracy():
    g1 = make_grid(n=257, r_max=10.0)
    g2 = make_grid(n=193, r_max=10.0)
    u = RadialFunction.from_callable(g1, lambda r: np.exp(-r))
    v = resample(u, g2, kind="cubic")
    exact = np.exp(-g2.nodes)
    assert np.max(np.abs(v.values - exact)) < 1e-6


def test_resample_pchip_stays_nonnegative():
    g1 = make_grid(n=129, r_max=10.0)
    g2 = make_grid(n=311, r_max=10.0)
    u = RadialFunction.from_callable(g1, lambda r: np.exp(-3.0 * r))
    v = resample(u, g2, kind="pchip")
    assert np.all(v.values >= 0.0)


def test_resample_rejects_unknown_kind():
    g = make_grid(n=32, r_max=2.0)
    u = RadialFunction(g, np.zeros(32))
    with pytest.raises(ValueError):
        resample(u, g, kind="spline9")
