"""Scalar functional algebra: identities, fiber map, manifold energy."""
import math

import numpy as np
import pytest

from spslab import (EnergyBreakdown, ManifoldError, ProblemParams,
                    RadialFunction, breakdown, e_norm, energy, eps_exponent,
                    fiber_energy, fiber_project, m_functional, make_grid,
                    manifold_energy, nehari, pohozaev_identity,
                    pohozaev_manifold, scale_breakdown)

RNG_SEED = 20240817

BD = EnergyBreakdown(A=1.0, B=1.0, C=2.0, D=2.4, p=4.0)


def test_eps_exponent_values():
    assert eps_exponent(4.0) == pytest.approx(-0.5, rel=1e-15)
    assert eps_exponent(5.0) == pytest.approx(-3.0 / 8.0, rel=1e-15)


def test_breakdown_validation():
    with pytest.raises(ValueError, match="p outside"):
        EnergyBreakdown(1.0, 1.0, 1.0, 1.0, p=2.5)
    with pytest.raises(ValueError):
        EnergyBreakdown(-1.0, 1.0, 1.0, 1.0, p=4.0)
    with pytest.raises(ValueError):
        EnergyBreakdown(1.0, math.nan, 1.0, 1.0, p=4.0)


def test_problem_params_validation():
    ProblemParams(p=4.0, eps=0.0)
    with pytest.raises(ValueError):
        ProblemParams(p=4.0, eps=-0.1)
    with pytest.raises(ValueError, match="p outside"):
        ProblemParams(p=7.0, eps=1.0)
    with pytest.raises(ValueError):
        ProblemParams(p=4.0, eps=1.0, lam=-2.0)
    with pytest.raises(ValueError, match="inconsistent"):
        ProblemParams(p=4.0, eps=0.9, lam=4.0)


def test_problem_params_from_lambda():
    pp = ProblemParams.from_lambda(p=4.0, lam=4.0)
    assert pp.eps == pytest.approx(0.5, rel=1e-15)
    assert pp.lam == 4.0
    pp5 = ProblemParams.from_lambda(p=5.0, lam=256.0)
    assert pp5.eps == pytest.approx(0.125, rel=1e-15)


def test_energy_examples():
    assert energy(BD, 0.0) == pytest.approx(0.4, abs=1e-15)
    assert energy(BD, 1.0) == pytest.approx(0.9, abs=1e-15)
    zero = EnergyBreakdown(0.0, 0.0, 0.0, 0.0, p=4.0)
    assert energy(zero, 1.0) == 0.0


def test_nehari_examples():
    assert nehari(BD, 0.0) == pytest.approx(0.6, abs=1e-15)
    constructed = EnergyBreakdown(1.0, 0.4, 2.0, 3.4, p=4.0)
    assert nehari(constructed, 1.0) == pytest.approx(0.0, abs=1e-15)


def test_pohozaev_identity_examples():
    assert pohozaev_identity(BD, 0.0) == pytest.approx(1.2, abs=1e-14)


def test_pohozaev_manifold_examples():
    assert pohozaev_manifold(BD, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert pohozaev_manifold(BD, 1.0) == pytest.approx(0.5, abs=1e-15)


def test_combination_identity_random_breakdowns():
    rng = np.random.default_rng(RNG_SEED)
    for _ in range(100):
        p = float(rng.uniform(3.05, 5.95))
        bd = EnergyBreakdown(*(rng.uniform(0.01, 10.0, size=4)), p=p)
        eps = float(rng.uniform(0.0, 2.0))
        lhs = pohozaev_manifold(bd, eps)
        rhs = 2.0 * nehari(bd, eps) - pohozaev_identity(bd, eps)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, bd.scale)


def test_fiber_energy_matches_energy_at_one():
    assert fiber_energy(BD, 0.0, 1.0) == pytest.approx(energy(BD, 0.0),
                                                       abs=1e-15)
    assert fiber_energy(BD, 0.0, 2.0) == pytest.approx(-11.2, abs=1e-12)
    with pytest.raises(ValueError):
        fiber_energy(BD, 0.0, 0.0)


def test_fiber_energy_vanishes_at_origin():
    assert fiber_energy(BD, 1.0, 1e-9) == pytest.approx(0.0, abs=1e-8)


def test_scale_breakdown_powers():
    t = 1.7
    bd_t = scale_breakdown(BD, t)
    assert bd_t.A == pytest.approx(t ** 3 * BD.A, rel=1e-14)
    assert bd_t.B == pytest.approx(t * BD.B, rel=1e-14)
    assert bd_t.C == pytest.approx(t ** 3 * BD.C, rel=1e-14)
    assert bd_t.D == pytest.approx(t ** 5 * BD.D, rel=1e-14)


def test_fiber_project_limit_closed_form():
    # eps=0 root from (3/2)(A + C/2) t^2 = ((2p-3)/p) D t^{2p-4}
    assert fiber_project(BD, 0.0) == pytest.approx(1.0, abs=1e-10)
    easy = EnergyBreakdown(1.0, 1.0, 2.0, 1.2, p=4.0)
    assert fiber_project(easy, 0.0) == pytest.approx(math.sqrt(2.0),
                                                     rel=1e-10)


def test_fiber_project_quartic_case():
    # p=4, eps=1 reduces to 3t^4 - 3t^2 - 0.5 = 0, quadratic in t^2
    exact = math.sqrt((1.0 + math.sqrt(5.0 / 3.0)) / 2.0)
    assert fiber_project(BD, 1.0) == pytest.approx(exact, rel=1e-10)
    assert fiber_project(BD, 1.0) == pytest.approx(1.070280, abs=1e-6)


def test_fiber_project_puts_point_on_manifold():
    rng = np.random.default_rng(RNG_SEED)
    for _ in range(25):
        p = float(rng.uniform(3.1, 5.9))
        bd = EnergyBreakdown(*(rng.uniform(0.05, 5.0, size=4)), p=p)
        eps = float(rng.uniform(0.0, 1.5))
        t = fiber_project(bd, eps)
        res = pohozaev_manifold(scale_breakdown(bd, t), eps)
        assert abs(res) <= 1e-10 * max(1.0, bd.scale)


def test_fiber_project_matches_bisection():
    rng = np.random.default_rng(RNG_SEED + 1)
    for _ in range(10):
        bd = EnergyBreakdown(*(rng.uniform(0.1, 3.0, size=4)), p=4.5)
        eps = float(rng.uniform(0.0, 1.0))

        def g(t):
            return pohozaev_manifold(scale_breakdown(bd, t), eps) / t

        lo, hi = 1e-6, 1.0
        while g(hi) > 0.0:
            hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if g(mid) > 0.0:
                lo = mid
            else:
                hi = mid
        assert fiber_project(bd, eps) == pytest.approx(0.5 * (lo + hi),
                                                       rel=1e-10)


def test_fiber_project_increasing_in_eps():
    roots = [fiber_project(BD, e) for e in (0.0, 0.5, 1.0, 2.0)]
    assert all(b > a for a, b in zip(roots, roots[1:]))


def test_fiber_project_rejects_zero():
    with pytest.raises(ValueError, match="no maximizer"):
        fiber_project(EnergyBreakdown(1.0, 1.0, 1.0, 0.0, p=4.0), 0.0)


def test_fiber_root_is_energy_maximizer():
    t_star = fiber_project(BD, 1.0)
    e_star = fiber_energy(BD, 1.0, t_star)
    for t in (0.5 * t_star, 0.9 * t_star, 1.1 * t_star, 2.0 * t_star):
        assert fiber_energy(BD, 1.0, t) < e_star


def test_manifold_energy_on_manifold():
    assert manifold_energy(BD, 0.0) == pytest.approx(0.4, abs=1e-14)
    # no B dependence at eps=0
    heavy_b = EnergyBreakdown(1.0, 99.0, 2.0, 2.4, p=4.0)
    assert manifold_energy(heavy_b, 0.0) == pytest.approx(0.4, abs=1e-14)


def test_manifold_energy_rejects_off_manifold():
    with pytest.raises(ManifoldError):
        manifold_energy(BD, 1.0)


def test_manifold_energy_matches_energy_after_projection():
    rng = np.random.default_rng(RNG_SEED + 2)
    for _ in range(10):
        bd = EnergyBreakdown(*(rng.uniform(0.1, 4.0, size=4)), p=4.8)
        eps = float(rng.uniform(0.0, 1.0))
        bd_t = scale_breakdown(bd, fiber_project(bd, eps))
        assert manifold_energy(bd_t, eps) == pytest.approx(
            energy(bd_t, eps), rel=1e-9)


def test_m_functional_and_e_norm_examples():
    bd1 = EnergyBreakdown(0.25, 0.0, 0.04, 0.0, p=4.0)
    assert m_functional(bd1) == pytest.approx(0.29, abs=1e-15)
    assert e_norm(bd1) == pytest.approx(math.sqrt(0.45), rel=1e-14)
    # sandwich (1/2)|u|_E^4 <= M(u) <= |u|_E^2 in the small regime
    assert 0.5 * e_norm(bd1) ** 4 <= m_functional(bd1) <= e_norm(bd1) ** 2
    bd2 = EnergyBreakdown(1.0, 0.0, 4.0, 0.0, p=4.0)
    assert m_functional(bd2) == 5.0
    assert e_norm(bd2) == pytest.approx(math.sqrt(3.0), rel=1e-14)
    zero = EnergyBreakdown(0.0, 0.0, 0.0, 0.0, p=4.0)
    assert m_functional(zero) == 0.0
    assert e_norm(zero) == 0.0


def test_breakdown_exponential_profile():
    g = make_grid(n=4097, r_max=40.0)
    u = RadialFunction.from_callable(g, lambda r: np.exp(-r))
    bd = breakdown(u, 4.0)
    assert bd.A == pytest.approx(math.pi, rel=1e-7)
    assert bd.B == pytest.approx(math.pi, rel=1e-7)
    assert bd.D == pytest.approx(math.pi / 8.0, rel=1e-7)
    assert bd.C == pytest.approx(5.0 * math.pi / 32.0, rel=1e-5)


def test_breakdown_zero_profile():
    g = make_grid(n=64, r_max=5.0)
    bd = breakdown(RadialFunction(g, np.zeros(64)), 4.0)
    assert (bd.A, bd.B, bd.C, bd.D) == (0.0, 0.0, 0.0, 0.0)


def test_breakdown_rejects_bad_p():
    g = make_grid(n=64, r_max=5.0)
    u = RadialFunction.from_callable(g, lambda r: np.exp(-r))
    with pytest.raises(ValueError, match="p outside"):
        breakdown(u, 2.5)


def test_breakdown_rejects_non_decaying():
    g = make_grid(n=64, r_max=5.0)
    with pytest.raises(ValueError, match="decay"):
        breakdown(RadialFunction(g, np.ones(64)), 4.0)


def test_breakdown_scaling_laws():
    g = make_grid(n=2049, r_max=24.0)
    base = breakdown(
        RadialFunction.from_callable(g, lambda r: np.exp(-r * r / 2.0)), 4.0)
    for t in (0.5, 2.0):
        ut = RadialFunction.from_callable(
            g, lambda r: t * t * np.exp(-((t * r) ** 2) / 2.0))
        bd_t = breakdown(ut, 4.0)
        assert bd_t.A == pytest.approx(t ** 3 * base.A, rel=1e-6)
        assert bd_t.B == pytest.approx(t * base.B, rel=1e-6)
        assert bd_t.C == pytest.approx(t ** 3 * base.C, rel=1e-6)
        assert bd_t.D == pytest.approx(t ** 5 * base.D, rel=1e-6)


def test_growth_ratio_scale_invariance():
    # D / M^{(2p-3)/3} is invariant under the profile scaling family
    g = make_grid(n=2049, r_max=24.0)
    p = 4.0
    base = breakdown(
        RadialFunction.from_callable(g, lambda r: np.exp(-r * r / 2.0)), p)
    ratio0 = base.D / m_functional(base) ** ((2.0 * p - 3.0) / 3.0)
    for t in (0.5, 2.0):
        ut = RadialFunction.from_callable(
            g, lambda r: t * t * np.exp(-((t * r) ** 2) / 2.0))
        bd_t = breakdown(ut, p)
        ratio = bd_t.D / m_functional(bd_t) ** ((2.0 * p - 3.0) / 3.0)
        assert ratio == pytest.approx(ratio0, rel=1e-6)
