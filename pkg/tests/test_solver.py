"""Ground-state solver: convergence, cross-checks, persistence."""
import dataclasses
import logging

import numpy as np
import pytest

from spslab import (ContinuationInit, FileInit, ProblemParams, RadialFunction,
                    SolverConfig, SolverError, ground_state, load_solution,
                    make_grid, reconcile_candidates, save_solution,
                    scf_cross_check, solution_from_json, solution_to_json,
                    verify)

COARSE = SolverConfig(n=1025, r_max=20.0, tol_residual=1e-5, max_iters=300)


@pytest.fixture(scope="module")
def sol_eps1():
    return ground_state(ProblemParams(p=4.0, eps=1.0), COARSE)


@pytest.fixture(scope="module")
def sol_eps0():
    return ground_state(ProblemParams(p=4.0, eps=0.0), COARSE)


def test_ground_state_converges(sol_eps1):
    assert sol_eps1.converged
    assert sol_eps1.m > 0.0
    sc = sol_eps1.bd.scale
    assert abs(sol_eps1.residuals["nehari"]) <= 1e-5 * sc
    assert abs(sol_eps1.residuals["pohozaev_identity"]) <= 1e-5 * sc


def test_limit_problem_converges(sol_eps0, sol_eps1):
    assert sol_eps0.converged
    # the limit energy sits strictly below every positive-eps energy
    assert 0.0 < sol_eps0.m < sol_eps1.m


def test_profile_positive_strictly_decreasing(sol_eps1):
    vals = sol_eps1.u.values[:-1]
    assert np.all(vals > 0.0)
    assert np.all(np.diff(vals) < 0.0)
    assert sol_eps1.u.values[-1] == 0.0


def test_min_m_functional_tracked(sol_eps1):
    assert np.isfinite(sol_eps1.min_m_functional)
    assert sol_eps1.min_m_functional > 0.0


def test_potential_stored_and_positive(sol_eps1):
    phi = sol_eps1.phi.values
    assert np.all(phi[:-1] > 0.0)
    assert np.all(np.diff(phi) <= 0.0)


def test_negative_coulomb_coefficient_rejected():
    with pytest.raises(ValueError, match=">= 0"):
        ground_state(ProblemParams(p=4.0, eps=1.0), COARSE, coulomb_coeff=-1.0)


def test_scf_requires_positive_eps():
    with pytest.raises(SolverError, match="eps>0"):
        scf_cross_check(ProblemParams(p=4.0, eps=0.0), COARSE)


def test_scf_requires_uniform_grid():
    cfg = SolverConfig(n=257, r_max=20.0, stretch=1.3)
    with pytest.raises(SolverError, match="uniform"):
        scf_cross_check(ProblemParams(p=4.0, eps=1.0), cfg)


def test_scf_matches_descent(sol_eps1):
    # one refinement level up: the shooting route needs it for tol 1e-5
    cfg = dataclasses.replace(COARSE, n=2049)
    scf = scf_cross_check(ProblemParams(p=4.0, eps=1.0), cfg)
    assert scf.converged
    assert scf.m == pytest.approx(sol_eps1.m, rel=1e-3)
    gap = np.max(np.abs(scf.u.values[::2] - sol_eps1.u.values))
    assert gap <= 1e-3 * np.max(sol_eps1.u.values)


def test_verify_reproduces_stored_residuals(sol_eps1):
    rep = verify(sol_eps1)
    assert rep.passed
    assert not rep.empty
    assert rep.nehari == pytest.approx(sol_eps1.residuals["nehari"],
                                       abs=1e-13 * rep.scale)
    lines = rep.lines()
    assert len(lines) == 5
    assert lines[-1].startswith("verdict: pass")


def test_verify_flags_scaled_profile(sol_eps1):
    bad = dataclasses.replace(
        sol_eps1, u=RadialFunction(sol_eps1.u.grid, 1.1 * sol_eps1.u.values))
    rep = verify(bad)
    assert not rep.passed
    rel = abs(rep.nehari) / rep.scale
    assert 0.01 < rel < 1.0
    assert "FAIL" in "\n".join(rep.lines())


def test_verify_empty_profile(sol_eps1):
    g = sol_eps1.u.grid
    empty = dataclasses.replace(sol_eps1,
                                u=RadialFunction(g, np.zeros(g.n)))
    rep = verify(empty)
    assert rep.empty
    assert not rep.passed
    assert rep.lines() == ["empty solution (identically zero profile)"]


def test_reconcile_prefers_lower_energy(sol_eps1, sol_eps0, caplog):
    with caplog.at_level(logging.WARNING, logger="spslab.solver"):
        pick = reconcile_candidates(sol_eps1, sol_eps0)
    assert pick is sol_eps0
    assert "disagree" in caplog.text
    assert reconcile_candidates(sol_eps0, sol_eps1) is sol_eps0


def test_json_round_trip_is_byte_identical(sol_eps1):
    text = solution_to_json(sol_eps1)
    again = solution_from_json(text)
    assert solution_to_json(again) == text
    assert again.m == sol_eps1.m
    assert again.converged == sol_eps1.converged
    assert again.params == sol_eps1.params
    assert np.array_equal(again.u.values, sol_eps1.u.values)


def test_save_load_round_trip(sol_eps1, tmp_path):
    path = str(tmp_path / "sol.json")
    save_solution(sol_eps1, path)
    loaded = load_solution(path)
    assert solution_to_json(loaded) == solution_to_json(sol_eps1)


def test_iteration_cap_reports_unconverged():
    cfg = SolverConfig(n=257, r_max=16.0, tol_residual=1e-9, max_iters=1,
                       newton=False)
    sol = ground_state(ProblemParams(p=4.0, eps=1.0), cfg)
    assert not sol.converged
    assert np.isfinite(sol.m)


def test_file_init_round_trip(sol_eps1, tmp_path):
    path = tmp_path / "profile.csv"
    path.write_text(sol_eps1.u.to_csv_text())
    cfg = dataclasses.replace(COARSE, init=FileInit(str(path)))
    sol = ground_state(ProblemParams(p=4.0, eps=1.0), cfg)
    assert sol.converged
    assert sol.m == pytest.approx(sol_eps1.m, rel=1e-8)


def test_zero_file_init_collapses(tmp_path):
    g = make_grid(n=64, r_max=10.0)
    path = tmp_path / "zero.csv"
    path.write_text(RadialFunction(g, np.zeros(64)).to_csv_text())
    cfg = SolverConfig(n=257, r_max=16.0, init=FileInit(str(path)))
    with pytest.raises(SolverError, match="collapse"):
        ground_state(ProblemParams(p=4.0, eps=1.0), cfg)


def test_continuation_init_tracks_branch(sol_eps1):
    cfg = dataclasses.replace(COARSE, init=ContinuationInit(sol_eps1))
    sol = ground_state(ProblemParams(p=4.0, eps=0.7), cfg)
    assert sol.converged
    assert sol.m < sol_eps1.m


def test_config_validation():
    with pytest.raises(ValueError, match="tol_residual"):
        SolverConfig(tol_residual=0.0)
    with pytest.raises(ValueError, match="max_iters"):
        SolverConfig(max_iters=0)
