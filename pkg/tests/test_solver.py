import numpy as np
import pytest

from igabem import models, verification
from igabem.assembly import assemble
from igabem.model_io import build_model, parse_model
from igabem.solver import (SolveOptions, SolverError, postprocess, solve, solve_iterative,
                           solve_onestep, strain_operator)


def _system(ratio, d):
    m = build_model(parse_model(models.test1(ratio, d)))
    return m, assemble(m)


@pytest.fixture(scope="module")
def d01():
    """Test 1 geometry at d = 0.1 with a contrast the plain iteration can handle."""
    return _system(1.5, 0.1)


@pytest.fixture(scope="module")
def d01_stiff():
    return _system(4.0, 0.1)


def test_options_validation():
    with pytest.raises(ValueError):
        SolveOptions(scheme="direct")
    with pytest.raises(ValueError):
        SolveOptions(tol=0.0)
    with pytest.raises(ValueError):
        SolveOptions(max_iter=0)


def test_onestep_equals_iterative(d01):
    m, s = d01
    a = solve_onestep(s, m)
    b = solve_iterative(s, m, SolveOptions("iterative", tol=1e-13, max_iter=200))
    np.testing.assert_allclose(b.x, a.x, atol=1e-8 * np.abs(a.x).max())
    np.testing.assert_allclose(b.grid.sigma0, a.grid.sigma0, atol=1e-8 * np.abs(a.grid.sigma0).max())
    assert a.spectral_radius < 1 and b.trace[-1]["rel"] < 1e-13


def test_block_form_equals_condensed(d01_stiff):
    m, s = d01_stiff
    a = solve_onestep(s, m)
    b = solve_onestep(s, m, SolveOptions(block_form=True))
    np.testing.assert_allclose(b.x, a.x, atol=1e-10 * np.abs(a.x).max())
    np.testing.assert_allclose(b.grid.u, a.grid.u, atol=1e-10 * np.abs(a.grid.u).max())


def test_iteration_trace_decreases(d01):
    m, s = d01
    sol = solve(s, m, SolveOptions("iterative"))
    rel = [t["rel"] for t in sol.trace]
    assert rel[-1] < 1e-6 and all(b < a for a, b in zip(rel[1:], rel[2:]))
    # geometric rate close to the spectral radius
    ratio = sol.trace[-1]["dx_norm"] / sol.trace[-2]["dx_norm"]
    assert abs(ratio - sol.spectral_radius) < 0.05


def test_nonconvergence_reports_trace(d01):
    m, s = d01
    with pytest.raises(SolverError) as e:
        solve(s, m, SolveOptions("iterative", tol=1e-14, max_iter=2))
    assert len(e.value.trace) == 2


def test_spectral_radius_matches_uniaxial_factor(d01, d01_stiff):
    # a bar iterates eps <- (s + (E - E1) eps) / E, factor |1 - E1/E|
    assert 0.5 <= solve(d01[1], d01[0]).spectral_radius < 1.0
    assert solve(d01_stiff[1], d01_stiff[0]).spectral_radius > 3.0


def test_stiff_inclusion_iteration_diverges(d01_stiff):
    m, s = d01_stiff
    with pytest.raises(SolverError, match="diverges") as e:
        solve(s, m, SolveOptions("iterative"))
    rel = [t["rel"] for t in e.value.trace]
    assert rel[-1] > rel[-2]
    # the one-step scheme still solves the same system
    u = postprocess(m, s, solve(s, m), [[0.5, 0.5, 1.0]])
    assert abs(u[0, 2] / 0.0925 - 1) < 5e-3


def test_invisible_inclusion_one_iteration():
    m = build_model(parse_model(models.test1(1.0, 0.2)))
    s = assemble(m)
    sol = solve(s, m, SolveOptions("iterative"))
    assert len(sol.trace) == 1 and sol.trace[0]["dx_norm"] == 0.0
    assert np.all(sol.grid.sigma0 == 0.0)


def test_grid_state_consistent(d01):
    m, s = d01
    sol = solve(s, m)
    eps = strain_operator(m) @ sol.grid.u.ravel()
    np.testing.assert_allclose(sol.grid.strain.ravel(), eps, atol=1e-12)
    # uniaxial slab: sigma0_zz = (E - E1) eps_zz with E1/E = 1.5
    np.testing.assert_allclose(sol.grid.sigma0[:, 2], -5.0 * sol.grid.strain[:, 2], rtol=1e-12)


def test_singular_system():
    doc = models.cube_patch_test()
    for p in doc["patches"]:
        p["bc"] = {}
    m = build_model(parse_model(doc))
    with pytest.raises(SolverError):
        solve(assemble(m), m)


@pytest.mark.parametrize("ratio,d,expected", [(2.0, 0.2, 0.09), (4.0, 0.1, 0.0925)])
def test_test1_rows(solved, ratio, d, expected):
    u = verification.sample(solved("test1", ratio, d, 2), [0.5, 0.5, 1.0])[0, 2]
    assert abs(u / expected - 1) < 5e-3


def test_axis_profile_slope_break(solved):
    res = solved("test1", 2.0, 0.2, 2)
    z = np.linspace(0.05, 0.95, 19)
    u = verification.sample(res, np.column_stack([np.full(19, 0.5), np.full(19, 0.5), z]))[:, 2]
    slope = np.diff(u) / np.diff(z)
    zm = 0.5 * (z[1:] + z[:-1])
    inside = np.abs(zm - 0.5) < 0.1
    np.testing.assert_allclose(slope[~inside], 0.1, rtol=1e-3)
    np.testing.assert_allclose(slope[inside], 0.05, rtol=1e-3)


@pytest.mark.parametrize("case", verification.TEST1_CASES)
def test_theory_column(case):
    # E u_z = (E/E1 - 1) d + 1 for a slab spanning the section
    ratio, d = case
    theory = models.test1_theory(ratio, d)
    assert theory == pytest.approx(((1 / ratio - 1) * d + 1) / 10.0, rel=1e-15)
    assert abs(theory / verification.TEST1_REFERENCE[case][1] - 1) < 5e-4
