"""Forward solver: CFL, positivity, mass ledger, comparison principle."""

import numpy as np
import pytest

from crossdifflab.kolmo import (CflViolation, KolmogorovProblem,
                                NumericalBlowUp, cfl_timestep, check_mass,
                                comparison_check, solve_forward, steps_for)
from crossdifflab.torus import Field, Trajectory, make_grid, norm


def _grid(n=32, t_final=0.02, mu_sup=1.0, dim=1):
    return make_grid(dim, n, t_final, steps_for(dim, n, t_final, mu_sup))


def test_cfl_timestep_formula():
    g = make_grid(2, 64, 1.0, 10)
    assert abs(cfl_timestep(g, 2.0)
               - 0.9 * g.h ** 2 / (2 * 2 * 2.0)) < 1e-18
    with pytest.raises(ValueError):
        cfl_timestep(g, 0.0)


def test_steps_for_is_sufficient():
    for n, t, mu in [(32, 0.1, 1.0), (64, 0.25, 3.0), (16, 1.0, 0.5)]:
        g = make_grid(1, n, t, steps_for(1, n, t, mu))
        assert g.tau <= cfl_timestep(g, mu) * (1 + 1e-12)


def test_cfl_violation_raised():
    g = make_grid(1, 32, 1.0, 10)  # tau = 0.1, way past the bound
    p = KolmogorovProblem(grid=g, mu=Trajectory.constant(g, 1.0),
                          z0=Field.constant(g, 1.0),
                          source=Trajectory.constant(g, 0.0))
    with pytest.raises(CflViolation):
        solve_forward(p)


def test_problem_validation():
    g = _grid()
    mu = Trajectory.constant(g, 1.0)
    z0 = Field.constant(g, 1.0)
    with pytest.raises(ValueError, match="exactly one"):
        KolmogorovProblem(grid=g, mu=mu, z0=z0)
    with pytest.raises(ValueError, match="exactly one"):
        KolmogorovProblem(grid=g, mu=mu, z0=z0,
                          source=Trajectory.constant(g, 0.0),
                          reaction=Trajectory.constant(g, 0.0))
    with pytest.raises(ValueError, match="lower-bounded"):
        KolmogorovProblem(grid=g, mu=Trajectory.constant(g, 0.0), z0=z0,
                          source=Trajectory.constant(g, 0.0))
    with pytest.raises(ValueError, match="z0 >= 0"):
        KolmogorovProblem(grid=g, mu=mu, z0=Field.constant(g, -1.0),
                          reaction=Trajectory.constant(g, 0.0))


def test_positivity_exact_under_cfl():
    rng = np.random.default_rng(0)
    g = _grid(mu_sup=3.0)
    for _ in range(5):
        mu = Trajectory.constant_in_time(
            g, Field(g, rng.uniform(0.3, 3.0, g.size)))
        z0 = Field(g, rng.uniform(0.0, 2.0, g.size))
        src = Trajectory.constant_in_time(
            g, Field(g, rng.uniform(0.0, 1.0, g.size)))
        rep = solve_forward(KolmogorovProblem(grid=g, mu=mu, z0=z0,
                                              source=src))
        assert rep.min_value >= 0.0


def test_mass_ledger_with_source():
    rng = np.random.default_rng(1)
    g = _grid()
    mu = Trajectory.constant_in_time(
        g, Field(g, rng.uniform(0.5, 1.0, g.size)))
    z0 = Field(g, rng.standard_normal(g.size))
    src = Trajectory.constant_in_time(g, Field(g, rng.standard_normal(g.size)))
    p = KolmogorovProblem(grid=g, mu=mu, z0=z0, source=src)
    rep = solve_forward(p)
    assert check_mass(rep, p) < 1e-13
    assert rep.mass_drift == check_mass(rep, p)


def test_mass_conserved_without_source():
    rng = np.random.default_rng(2)
    g = _grid(dim=2, n=16)
    mu = Trajectory.constant_in_time(
        g, Field(g, rng.uniform(0.5, 1.0, g.size)))
    z0 = Field(g, rng.uniform(0.5, 2.0, g.size))
    p = KolmogorovProblem(grid=g, mu=mu, z0=z0,
                          source=Trajectory.constant(g, 0.0))
    rep = solve_forward(p)
    assert rep.mass_drift < 1e-13 * norm(z0, "L1")


def test_heat_mode_decay():
    # mu = 1: each Fourier mode decays by (1 - tau*lambda_h) per step
    g = _grid(n=64, t_final=0.01)
    z0 = Field.from_function(g, lambda x: np.cos(2 * np.pi * 3 * x))
    p = KolmogorovProblem(grid=g, mu=Trajectory.constant(g, 1.0), z0=z0,
                          source=Trajectory.constant(g, 0.0))
    rep = solve_forward(p)
    lam = 4 * np.sin(3 * np.pi * g.h) ** 2 / g.h ** 2
    factors = (1 - g.tau * lam) ** np.arange(g.steps + 1)
    assert np.abs(rep.trajectory.data - factors[:, None]
                  * z0.values[None, :]).max() < 1e-11


def test_comparison_equality_constant_reaction():
    rng = np.random.default_rng(3)
    g = _grid()
    mu = Trajectory.constant_in_time(
        g, Field(g, rng.uniform(0.5, 1.0, g.size)))
    z0 = Field(g, rng.uniform(0.1, 1.0, g.size))
    r_bar = 0.7
    p = KolmogorovProblem(grid=g, mu=mu, z0=z0,
                          reaction=Trajectory.constant(g, r_bar))
    rep = comparison_check(p, r_bar)
    assert abs(rep.rel_defect) < 1e-13


def test_comparison_inequality_varying_reaction():
    rng = np.random.default_rng(4)
    g = _grid()
    mu = Trajectory.constant_in_time(
        g, Field(g, rng.uniform(0.5, 1.0, g.size)))
    z0 = Field(g, rng.uniform(0.1, 1.0, g.size))
    r_bar = 1.0
    rea = Trajectory.constant_in_time(
        g, Field(g, rng.uniform(-1.0, r_bar, g.size)))
    p = KolmogorovProblem(grid=g, mu=mu, z0=z0, reaction=rea)
    rep = comparison_check(p, r_bar)
    assert rep.max_defect <= 1e-13  # z never exceeds ztilde * e^{r t}
    with pytest.raises(ValueError, match="exceeds r_bar"):
        comparison_check(p, -2.0)
    with pytest.raises(ValueError, match="reaction mode"):
        comparison_check(KolmogorovProblem(
            grid=g, mu=mu, z0=z0, source=Trajectory.constant(g, 0.0)), 0.0)


def test_blowup_detected():
    g = _grid()
    p = KolmogorovProblem(grid=g, mu=Trajectory.constant(g, 1.0),
                          z0=Field.constant(g, 1.0),
                          source=Trajectory.constant(g, 1e20))
    with pytest.raises(NumericalBlowUp) as exc:
        solve_forward(p)
    assert exc.value.step == 1


def test_report_metadata():
    g = _grid()
    p = KolmogorovProblem(grid=g, mu=Trajectory.constant(g, 1.0),
                          z0=Field.constant(g, 1.0),
                          source=Trajectory.constant(g, 0.0))
    rep = solve_forward(p)
    assert rep.steps_taken == g.steps
    assert 0.0 < rep.cfl_used <= 0.9 + 1e-12
