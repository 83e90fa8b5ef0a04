"""Time integration: scheme order, invariants, forcing, persistence."""

import json

import numpy as np
import pytest

from torusflow import make_grid
from torusflow.field import (divergence_linf, extrude_field, mean,
                             physical_field, random_divfree_field,
                             spectral_field)
from torusflow.norms import l2_norm_sq
from torusflow.solver import (BlowUpError, ForcingSpec, SolverConfig,
                              advance, load_trajectory, mean_ode_integrate,
                              nse_rhs, recover_pressure, run_2d_base,
                              run_full_3d, run_perturbation, save_trajectory,
                              taylor_green_exact)


def _tg_cfg(grid, nu=0.1, dt=1e-3, t_end=0.1, amplitude=1.0, **kw):
    return SolverConfig(grid=grid, nu=nu, dt=dt, t_end=t_end, T=t_end,
                        initial=taylor_green_exact(grid, nu, 0.0, amplitude),
                        **kw)


def test_config_validation(grid2):
    v0 = taylor_green_exact(grid2, 0.1, 0.0)
    with pytest.raises(ValueError):
        SolverConfig(grid=grid2, nu=-1, dt=1e-3, t_end=1, T=1, initial=v0)
    with pytest.raises(ValueError):
        SolverConfig(grid=grid2, nu=0.1, dt=1e-3, t_end=0.5, T=1, initial=v0)
    with pytest.raises(ValueError):
        # T not a multiple of the snapshot interval
        SolverConfig(grid=grid2, nu=0.1, dt=1e-3, t_end=1, T=1, initial=v0,
                     snapshot_stride=3)


def test_forcing_expression_and_steady(grid2):
    f = ForcingSpec(kind="expression",
                    expressions=("sin(x1)", "cos(x2)"))
    assert f.steady
    g = ForcingSpec(kind="expression",
                    expressions=("sin(x1)*cos(t)", "0*x2"))
    assert not g.steady
    spec = f.evaluate(grid2, 0.0)
    assert spec.shape == (2,) + grid2.shape_spec
    # "t" must mean time, not match inside identifiers like "sqrt"
    h = ForcingSpec(kind="expression", expressions=("sqrt(2)*sin(x1)", "0*x1"))
    assert h.steady


def test_forcing_validation():
    with pytest.raises(ValueError):
        ForcingSpec(kind="expression")
    with pytest.raises(ValueError):
        ForcingSpec(kind="mystery")


def test_taylor_green_is_steady_state_of_rhs(grid2):
    # projected nonlinearity of the vortex is a pure gradient; the full rhs
    # reduces to the viscous decay of the initial mode
    v = taylor_green_exact(grid2, 0.1, 0.0)
    rhs = nse_rhs(v, None, 0.1)
    expect = -0.1 * grid2.k_sq * v.spectral()
    assert np.abs(rhs.spectral() - expect).max() < 1e-14


def test_advance_single_step_matches_exact(grid2):
    nu, dt = 0.1, 1e-3
    v = taylor_green_exact(grid2, nu, 0.0)
    out = advance(v, None, nu, dt)
    exact = taylor_green_exact(grid2, nu, dt)
    assert np.abs(out.physical() - exact.physical()).max() < 1e-10
    assert out.time_stamp == pytest.approx(dt)


def test_advance_detects_blowup(grid2):
    bad = spectral_field(grid2,
                         np.full((2,) + grid2.shape_spec, np.nan + 0j))
    with pytest.raises(BlowUpError):
        advance(bad, None, 0.1, 1e-3)


def test_second_order_convergence(grid2):
    # forced run so the nonlinear coupling is genuinely exercised
    nu, t_end = 0.2, 0.25
    forcing = ForcingSpec(kind="expression", expressions=(
        "0.5*sin(x2)*cos(t)", "0.5*sin(x1)"))
    errs = []
    for dt in (2e-3, 1e-3):
        cfg = SolverConfig(grid=grid2, nu=nu, dt=dt, t_end=t_end, T=t_end,
                           forcing=forcing,
                           initial=taylor_green_exact(grid2, nu, 0.0, 0.5),
                           snapshot_stride=round(t_end / dt))
        traj = run_2d_base(cfg)
        errs.append(traj.snapshot_field(-1).spectral())
    # Richardson: error(dt) ~ 4*error(dt/2); compare both against dt/4
    cfg = SolverConfig(grid=grid2, nu=nu, dt=5e-4, t_end=t_end, T=t_end,
                       forcing=forcing,
                       initial=taylor_green_exact(grid2, nu, 0.0, 0.5),
                       snapshot_stride=round(t_end / 5e-4))
    ref = run_2d_base(cfg).snapshot_field(-1).spectral()
    e_coarse = np.abs(errs[0] - ref).max()
    e_fine = np.abs(errs[1] - ref).max()
    assert e_coarse / e_fine > 3.5


def test_run_keeps_divergence_free(grid2):
    cfg = _tg_cfg(grid2, t_end=0.05, snapshot_stride=50)
    traj = run_2d_base(cfg)
    for i in range(len(traj.times)):
        assert divergence_linf(traj.snapshot_field(i)) < 1e-12


def test_mean_ode_trapezoid_exact_for_linear():
    times = np.linspace(0, 1, 11)
    forcing = np.stack([2 * times, np.ones_like(times)], axis=1)
    out = mean_ode_integrate(times, forcing, np.array([1.0, 0.0]))
    assert out[-1] == pytest.approx([2.0, 1.0])  # 1 + t^2, t


def test_base_run_mean_follows_forcing(grid2):
    forcing = ForcingSpec(kind="expression",
                          expressions=("0.3 + 0*x1", "0.1*cos(t)"))
    cfg = SolverConfig(grid=grid2, nu=0.1, dt=1e-3, t_end=0.5, T=0.5,
                       forcing=forcing, snapshot_stride=100,
                       initial=taylor_green_exact(grid2, 0.1, 0.0, 0.2))
    traj = run_2d_base(cfg)
    t = traj.diag["t"]
    exact = np.stack([0.3 * t, 0.1 * np.sin(t)], axis=1)
    assert np.abs(traj.diag["mean"] - exact).max() < 1e-7
    # the k=0 coefficient of each snapshot carries the mean
    final = mean(traj.snapshot_field(-1))
    assert final == pytest.approx(traj.diag["mean"][-1], abs=1e-14)


def test_full_3d_mean_matches_ode(grid3):
    forcing = ForcingSpec(kind="expression",
                          expressions=("0.2 + 0*x1", "0.05*cos(t)", "0*x1"))
    cfg = SolverConfig(grid=grid3, nu=0.1, dt=2e-3, t_end=0.2, T=0.2,
                       forcing=forcing, snapshot_stride=100,
                       initial=random_divfree_field(grid3, 0, target_h1=0.05))
    traj = run_full_3d(cfg)
    oracle = mean_ode_integrate(traj.diag["t"],
                                traj.extras["forcing_mean"],
                                np.zeros(3))
    assert np.abs(traj.diag["mean"] - oracle).max() < 1e-10


def test_perturbation_of_zero_base_is_full_dynamics(grid2, grid3):
    """With v_s = 0 the perturbation system is the plain 3D system."""
    nu, dt, t_end = 0.2, 2e-3, 0.1
    zero2 = spectral_field(grid2, np.zeros((2,) + grid2.shape_spec, complex),
                           divergence_free=True)
    base = run_2d_base(SolverConfig(grid=grid2, nu=nu, dt=dt, t_end=t_end,
                                    T=t_end, initial=zero2,
                                    snapshot_stride=10))
    u0 = random_divfree_field(grid3, seed=2, target_h1=0.1)
    steps = round(t_end / dt)
    pcfg = SolverConfig(grid=grid3, nu=nu, dt=dt, t_end=t_end, T=t_end,
                        initial=u0, snapshot_stride=steps)
    pert = run_perturbation(pcfg, base)
    full = run_full_3d(SolverConfig(grid=grid3, nu=nu, dt=dt, t_end=t_end,
                                    T=t_end, initial=u0,
                                    snapshot_stride=steps))
    diff = np.abs(pert.snapshot_field(-1).spectral()
                  - full.snapshot_field(-1).spectral()).max()
    assert diff < 1e-13


def test_trajectory_sampling(grid2):
    cfg = _tg_cfg(grid2, t_end=0.1, snapshot_stride=10)
    traj = run_2d_base(cfg)
    exact_hit = traj.sample(traj.times[3])
    assert np.array_equal(exact_hit, traj.snapshots[3])
    mid = traj.sample(0.5 * (traj.times[3] + traj.times[4]))
    assert np.isfinite(mid).all()
    with pytest.raises(ValueError):
        traj.sample(1e6)


def test_recover_pressure_taylor_green(grid2):
    # (v.grad)v_1 = sin(2 x1)/2, so grad p = -(v.grad)v gives
    # p = (cos 2x1 + cos 2x2)/4 for the unit vortex at t=0
    nu = 0.1
    v = taylor_green_exact(grid2, nu, 0.0)
    p = recover_pressure(v, None, nu)
    x1, x2 = grid2.meshgrid()
    expect = (np.cos(2 * x1) + np.cos(2 * x2)) / 4.0
    assert np.abs(p.physical()[0] - expect).max() < 1e-12


def test_save_load_trajectory_round_trip(tmp_path, grid2):
    forcing = ForcingSpec(kind="expression",
                          expressions=("0.1*sin(x1)", "0*x1"))
    cfg = SolverConfig(grid=grid2, nu=0.1, dt=1e-3, t_end=0.05, T=0.05,
                       forcing=forcing, snapshot_stride=10,
                       initial=taylor_green_exact(grid2, 0.1, 0.0, 0.3))
    traj = run_2d_base(cfg)
    out = save_trajectory(traj, tmp_path / "run")
    assert (tmp_path / "run" / "diagnostics.csv").exists()
    assert len(out["snapshots"]) == len(traj.times)

    back = load_trajectory(tmp_path / "run")
    assert back.grid == grid2
    assert np.allclose(back.times, traj.times)
    assert np.abs(back.snapshots[-1] - traj.snapshots[-1]).max() < 1e-15
    assert np.allclose(back.diag["l2_sq"], traj.diag["l2_sq"])
    assert np.allclose(back.extras["forcing_l2_sq"],
                       traj.extras["forcing_l2_sq"])


def test_config_hash_stable(grid2):
    from torusflow.solver import config_hash

    cfg = _tg_cfg(grid2, t_end=0.01)
    assert config_hash(cfg) == config_hash(_tg_cfg(grid2, t_end=0.01))
    assert config_hash(cfg) != config_hash(_tg_cfg(grid2, t_end=0.02))
