"""Grid, transforms, calculus operators, projection, dealiasing."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from torusflow import make_grid
from torusflow.field import (Field, dealias, divergence_data, divergence_linf,
                             extrude_field, leray_project, load_field, mean,
                             mean_free, physical_field, physical_padded,
                             random_divfree_field, save_field,
                             spectral_derivative, spectral_field, transform)

seeds = st.integers(min_value=0, max_value=10_000)


def test_grid_validation():
    with pytest.raises(ValueError):
        make_grid(2 * np.pi, 16, 4)
    with pytest.raises(ValueError):
        make_grid(-1.0, 16, 2)
    with pytest.raises(ValueError):
        make_grid(2 * np.pi, 15, 2)
    with pytest.raises(ValueError):
        make_grid(2 * np.pi, 2, 2)


def test_grid_lattice(grid2):
    assert grid2.kappa == pytest.approx(1.0)
    assert grid2.k_sq.shape == (16, 9)
    assert grid2.k_sq[0, 0] == 0.0
    # hermitian weights: 1 at kz=0 and Nyquist, 2 between
    assert grid2.hermitian_weight[0, 0] == 1.0
    assert grid2.hermitian_weight[0, -1] == 1.0
    assert grid2.hermitian_weight[0, 3] == 2.0
    # 2/3-rule cutoff at N//3
    assert grid2.dealias_mask[0, 5]
    assert not grid2.dealias_mask[0, 6]


@given(seed=seeds)
@settings(max_examples=25, deadline=None)
def test_round_trip(grid2, seed):
    rng = np.random.default_rng(seed)
    phys = rng.standard_normal((2, 16, 16))
    f = physical_field(grid2, phys)
    back = transform(transform(f, "spectral"), "physical")
    assert np.abs(back.data - phys).max() < 1e-13


def test_k0_is_mean(grid2):
    rng = np.random.default_rng(0)
    phys = rng.standard_normal((2, 16, 16))
    f = physical_field(grid2, phys)
    assert mean(f) == pytest.approx(phys.mean(axis=(1, 2)), abs=1e-14)


def test_derivative_single_mode(grid2):
    x1, x2 = grid2.meshgrid()
    f = physical_field(grid2, np.sin(3 * x1) * np.cos(2 * x2))
    d1 = spectral_derivative(f, 0, 1).physical()
    expect = 3 * np.cos(3 * x1) * np.cos(2 * x2)
    assert np.abs(d1 - expect).max() < 1e-12
    d2 = spectral_derivative(f, 1, 2).physical()
    expect = -4 * np.sin(3 * x1) * np.cos(2 * x2)
    assert np.abs(d2 - expect).max() < 1e-12


def test_derivative_keeps_fields_real(grid2):
    # odd derivatives of the pure Nyquist mode must be dropped
    x1, _ = grid2.meshgrid()
    f = physical_field(grid2, np.cos(8 * x1))
    d = spectral_derivative(f, 0, 1).physical()
    assert np.abs(np.imag(d)).max() == 0.0
    assert np.abs(d).max() < 1e-12


@given(seed=seeds)
@settings(max_examples=25, deadline=None)
def test_leray_idempotent_and_divfree(grid3, seed):
    rng = np.random.default_rng(seed)
    f = physical_field(grid3, rng.standard_normal((3, 16, 16, 16)))
    p = leray_project(f)
    assert divergence_linf(p) < 1e-13
    twice = leray_project(p)
    assert np.abs(twice.spectral() - p.spectral()).max() < 1e-14


def test_leray_keeps_mean(grid2):
    phys = np.ones((2, 16, 16))
    phys[1] = -2.0
    p = leray_project(physical_field(grid2, phys))
    assert mean(p) == pytest.approx([1.0, -2.0])


def test_leray_fixes_divfree_field(grid2):
    f = random_divfree_field(grid2, seed=3)
    again = leray_project(f)
    assert np.abs(again.spectral() - f.spectral()).max() < 1e-15


@given(seed=seeds)
@settings(max_examples=20, deadline=None)
def test_dealias_and_meanfree_idempotent(grid2, seed):
    rng = np.random.default_rng(seed)
    f = physical_field(grid2, rng.standard_normal((2, 16, 16)))
    d = dealias(f)
    assert np.abs(dealias(d).spectral() - d.spectral()).max() == 0.0
    m = mean_free(f)
    assert np.abs(mean(m)).max() < 1e-15
    assert np.abs(mean_free(m).spectral() - m.spectral()).max() == 0.0


def test_derivative_commutes_with_projection(grid3):
    f = physical_field(grid3,
                       np.random.default_rng(5).standard_normal((3,) + (16,) * 3))
    a = spectral_derivative(leray_project(f), 0, 1)
    b = Field(f.grid,
              spectral_derivative(f, 0, 1).spectral(), "spectral")
    b = leray_project(b)
    assert np.abs(a.spectral() - b.spectral()).max() < 1e-13


def test_random_divfree_field_reproducible(grid3):
    a = random_divfree_field(grid3, seed=42, target_h1=1.0)
    b = random_divfree_field(grid3, seed=42, target_h1=1.0)
    assert np.array_equal(a.data, b.data)
    assert divergence_linf(a) < 1e-12
    assert np.abs(mean(a)).max() < 1e-15


def test_physical_padded_interpolates_exactly(grid2):
    x1, x2 = grid2.meshgrid()
    f = physical_field(grid2, np.sin(2 * x1) * np.cos(3 * x2))
    vals = physical_padded(f, 2)
    M = 2 * grid2.N
    x = np.arange(M) * grid2.L / M
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    assert np.abs(vals[0] - np.sin(2 * X1) * np.cos(3 * X2)).max() < 1e-12


def test_extrude_field(grid2, grid3):
    f = random_divfree_field(grid2, seed=1)
    lifted = extrude_field(f, grid3)
    assert lifted.ncomp == 3
    assert np.abs(lifted.physical()[2]).max() == 0.0
    # x3-invariance
    phys = lifted.physical()
    assert np.abs(phys[:, :, :, 0:1] - phys).max() == 0.0
    assert divergence_linf(lifted) < 1e-13


def test_save_load_round_trip(tmp_path, grid2):
    f = random_divfree_field(grid2, seed=9)
    f.time_stamp = 1.25
    path = tmp_path / "snap.npz"
    save_field(path, f)
    g = load_field(path)
    assert g.grid == grid2
    assert g.time_stamp == 1.25
    assert g.divergence_free
    assert np.array_equal(g.data, f.data)
