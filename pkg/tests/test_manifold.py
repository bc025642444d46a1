"""Geometry containers, volumes, integration, scaling."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import i0

from riccilab import manifold as M


def test_grid_validation():
    with pytest.raises(ValueError):
        M.TorusGrid(1.0, 1.0, 6, 32)   # too coarse
    with pytest.raises(ValueError):
        M.TorusGrid(1.0, 1.0, 33, 32)  # odd
    with pytest.raises(ValueError):
        M.TorusGrid(-1.0, 1.0, 32, 32)


def test_grid_spacing():
    gr = M.TorusGrid(2.0, 1.0, 40, 20)
    assert gr.h1 == pytest.approx(0.05)
    assert gr.h2 == pytest.approx(0.05)
    assert gr.shape == (40, 20)


def test_torus_u_is_immutable(torus_bumpy):
    with pytest.raises(ValueError):
        torus_bumpy.u[0, 0] = 1.0


def test_sphere_validation():
    with pytest.raises(ValueError):
        M.make_sphere(1, 1.0)
    with pytest.raises(ValueError):
        M.make_sphere(2, -1.0)


def test_unit_sphere_volume_closed_forms():
    assert M.unit_sphere_volume(2) == pytest.approx(4 * math.pi, rel=1e-14)
    assert M.unit_sphere_volume(3) == pytest.approx(2 * math.pi**2, rel=1e-14)


def test_sphere_volume_scales_with_radius():
    g = M.make_sphere(3, 2.0)
    assert M.total_volume(g) == pytest.approx(2 * math.pi**2 * 8, rel=1e-14)


def test_torus_volume_bessel_oracle(grid32):
    # volume of e^{2u} dx dy with u = 0.1 sin(2 pi x) is the modified
    # Bessel integral int_0^1 e^{0.2 sin} = I_0(0.2); the trapezoid rule
    # on periodic analytic data converges beyond machine precision
    g = M.Torus(grid32, M.preset_u(grid32, "sinx:0.1"))
    assert M.total_volume(g) == pytest.approx(float(i0(0.2)), rel=1e-13)


def test_integrate_constant_equals_volume(torus_xy):
    one = np.ones(torus_xy.grid.shape)
    assert M.integrate(one, torus_xy) == pytest.approx(
        M.total_volume(torus_xy), rel=1e-14)


def test_integrate_sphere_constant():
    g = M.make_sphere(2, 1.5)
    assert M.integrate(3.0, g) == pytest.approx(3 * M.total_volume(g),
                                                rel=1e-14)


@given(lam=st.floats(0.1, 10.0))
@settings(max_examples=25, deadline=None)
def test_scale_metric_volume_law_torus(lam):
    gr = M.TorusGrid(1.0, 1.0, 16, 16)
    g = M.Torus(gr, M.preset_u(gr, "sinx:0.1"))
    scaled = M.scale_metric(g, lam)
    assert M.total_volume(scaled) == pytest.approx(
        lam * M.total_volume(g), rel=1e-12)


@given(lam=st.floats(0.1, 10.0))
@settings(max_examples=25, deadline=None)
def test_scale_metric_volume_law_sphere(lam):
    g = M.make_sphere(3, 1.0)
    scaled = M.scale_metric(g, lam)
    assert M.total_volume(scaled) == pytest.approx(
        lam ** 1.5 * M.total_volume(g), rel=1e-12)


def test_preset_flat(grid32):
    assert np.all(M.preset_u(grid32, "flat") == 0.0)


def test_preset_unknown(grid32):
    with pytest.raises(ValueError):
        M.preset_u(grid32, "wavelet:0.1")


def test_load_u_csv_roundtrip(tmp_path, grid32):
    u = M.preset_u(grid32, "sinxcosy:0.07")
    path = tmp_path / "u.csv"
    np.savetxt(path, u, delimiter=",")
    v = M.load_u_csv(path, grid32)
    np.testing.assert_allclose(v, u, atol=1e-15)


def test_load_u_csv_shape_mismatch(tmp_path, grid32):
    path = tmp_path / "u.csv"
    np.savetxt(path, np.zeros((8, 8)), delimiter=",")
    with pytest.raises(ValueError):
        M.load_u_csv(path, grid32)


def test_dim(torus_flat):
    assert M.dim(torus_flat) == 2
    assert M.dim(M.make_sphere(5, 1.0)) == 5
