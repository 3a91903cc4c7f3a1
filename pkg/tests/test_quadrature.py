import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spatialanc.errors import EmptyGridError
from spatialanc.kernel import KernelParams, ReferenceInterpolator, secondary_model_zeta
from spatialanc.quadrature import (
    DEFAULT_SPACING,
    FieldMap,
    RegionGrid,
    interpolation_matrices,
    make_grid,
    make_polar_grid,
    potential_energy,
)
from spatialanc.scene import Disk, SceneConfig, build_scene_paper

from oracles import lattice_count

REGION = Disk((0.0, 0.0), 0.5)
SCAT = Disk((0.0, 0.0), 0.15)


def test_lattice_count_full_disk():
    g = make_grid(REGION, None, 0.04)
    assert len(g) == lattice_count(0.5, 0.04)
    assert abs(len(g) - np.pi * 0.25 / 0.04**2) <= 10


def test_lattice_count_with_scatterer():
    g = make_grid(REGION, SCAT, 0.0365)
    assert len(g) == lattice_count(0.5, 0.0365, hole=0.15)
    assert 540 <= len(g) <= 572
    default = make_grid(REGION, SCAT)
    assert abs(len(default) - 556) <= 0.03 * 556
    assert len(default) == lattice_count(0.5, DEFAULT_SPACING, hole=0.15)


def test_membership_and_weights():
    g = make_grid(REGION, SCAT, 0.03)
    r = np.hypot(*g.points.T)
    assert np.all(r <= 0.5) and np.all(r > 0.15)
    assert np.all(g.weights == 0.03**2)


def test_empty_grid():
    with pytest.raises(EmptyGridError):
        make_grid(Disk((0, 0), 0.5), Disk((0, 0), 0.49), 0.6)
    with pytest.raises(ValueError):
        make_grid(REGION, None, 0.0)


def test_offcenter_region():
    g = make_grid(Disk((1.0, -2.0), 0.3), None, 0.05)
    assert np.all(np.hypot(g.points[:, 0] - 1.0, g.points[:, 1] + 2.0) <= 0.3)
    assert np.any(np.all(np.isclose(g.points, [1.0, -2.0]), axis=1))


def test_polar_grid_area():
    g = make_polar_grid(REGION, SCAT, n_radial=8, n_angular=32)
    assert g.area == pytest.approx(np.pi * (0.25 - 0.15**2), rel=1e-12)
    r = np.hypot(*g.points.T)
    assert np.all((r > 0.15) & (r < 0.5))


def test_single_point_matrix():
    scene = SceneConfig(((-3, 0),), ((1.0, 0.0),), ((2.0, 0.0), (0.0, 2.0)), ((0.2, 0.1),), Disk((0, 0), 0.5))
    grid = RegionGrid(np.array([[0.1, 0.05]]), np.array([0.02]))
    k = scene.wavenumber(300).k
    mats = interpolation_matrices(scene, k, KernelParams(beta=0.0), grid)
    zeta = secondary_model_zeta(scene, k, grid.points[0])
    assert mats.A_yy.shape == (1, 1) and mats.A_yx.shape == (1, 2) and mats.A_xx.shape == (2, 2)
    assert mats.A_yy[0, 0] == pytest.approx(0.02 * abs(zeta[0]) ** 2, rel=1e-14)


@pytest.fixture(scope="module")
def mats400():
    scene = build_scene_paper()
    k = scene.wavenumber(400).k
    params = KernelParams.toward(scene.primary_sources[0], beta=6.0)
    grid = make_grid(scene.target_region, scene.scatterer)
    interp = ReferenceInterpolator(params, k, scene.reference_array)
    return scene, k, params, grid, interp, interpolation_matrices(scene, k, params, grid, interpolator=interp)


def test_hermitian_psd(mats400):
    *_, mats = mats400
    for A in (mats.A_yy, mats.A_xx):
        assert np.max(np.abs(A - A.conj().T)) <= 1e-12 * np.max(np.abs(A))
        eig = np.linalg.eigvalsh(A)
        assert eig[0] >= -1e-8 * eig[-1]
    assert np.isfinite(mats.cond_yy)


def test_grid_refinement(mats400):
    scene, k, params, grid, interp, mats = mats400
    fine = make_grid(scene.target_region, scene.scatterer, grid.spacing / 2)
    mats_fine = interpolation_matrices(scene, k, params, fine, interpolator=interp)
    ref = np.linalg.norm(mats_fine.A_yy)
    assert abs(np.linalg.norm(mats.A_yy) - ref) <= 0.02 * ref


def test_potential_energy_basics():
    g = make_grid(REGION, None, 0.01)
    assert potential_energy(FieldMap(g.points, np.zeros(len(g))), g) == 0.0
    assert potential_energy(FieldMap(g.points, np.ones(len(g))), g) == pytest.approx(np.pi * 0.25, rel=0.02)
    with pytest.raises(ValueError):
        potential_energy(FieldMap(g.points[:-1], np.ones(len(g) - 1)), g)


def _field_on_grid(scene, k, grid, interp, x, y):
    return interp.filter(grid.points) @ x + secondary_model_zeta(scene, k, grid.points) @ y


def _quadratic_form(mats, x, y):
    return (
        np.vdot(y, mats.A_yy @ y)
        + np.vdot(y, mats.A_yx @ x)
        + np.vdot(x, mats.A_yx.conj().T @ y)
        + np.vdot(x, mats.A_xx @ x)
    )


def _complex_vec(data, n):
    return np.array(data.draw(st.lists(st.complex_numbers(max_magnitude=10.0, allow_nan=False, allow_infinity=False), min_size=n, max_size=n)))


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_quadratic_form_identity(mats400, data):
    scene, k, params, grid, interp, mats = mats400
    x = _complex_vec(data, 6)
    y = _complex_vec(data, 12)
    direct = potential_energy(FieldMap(grid.points, _field_on_grid(scene, k, grid, interp, x, y)), grid)
    qf = _quadratic_form(mats, x, y)
    assert abs(qf.imag) <= 1e-10 * max(abs(qf), 1e-300) + 1e-300
    assert abs(qf.real - direct) <= 1e-8 * max(direct, 1e-300) + 1e-14 * (np.vdot(x, x).real + np.vdot(y, y).real)


def test_cauchy_schwarz(mats400, rng):
    *_, mats = mats400
    for _ in range(100):
        x = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        y = rng.standard_normal(12) + 1j * rng.standard_normal(12)
        cross = abs(np.vdot(y, mats.A_yx @ x)) ** 2
        assert cross <= np.vdot(y, mats.A_yy @ y).real * np.vdot(x, mats.A_xx @ x).real * (1 + 1e-10)
