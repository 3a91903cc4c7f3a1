"""Discretization of the target region and the interpolation matrices.

The region is the target disk minus the scatterer disk. The default rule is
a uniform Cartesian lattice with constant weights (midpoint rule); the same
points double as the evaluation set for the noise-reduction metric.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import EmptyGridError
from .kernel import KernelParams, ReferenceInterpolator, secondary_model_zeta
from .scene import Disk, SceneConfig, Wavenumber

# lattice spacing that yields 556 points for the 0.5 m / 0.15 m annulus
DEFAULT_SPACING = 0.0357


@dataclass(frozen=True, eq=False)
class RegionGrid:
    points: np.ndarray
    weights: np.ndarray
    spacing: float | None = None
    scheme: str = "lattice"

    def __len__(self):
        return len(self.points)

    @property
    def area(self) -> float:
        return float(self.weights.sum())


@dataclass(eq=False)
class FieldMap:
    """Complex pressure on a set of points, labelled primary/secondary/total."""

    points: np.ndarray
    values: np.ndarray
    label: str = "total"

    def __post_init__(self):
        if len(self.points) != len(self.values):
            raise ValueError("FieldMap needs one value per point")
        if self.label not in ("primary", "secondary", "total"):
            raise ValueError(f"unknown field label {self.label!r}")


@dataclass(eq=False)
class InterpolationMatrices:
    A_yy: np.ndarray
    A_yx: np.ndarray
    A_xx: np.ndarray
    grid: RegionGrid
    k: float
    lam: float | None = None
    cond_yy: float = field(init=False)

    def __post_init__(self):
        s = np.linalg.svd(self.A_yy, compute_uv=False)
        self.cond_yy = float(s[0] / s[-1]) if s[-1] > 0 else float("inf")

    def conj(self) -> "InterpolationMatrices":
        return InterpolationMatrices(self.A_yy.conj(), self.A_yx.conj(), self.A_xx.conj(), self.grid, self.k, self.lam)


def _keep(points, target_region: Disk, scatterer: Disk | None):
    mask = target_region.contains(points)
    if scatterer is not None:
        mask &= ~scatterer.contains(points)
    return mask


def make_grid(target_region: Disk, scatterer: Disk | None = None, spacing: float = DEFAULT_SPACING) -> RegionGrid:
    """Uniform lattice centred on the region with weight ``spacing**2`` per point.

    Points on the region boundary are kept; points on or inside the
    scatterer boundary are dropped.
    """
    if not spacing > 0:
        raise ValueError("spacing must be positive")
    n = math.floor(target_region.radius / spacing)
    offsets = np.arange(-n, n + 1) * spacing
    gx, gy = np.meshgrid(offsets, offsets, indexing="xy")
    points = np.stack([gx.ravel(), gy.ravel()], axis=1) + np.asarray(target_region.center)
    points = points[_keep(points, target_region, scatterer)]
    if len(points) == 0:
        raise EmptyGridError(f"no lattice points inside the region at spacing {spacing}")
    return RegionGrid(points, np.full(len(points), spacing**2), spacing=spacing)


def make_polar_grid(target_region: Disk, scatterer: Disk | None = None, n_radial: int = 12, n_angular: int = 64) -> RegionGrid:
    """Gauss-Legendre in radius times trapezoid in angle over the (annular) region.

    Needs the scatterer, if present, to be concentric with the region.
    """
    inner = 0.0
    if scatterer is not None:
        if not np.allclose(scatterer.center, target_region.center):
            raise ValueError("polar quadrature requires a concentric scatterer")
        inner = scatterer.radius
    outer = target_region.radius
    nodes, w = np.polynomial.legendre.leggauss(n_radial)
    radii = 0.5 * (outer - inner) * nodes + 0.5 * (outer + inner)
    w_r = 0.5 * (outer - inner) * w * radii
    theta = 2.0 * np.pi * np.arange(n_angular) / n_angular
    rr, tt = np.meshgrid(radii, theta, indexing="ij")
    points = np.stack([rr * np.cos(tt), rr * np.sin(tt)], axis=-1).reshape(-1, 2) + np.asarray(target_region.center)
    weights = np.repeat(w_r, n_angular) * (2.0 * np.pi / n_angular)
    return RegionGrid(points, weights, scheme="polar")


def interpolation_matrices(
    scene: SceneConfig,
    k,
    params: KernelParams,
    grid: RegionGrid,
    interpolator: ReferenceInterpolator | None = None,
) -> InterpolationMatrices:
    """Quadrature of ``zeta* zeta^T``, ``zeta* z_x^T`` and ``z_x* z_x^T`` over the grid."""
    if len(grid) == 0:
        raise EmptyGridError("empty grid")
    kval = k.k if isinstance(k, Wavenumber) else float(k)
    if interpolator is None:
        interpolator = ReferenceInterpolator(params, kval, scene.reference_array)
    zeta = secondary_model_zeta(scene, kval, grid.points)  # (P, L)
    zx = interpolator.filter(grid.points)  # (P, R)
    wz = grid.weights[:, None] * zeta.conj()
    wx = grid.weights[:, None] * zx.conj()
    return InterpolationMatrices(
        A_yy=wz.T @ zeta,
        A_yx=wz.T @ zx,
        A_xx=wx.T @ zx,
        grid=grid,
        k=kval,
        lam=interpolator.lam,
    )


def potential_energy(u: FieldMap, grid: RegionGrid) -> float:
    """Weighted sum of ``|u|^2`` over the grid."""
    if len(u.points) != len(grid.points) or not np.array_equal(u.points, grid.points):
        raise ValueError("field map is not aligned with the quadrature grid")
    return float(np.sum(grid.weights * np.abs(u.values) ** 2))
