"""Kernel ridge regression of the primary field from reference microphones.

The directionally weighted kernel is a von Mises mixture of plane waves
arriving from around ``eta`` (a unit vector pointing from the target region
toward the noise source), with ``beta`` controlling how sharp the weighting
is. ``beta = 0`` recovers the isotropic kernel ``J_0(k |r1 - r2|)``.
"""

from dataclasses import dataclass
import logging

import numpy as np
from scipy import linalg

from . import specfun
from .errors import SingularMatrixError
from .scene import SceneConfig, _as_k, greens_free_2d

logger = logging.getLogger(__name__)

DEFAULT_RELATIVE_LAMBDA = 1.0e-3
MAX_CONDITION = 1.0e13


@dataclass(frozen=True)
class KernelParams:
    """Kernel parameters.

    ``lam=None`` selects ``1e-3 * trace(K) / R`` when the Gram matrix is built.
    """

    beta: float = 0.0
    eta: tuple = (1.0, 0.0)
    lam: float | None = None
    dim: int = 2

    def __post_init__(self):
        object.__setattr__(self, "eta", tuple(float(v) for v in self.eta))
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        if len(self.eta) != self.dim:
            raise ValueError(f"eta must have {self.dim} components")
        if abs(np.linalg.norm(self.eta) - 1.0) > 1e-12:
            raise ValueError("eta must be a unit vector")
        if not self.beta >= 0:
            raise ValueError("beta must be >= 0")
        if self.lam is not None and not self.lam >= 0:
            raise ValueError("lam must be >= 0")

    @classmethod
    def toward(cls, source, center=(0.0, 0.0), beta=0.0, lam=None):
        """Kernel whose direction points from ``center`` to ``source``."""
        d = np.asarray(source, dtype=float) - np.asarray(center, dtype=float)
        return cls(beta=beta, eta=tuple(d / np.linalg.norm(d)), lam=lam, dim=len(d))


def kappa(params: KernelParams, k, r1, r2):
    """Kernel value between positions ``r1`` and ``r2`` ((..., dim), broadcast).

    2D: J_0(sqrt(v.v)) with v = j beta eta - k (r1 - r2), no conjugation in
    the dot product. 3D uses the spherical Bessel j_0 instead.
    """
    k = _as_k(k)
    eta = np.asarray(params.eta)
    v = 1j * params.beta * eta - k * (np.asarray(r1, dtype=float) - np.asarray(r2, dtype=float))
    z = np.sqrt(np.sum(v * v, axis=-1))
    if params.dim == 2:
        return specfun.bessel_j0_complex(z)
    z = np.asarray(z, dtype=complex)
    safe = np.where(z == 0, 1.0, z)
    return np.where(z == 0, 1.0 + 0j, np.sin(safe) / safe)[()]


def gram_matrix(params: KernelParams, k, points) -> np.ndarray:
    """R x R matrix of kernel values, entry (i, j) = kappa(p_i, p_j)."""
    pts = np.asarray(points, dtype=float).reshape(-1, params.dim)
    return kappa(params, k, pts[:, None, :], pts[None, :, :])


class ReferenceInterpolator:
    """Factorized ridge system for one set of reference points at one wavenumber.

    Building this once and calling :meth:`filter` for many positions avoids
    refactorizing ``K + lam I``.
    """

    def __init__(self, params: KernelParams, k, ref_points):
        self.params = params
        self.k = _as_k(k)
        self.ref_points = np.asarray(ref_points, dtype=float).reshape(-1, params.dim)
        self.gram = gram_matrix(params, self.k, self.ref_points)
        num = len(self.ref_points)
        if params.lam is None:
            self.lam = DEFAULT_RELATIVE_LAMBDA * float(np.trace(self.gram).real) / num
        else:
            self.lam = float(params.lam)
        system = self.gram + self.lam * np.eye(num)
        eig = linalg.eigvalsh(system)
        self.condition = float(eig[-1] / eig[0]) if eig[0] > 0 else float("inf")
        if not eig[0] > 0 or self.condition > MAX_CONDITION:
            raise SingularMatrixError(
                f"K + lam I is singular or ill-conditioned (lam={self.lam:.3g}, cond={self.condition:.3g})"
            )
        # (K + lam I)^T = conj(K + lam I) is Hermitian positive definite as well
        self._factor = linalg.cho_factor(system.conj())
        logger.debug("reference Gram: lam=%.3g cond=%.3g", self.lam, self.condition)

    def kernel_vectors(self, r) -> np.ndarray:
        """kappa(r, ref_i) for every reference point, shape (..., R)."""
        r = np.asarray(r, dtype=float)
        return kappa(self.params, self.k, r[..., None, :], self.ref_points)

    def filter(self, r) -> np.ndarray:
        """Interpolation filter ``z_x(r) = [(K + lam I)^{-1}]^T kappa(r)``, shape (..., R)."""
        kv = self.kernel_vectors(r)
        flat = kv.reshape(-1, kv.shape[-1])
        z = linalg.cho_solve(self._factor, flat.T).T
        return z.reshape(kv.shape)

    def estimate(self, r, x) -> np.ndarray:
        """Interpolated primary field ``z_x(r)^T x`` from reference signals ``x``."""
        return self.filter(r) @ np.asarray(x)


def interp_filter_zx(params: KernelParams, k, ref_points, r) -> np.ndarray:
    """One-shot version of :meth:`ReferenceInterpolator.filter`."""
    return ReferenceInterpolator(params, k, ref_points).filter(r)


def secondary_model_zeta(scene: SceneConfig, k, r) -> np.ndarray:
    """Free-field model of the secondary paths: ``G(r, r_l)`` for each source l.

    Deliberately ignores any scatterer in ``scene``.
    """
    r = np.asarray(r, dtype=float)
    return greens_free_2d(k, r[..., None, :], scene.secondary_array)
