"""Experiment geometry and the ground-truth 2D sound field.

Time convention is e^{+jwt}: the outgoing free-field Green's function is
``-(j/4) H_0^(2)(k r)``. Every source has unit strength.

The rigid circular scatterer is handled with the exact cylindrical-harmonic
series. For a source at polar position (r_s, phi_s) and an observation point
(r, phi), both outside the disk of radius ``a``, the scattered field is::

    p_sc = (j/4) sum_n [J_n'(ka) / H_n'(ka)] H_n(k r_s) H_n(k r) e^{jn(phi - phi_s)}

which is symmetric in source and receiver, so reciprocity holds term by term.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np

from . import specfun
from .errors import ConvergenceError, DomainError, SceneError, SingularityError

DEFAULT_SOUND_SPEED = 343.0
SINGULAR_DISTANCE = 1.0e-9
SERIES_BUFFER = 16
SERIES_MAX_ORDER = 120
SERIES_TAIL = 10
SERIES_RTOL = 1.0e-8

Position = tuple[float, float]


@dataclass(frozen=True)
class Disk:
    center: Position
    radius: float

    def contains(self, points, strict=False):
        d = np.hypot(*(np.asarray(points, dtype=float) - np.asarray(self.center)).T)
        return d < self.radius if strict else d <= self.radius


@dataclass(frozen=True)
class Wavenumber:
    """Frequency together with the wavenumber ``k = 2 pi f / c``."""

    frequency: float
    sound_speed: float = DEFAULT_SOUND_SPEED

    @property
    def k(self) -> float:
        return 2.0 * math.pi * self.frequency / self.sound_speed


def _as_k(k) -> float:
    value = k.k if isinstance(k, Wavenumber) else float(k)
    if not value > 0:
        raise DomainError("wavenumber must be positive")
    return value


def _positions(points) -> tuple[Position, ...]:
    arr = np.asarray(points, dtype=float).reshape(-1, 2)
    return tuple((float(p[0]), float(p[1])) for p in arr)


@dataclass(frozen=True)
class SceneConfig:
    """Positions of all sources and microphones, the scatterer and the medium.

    Positions are stored as tuples so the config is hashable and compares by
    value; use the ``*_array`` properties for numerics.
    """

    primary_sources: tuple[Position, ...]
    secondary_sources: tuple[Position, ...]
    reference_mics: tuple[Position, ...]
    error_mics: tuple[Position, ...]
    target_region: Disk
    scatterer: Disk | None = None
    sound_speed: float = DEFAULT_SOUND_SPEED
    metadata: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        for name in ("primary_sources", "secondary_sources", "reference_mics", "error_mics"):
            object.__setattr__(self, name, _positions(getattr(self, name)))

    @property
    def primary_array(self):
        return np.array(self.primary_sources, dtype=float).reshape(-1, 2)

    @property
    def secondary_array(self):
        return np.array(self.secondary_sources, dtype=float).reshape(-1, 2)

    @property
    def reference_array(self):
        return np.array(self.reference_mics, dtype=float).reshape(-1, 2)

    @property
    def error_array(self):
        return np.array(self.error_mics, dtype=float).reshape(-1, 2)

    @property
    def num_secondary(self) -> int:
        return len(self.secondary_sources)

    @property
    def num_reference(self) -> int:
        return len(self.reference_mics)

    @property
    def num_error(self) -> int:
        return len(self.error_mics)

    def wavenumber(self, frequency: float) -> Wavenumber:
        return Wavenumber(float(frequency), self.sound_speed)

    def without_scatterer(self) -> "SceneConfig":
        return replace(self, scatterer=None)

    def violations(self) -> list[str]:
        """Return a human-readable list of violated invariants (empty if valid)."""
        problems = []
        groups = {
            "primary_sources": self.primary_array,
            "secondary_sources": self.secondary_array,
            "reference_mics": self.reference_array,
            "error_mics": self.error_array,
        }
        for name, pts in groups.items():
            if len(pts) < 1:
                problems.append(f"{name}: at least one position required")
            if not np.all(np.isfinite(pts)):
                problems.append(f"{name}: non-finite coordinates")
        if not self.sound_speed > 0:
            problems.append("sound_speed must be positive")
        if not self.target_region.radius > 0:
            problems.append("target_region radius must be positive")

        if self.scatterer is not None:
            if not self.scatterer.radius > 0:
                problems.append("scatterer radius must be positive")
            for name, pts in groups.items():
                inside = np.flatnonzero(self.scatterer.contains(pts))
                for i in inside:
                    problems.append(f"{name}[{i}] lies inside the scatterer (distance to center <= radius)")

        for i in np.flatnonzero(~self.target_region.contains(self.error_array)):
            problems.append(f"error_mics[{i}] lies outside the target region")
        for name in ("reference_mics", "secondary_sources"):
            for i in np.flatnonzero(self.target_region.contains(groups[name])):
                problems.append(f"{name}[{i}] lies inside the target region")

        everything = np.concatenate([g for g in groups.values() if len(g)])
        labels = [f"{name}[{i}]" for name, g in groups.items() for i in range(len(g))]
        dist = np.hypot(*(everything[:, None, :] - everything[None, :, :]).transpose(2, 0, 1))
        for i, j in zip(*np.nonzero(np.triu(dist < SINGULAR_DISTANCE, k=1))):
            problems.append(f"positions not pairwise distinct: {labels[i]} and {labels[j]} coincide")
        return problems

    def validate(self) -> "SceneConfig":
        problems = self.violations()
        if problems:
            raise SceneError("invalid scene: " + "; ".join(problems))
        return self


def ring(num: int, radius: float, center=(0.0, 0.0), shifts=None) -> np.ndarray:
    """``num`` points at angles 2 pi i / num, optionally with per-point radial shifts."""
    angles = 2.0 * np.pi * np.arange(num) / num
    radii = radius + (np.zeros(num) if shifts is None else np.asarray(shifts, dtype=float))
    return np.asarray(center, dtype=float) + radii[:, None] * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def build_scene_paper(sound_speed: float = DEFAULT_SOUND_SPEED) -> SceneConfig:
    """The 2D free-field layout with a rigid cylinder inside the target region.

    12 secondary sources on a 1.0 m circle, 6 reference microphones on a
    2.0 m circle shifted alternately by +0.03 m / -0.03 m radially, error
    microphones at (+-0.3, 0) m, one primary source at (-3.5, 0.2) m, target
    disk of radius 0.5 m and rigid disk of radius 0.15 m at the origin.
    Angular placement starts at angle 0 for both arrays.
    """
    ref_shifts = np.where(np.arange(6) % 2 == 0, 0.03, -0.03)
    return SceneConfig(
        primary_sources=((-3.5, 0.2),),
        secondary_sources=ring(12, 1.0),
        reference_mics=ring(6, 2.0, shifts=ref_shifts),
        error_mics=((0.3, 0.0), (-0.3, 0.0)),
        target_region=Disk((0.0, 0.0), 0.5),
        scatterer=Disk((0.0, 0.0), 0.15),
        sound_speed=sound_speed,
        metadata={"angular_start": 0.0, "reference_shift_pattern": "even +0.03 m, odd -0.03 m"},
    )


def greens_free_2d(k, r, r_src):
    """Outgoing 2D free-field Green's function ``-(j/4) H_0^(2)(k |r - r_src|)``.

    ``r`` and ``r_src`` are (..., 2) arrays that broadcast against each other.
    """
    k = _as_k(k)
    diff = np.asarray(r, dtype=float) - np.asarray(r_src, dtype=float)
    dist = np.hypot(diff[..., 0], diff[..., 1])
    if np.any(dist < SINGULAR_DISTANCE):
        raise SingularityError("Green's function evaluated at its source position")
    return -0.25j * specfun.hankel2(0, k * dist)


def _hankel_table(orders, x):
    """H_n^(2)(x) for every unique x, returned as (len(x), len(orders))."""
    ux, inverse = np.unique(x, return_inverse=True)
    table = specfun.hankel2(orders[None, :], ux[:, None])
    return table[inverse.reshape(-1)]


def _scattered_terms(k, a, r_pol, s_pol, dphi, n_max):
    orders = np.arange(n_max + 1)
    jp = specfun.bessel_j_deriv(orders, k * a)
    hp = specfun.hankel2_deriv(orders, k * a)
    coef = jp / hp
    h_r = _hankel_table(orders, k * r_pol)
    h_s = _hankel_table(orders, k * s_pol)
    weights = np.where(orders == 0, 1.0, 2.0)
    return 0.25j * weights * coef * h_r * h_s * np.cos(orders * dphi[:, None])


def series_order(k: float, a: float, r_max: float) -> int:
    """Initial truncation order ``ceil(k max(r, a)) + 16``, capped at 120."""
    return min(math.ceil(k * max(r_max, a)) + SERIES_BUFFER, SERIES_MAX_ORDER)


def scattered_field(scene: SceneConfig, k, src, r):
    """Field scattered by the rigid disk for unit sources at ``src`` observed at ``r``."""
    k = _as_k(k)
    src, r = np.broadcast_arrays(np.asarray(src, dtype=float), np.asarray(r, dtype=float))
    shape = r.shape[:-1]
    if scene.scatterer is None:
        return np.zeros(shape, dtype=complex)
    a = scene.scatterer.radius
    center = np.asarray(scene.scatterer.center, dtype=float)
    rel_r = r.reshape(-1, 2) - center
    rel_s = src.reshape(-1, 2) - center
    r_pol = np.hypot(rel_r[:, 0], rel_r[:, 1])
    s_pol = np.hypot(rel_s[:, 0], rel_s[:, 1])
    if np.any(r_pol <= a) or np.any(s_pol <= a):
        raise DomainError("source and observation points must lie outside the scatterer")
    dphi = np.arctan2(rel_r[:, 1], rel_r[:, 0]) - np.arctan2(rel_s[:, 1], rel_s[:, 0])

    n = series_order(k, a, max(r_pol.max(), s_pol.max()))
    while True:
        terms = _scattered_terms(k, a, r_pol, s_pol, dphi, n + SERIES_TAIL)
        if not np.all(np.isfinite(terms)):
            raise ConvergenceError(f"scattering series overflowed at order {n + SERIES_TAIL}")
        head = terms[:, : n + 1].sum(axis=1)
        tail = terms[:, n + 1 :].sum(axis=1)
        total = greens_free_2d(k, rel_r, rel_s) + head
        if np.all(np.abs(tail) <= SERIES_RTOL * np.abs(total)):
            return (head + tail).reshape(shape)
        if n >= SERIES_MAX_ORDER:
            raise ConvergenceError(f"scattering series did not converge by order {SERIES_MAX_ORDER}")
        n = min(n + SERIES_BUFFER, SERIES_MAX_ORDER)


def pressure_true(scene: SceneConfig, k, src, r):
    """Ground-truth pressure at ``r`` due to unit point sources at ``src``.

    Free-field term plus the rigid-scatterer series (when the scene has one).
    ``src`` and ``r`` are (..., 2) arrays that broadcast against each other.
    """
    return greens_free_2d(k, r, src) + scattered_field(scene, k, src, r)


def transfer_matrix_G(scene: SceneConfig, k) -> np.ndarray:
    """True secondary path: (M, L) matrix from secondary sources to error mics."""
    return pressure_true(scene, k, scene.secondary_array[None, :, :], scene.error_array[:, None, :])
