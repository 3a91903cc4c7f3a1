"""Simulation loop: observations, controllers, and the regional reduction metric.

Per frequency the ground truth is computed once (primary field on the
evaluation grid, true secondary paths, noiseless microphone pressures); each
iteration then adds fresh measurement noise, drives the controller and
records ``P_red``. Every frequency has its own RNG stream seeded from
``(rng_seed, frequency index)`` and shared by all algorithms, so serial and
parallel sweeps agree and the algorithms see identical noise.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
import logging
import math
import traceback

import numpy as np

from . import control
from .control import ControlState, StepParams
from .kernel import KernelParams, ReferenceInterpolator
from .quadrature import (
    DEFAULT_SPACING,
    FieldMap,
    InterpolationMatrices,
    RegionGrid,
    interpolation_matrices,
    make_grid,
)
from .scene import SceneConfig, Wavenumber, pressure_true, transfer_matrix_G

logger = logging.getLogger(__name__)

P_RED_FLOOR_DB = -200.0


@dataclass(frozen=True)
class ExperimentConfig:
    scene: SceneConfig
    frequencies: tuple = (400.0,)
    iterations: int = 10000
    snr_db: float = 40.0
    algorithms: tuple = control.ALGORITHMS
    step: StepParams = StepParams()
    beta: float = 6.0
    eta: tuple | None = None
    lam: float | None = None
    grid_spacing: float = DEFAULT_SPACING
    eval_spacing: float | None = None
    rng_seed: int = 0
    checkpoints: tuple | None = None
    conjugate: bool = False
    # False: error mics see free-field secondary paths even with a scatterer
    secondary_path_scattering: bool = True

    def __post_init__(self):
        object.__setattr__(self, "frequencies", tuple(float(f) for f in np.atleast_1d(self.frequencies)))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not all(f > 0 for f in self.frequencies):
            raise ValueError("frequencies must be positive")
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ValueError("snr_db must be a number (use inf to disable noise)")
        for name in self.algorithms:
            if name not in control.ALGORITHMS:
                raise ValueError(f"unknown algorithm {name!r}")

    def kernel_params(self) -> KernelParams:
        """Kernel pointed at the first primary source unless ``eta`` is given."""
        if self.eta is not None:
            return KernelParams(beta=self.beta, eta=self.eta, lam=self.lam)
        return KernelParams.toward(
            self.scene.primary_sources[0], self.scene.target_region.center, beta=self.beta, lam=self.lam
        )

    def checkpoint_set(self) -> tuple:
        if self.checkpoints is None:
            return tuple(sorted({0, self.iterations - 1}))
        return tuple(sorted(int(c) % self.iterations for c in self.checkpoints))


@dataclass
class FrequencyProblem:
    """Everything at one frequency that does not change across iterations."""

    frequency: float
    k: float
    G: np.ndarray
    x_true: np.ndarray
    d_true: np.ndarray
    eval_grid: RegionGrid
    u_p: np.ndarray
    U_s: np.ndarray
    mats: InterpolationMatrices | None = None
    gram_condition: float | None = None

    def conj(self) -> "FrequencyProblem":
        return FrequencyProblem(
            self.frequency,
            self.k,
            self.G.conj(),
            self.x_true.conj(),
            self.d_true.conj(),
            self.eval_grid,
            self.u_p.conj(),
            self.U_s.conj(),
            None if self.mats is None else self.mats.conj(),
            self.gram_condition,
        )


@dataclass
class AlgorithmResult:
    algorithm: str
    p_red: np.ndarray
    W_final: np.ndarray
    y_final: np.ndarray
    field_maps: dict = field(default_factory=dict)
    solver: str | None = None


@dataclass
class FrequencyResult:
    frequency: float
    algorithms: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)
    error: str | None = None
    matrices: InterpolationMatrices | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class RunResult:
    config: ExperimentConfig
    frequencies: list
    metadata: dict

    @property
    def failures(self) -> list:
        return [r for r in self.frequencies if not r.ok]

    def final_p_red(self, algorithm: str) -> np.ndarray:
        return np.array(
            [r.algorithms[algorithm].p_red[-1] if r.ok else np.nan for r in self.frequencies]
        )


def _noise_std(clean: np.ndarray, snr_db: float) -> float:
    if snr_db == math.inf:
        return 0.0
    return math.sqrt(np.mean(np.abs(clean) ** 2) * 10.0 ** (-snr_db / 10.0))


def _complex_noise(rng, shape, std):
    """Circular complex Gaussian samples with E|n|^2 = std**2."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * (std / math.sqrt(2.0))


def true_mic_pressures(scene: SceneConfig, k):
    """Noiseless primary-field pressures at the reference and error microphones."""
    src = scene.primary_array
    x = pressure_true(scene, k, src[None, :, :], scene.reference_array[:, None, :]).sum(axis=1)
    d = pressure_true(scene, k, src[None, :, :], scene.error_array[:, None, :]).sum(axis=1)
    return x, d


def observe(scene: SceneConfig, k, rng, snr_db: float, draws: int | None = None):
    """Noisy snapshot ``(x, d)`` of the primary field at the microphones.

    Each array gets noise variance equal to its mean clean power scaled by
    ``10**(-snr_db/10)``; ``snr_db = inf`` disables noise. With ``draws`` the
    result has a leading axis of that many independent snapshots.
    """
    x, d = true_mic_pressures(scene, k)
    lead = () if draws is None else (draws,)
    x = x + _complex_noise(rng, lead + x.shape, _noise_std(x, snr_db))
    d = d + _complex_noise(rng, lead + d.shape, _noise_std(d, snr_db))
    return x, d


def error_signal(G_true, d, y) -> np.ndarray:
    """Error microphone signals ``e = d + G y``."""
    return np.asarray(d) + np.asarray(G_true) @ np.asarray(y)


def reduction_db(u_e, u_p) -> float:
    """``10 log10(sum |u_e|^2 / sum |u_p|^2)``, floored at -200 dB."""
    num = float(np.sum(np.abs(u_e) ** 2))
    den = float(np.sum(np.abs(u_p) ** 2))
    if num <= den * 10.0 ** (P_RED_FLOOR_DB / 10.0):
        return P_RED_FLOOR_DB
    return 10.0 * math.log10(num / den)


def true_fields(scene: SceneConfig, k, points):
    """Primary field (P,) and per-secondary-source fields (P, L) at ``points``."""
    points = np.asarray(points, dtype=float)
    u_p = pressure_true(scene, k, scene.primary_array[None, :, :], points[:, None, :]).sum(axis=1)
    U_s = pressure_true(scene, k, scene.secondary_array[None, :, :], points[:, None, :])
    return u_p, U_s


def evaluate_field(scene: SceneConfig, k, y, grid: RegionGrid):
    """Regional reduction ``P_red`` in dB and the total field on ``grid``.

    Uses the simulator's ground truth (scattering included), not observations.
    """
    u_p, U_s = true_fields(scene, k, grid.points)
    u_e = u_p + U_s @ np.asarray(y)
    return reduction_db(u_e, u_p), FieldMap(grid.points, u_e, "total")


def normalized_power_map(scene: SceneConfig, k, y, points) -> np.ndarray:
    """``10 log10(|u_e|^2 / mean |u_p|^2)`` at ``points`` for driving signals ``y``."""
    u_p, U_s = true_fields(scene, k, points)
    u_e = u_p + U_s @ np.asarray(y)
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.abs(u_e) ** 2 / np.mean(np.abs(u_p) ** 2))


def build_problem(config: ExperimentConfig, frequency: float, need_matrices: bool = True) -> FrequencyProblem:
    scene = config.scene
    k = Wavenumber(frequency, scene.sound_speed).k
    grid = make_grid(scene.target_region, scene.scatterer, config.grid_spacing)
    eval_grid = grid if config.eval_spacing is None else make_grid(scene.target_region, scene.scatterer, config.eval_spacing)
    x_true, d_true = true_mic_pressures(scene, k)
    u_p, U_s = true_fields(scene, k, eval_grid.points)
    mats = None
    gram_condition = None
    if need_matrices:
        interp = ReferenceInterpolator(config.kernel_params(), k, scene.reference_array)
        mats = interpolation_matrices(scene, k, config.kernel_params(), grid, interpolator=interp)
        gram_condition = interp.condition
    G = transfer_matrix_G(scene if config.secondary_path_scattering else scene.without_scatterer(), k)
    return FrequencyProblem(
        frequency, k, G, x_true, d_true, eval_grid, u_p, U_s, mats, gram_condition
    )


def _initial_state(algorithm: str, problem: FrequencyProblem, step: StepParams) -> ControlState:
    L, R = problem.U_s.shape[1], problem.x_true.shape[0]
    if algorithm == "nlms":
        return control.nlms_state(L, R)
    fixed = control.fixed_filter(problem.mats)
    if algorithm == "fixed_kir":
        return fixed
    return control.transition_state(fixed, step)


def simulate(
    problem: FrequencyProblem,
    algorithm: str,
    config: ExperimentConfig,
    noise_x,
    noise_d,
    initial_state: ControlState | None = None,
) -> AlgorithmResult:
    """Run one controller for ``len(noise_x)`` iterations on a prepared problem.

    ``initial_state`` replaces the algorithm's default starting filter.
    """
    step = config.step
    checkpoints = set(config.checkpoint_set())
    state = initial_state if initial_state is not None else _initial_state(algorithm, problem, step)
    iterations = len(noise_x)
    p_red = np.empty(iterations)
    maps = {}
    y = np.zeros(problem.U_s.shape[1], dtype=complex)
    for n in range(iterations):
        x = problem.x_true + noise_x[n]
        d = problem.d_true + noise_d[n]
        y = control.drive_signals(state, x)
        e = error_signal(problem.G, d, y)
        u_e = problem.u_p + problem.U_s @ y
        p_red[n] = reduction_db(u_e, problem.u_p)
        if n in checkpoints:
            maps[n] = FieldMap(problem.eval_grid.points, u_e, "total")
        if algorithm == "nlms":
            state = control.nlms_step(state, x, e, problem.G, step)
        elif algorithm == "nlms_transition":
            state = control.transition_step(state, x, e, problem.G, problem.mats, step)
    return AlgorithmResult(algorithm, p_red, state.W, y, maps, state.solver)


def draw_noise(config: ExperimentConfig, index: int, problem: FrequencyProblem):
    """Measurement noise for every iteration at frequency ``index``."""
    rng = np.random.default_rng([config.rng_seed, index])
    R, M = problem.x_true.shape[0], problem.d_true.shape[0]
    noise_x = _complex_noise(rng, (config.iterations, R), _noise_std(problem.x_true, config.snr_db))
    noise_d = _complex_noise(rng, (config.iterations, M), _noise_std(problem.d_true, config.snr_db))
    return noise_x, noise_d


def run_frequency(config: ExperimentConfig, index: int) -> FrequencyResult:
    frequency = config.frequencies[index]
    result = FrequencyResult(frequency)
    try:
        needs_mats = any(a != "nlms" for a in config.algorithms)
        problem = build_problem(config, frequency, need_matrices=needs_mats)
        noise_x, noise_d = draw_noise(config, index, problem)
        if config.conjugate:
            problem = problem.conj()
            noise_x, noise_d = noise_x.conj(), noise_d.conj()
        result.info = {"k": problem.k, "eval_points": len(problem.eval_grid)}
        result.matrices = problem.mats
        if problem.mats is not None:
            result.info.update(
                lam=problem.mats.lam,
                cond_gram=problem.gram_condition,
                cond_A_yy=problem.mats.cond_yy,
                grid_points=len(problem.mats.grid),
            )
        for algorithm in config.algorithms:
            result.algorithms[algorithm] = simulate(problem, algorithm, config, noise_x, noise_d)
    except Exception as exc:  # reported per frequency, the sweep continues
        logger.error("frequency %.1f Hz failed: %s", frequency, exc)
        result.error = f"{type(exc).__name__}: {exc}"
        result.info["traceback"] = traceback.format_exc()
    return result


def _run_index(args):
    config, index = args
    return run_frequency(config, index)


def run(config: ExperimentConfig, jobs: int = 1) -> RunResult:
    """Run every algorithm at every frequency; failures are recorded, not raised."""
    config.scene.validate()
    indices = range(len(config.frequencies))
    if jobs > 1 and len(config.frequencies) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_index, [(config, i) for i in indices]))
    else:
        results = [run_frequency(config, i) for i in indices]
    return RunResult(config, results, run_metadata(config))


def run_metadata(config: ExperimentConfig) -> dict:
    scene = config.scene
    kp = config.kernel_params()
    return {
        "sound_speed": scene.sound_speed,
        "time_convention": "exp(+j omega t)",
        "greens_function": "-(j/4) H0^(2)(k r)",
        "scatterer": None if scene.scatterer is None else asdict(scene.scatterer),
        "secondary_path_scattering": config.secondary_path_scattering,
        "scene_notes": dict(scene.metadata),
        "kernel": {"beta": kp.beta, "eta": list(kp.eta), "lam": "1e-3*trace(K)/R" if kp.lam is None else kp.lam},
        "step": asdict(config.step),
        "snr_db": config.snr_db,
        "snr_definition": "per-array mean clean power",
        "noise_model": "circular complex Gaussian, fresh each iteration",
        "source_signal": "constant 1 per frame",
        "rng": f"numpy default_rng([seed={config.rng_seed}, frequency index])",
        "grid_spacing": config.grid_spacing,
        "eval_spacing": config.eval_spacing,
        "iterations": config.iterations,
    }
