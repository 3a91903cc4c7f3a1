"""Frequency-domain control filters.

Three controllers share one state type:

``nlms``
    conventional multichannel NLMS on the error-microphone power, W_0 = 0.
``fixed_kir``
    the filter minimizing the interpolated regional energy, never updated.
``nlms_transition``
    NLMS on ``gamma**n * J_PE + ||e||^2`` started from the fixed filter, so the
    regional term fades out and the filter drifts toward plain NLMS.

Step functions are pure: they return a new :class:`ControlState`.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg

from .quadrature import InterpolationMatrices

ALGORITHMS = ("nlms", "fixed_kir", "nlms_transition")
FIXED_COND_LIMIT = 1.0e12
PINV_RTOL = 1.0e-10


@dataclass(frozen=True)
class StepParams:
    mu0: float = 0.1
    epsilon: float = 1.0e-8
    gamma: float = 0.9

    def __post_init__(self):
        if not 0 < self.mu0 < 2:
            raise ValueError("mu0 must lie in (0, 2)")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        # gamma = 0 switches the regional term off entirely (plain NLMS from W_fixed)
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")


@dataclass(frozen=True, eq=False)
class ControlState:
    W: np.ndarray
    algorithm: str
    n: int = 0
    gamma_pow: float = 1.0
    gg_norm: float | None = None
    ayy_norm: float | None = None
    solver: str | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")


def spectral_norm_gram(G) -> float:
    """``||G^H G||_2``, i.e. the largest singular value of G squared."""
    G = np.asarray(G)
    return float(np.linalg.norm(G.conj().T @ G, 2))


def _gamma_pow(gamma: float, n: int) -> float:
    return gamma**n if gamma > 0 else 0.0


def nlms_state(num_secondary: int, num_reference: int) -> ControlState:
    return ControlState(np.zeros((num_secondary, num_reference), dtype=complex), "nlms")


def transition_state(fixed: ControlState, p: StepParams) -> ControlState:
    return ControlState(fixed.W.copy(), "nlms_transition", gamma_pow=_gamma_pow(p.gamma, 0), solver=fixed.solver)


def drive_signals(state: ControlState, x) -> np.ndarray:
    """Secondary source driving signals ``y = W x``."""
    x = np.asarray(x)
    if x.shape != (state.W.shape[1],):
        raise ValueError(f"reference vector has shape {x.shape}, filter expects ({state.W.shape[1]},)")
    return state.W @ x


def _check_error(G, e, state):
    G = np.asarray(G)
    e = np.asarray(e)
    if G.shape[1] != state.W.shape[0] or e.shape != (G.shape[0],):
        raise ValueError("dimension mismatch between G, e and W")
    return G, e


def nlms_step(state: ControlState, x, e, G, p: StepParams) -> ControlState:
    """``W <- W - mu G^H e x^H`` with ``mu = mu0 / (||G^H G|| ||x||^2 + eps)``."""
    if state.algorithm != "nlms":
        raise ValueError("nlms_step needs an nlms state")
    x = np.asarray(x)
    G, e = _check_error(G, e, state)
    gg = state.gg_norm if state.gg_norm is not None else spectral_norm_gram(G)
    mu = p.mu0 / (gg * np.vdot(x, x).real + p.epsilon)
    grad = G.conj().T @ e
    W = state.W - mu * np.outer(grad, x.conj())
    return replace(state, W=W, n=state.n + 1, gg_norm=gg)


def fixed_filter(mats: InterpolationMatrices) -> ControlState:
    """``W = -A_yy^{-1} A_yx``, falling back to the pseudo-inverse when A_yy is singular.

    ``state.solver`` records which path was taken ("cholesky" or "pinv").
    """
    A_yy, A_yx = mats.A_yy, mats.A_yx
    W = None
    if mats.cond_yy < FIXED_COND_LIMIT:
        try:
            W = -linalg.cho_solve(linalg.cho_factor(A_yy), A_yx)
            solver = "cholesky"
        except linalg.LinAlgError:
            W = None
    if W is None:
        W = -linalg.pinv(A_yy, rtol=PINV_RTOL) @ A_yx
        solver = "pinv"
    # C order keeps W @ x bit-identical after the copy in transition_state
    return ControlState(np.ascontiguousarray(W), "fixed_kir", solver=solver)


def transition_step(state: ControlState, x, e, G, mats: InterpolationMatrices, p: StepParams) -> ControlState:
    """One NLMS update on the time-weighted regional + error-mic cost.

    ``W <- W - mu [g (A_yy y + A_yx x) + G^H e] x^H`` with ``g = gamma**n`` and
    ``mu = mu0 / (g ||A_yy|| + ||G^H G|| ||x||^2 + eps)``.
    """
    if state.algorithm != "nlms_transition":
        raise ValueError("transition_step needs an nlms_transition state")
    x = np.asarray(x)
    G, e = _check_error(G, e, state)
    gg = state.gg_norm if state.gg_norm is not None else spectral_norm_gram(G)
    ayy = state.ayy_norm if state.ayy_norm is not None else float(np.linalg.norm(mats.A_yy, 2))
    g = state.gamma_pow
    y = state.W @ x
    mu = p.mu0 / (g * ayy + gg * np.vdot(x, x).real + p.epsilon)
    grad = g * (mats.A_yy @ y + mats.A_yx @ x) + G.conj().T @ e
    W = state.W - mu * np.outer(grad, x.conj())
    n = state.n + 1
    return replace(state, W=W, n=n, gamma_pow=_gamma_pow(p.gamma, n), gg_norm=gg, ayy_norm=ayy)
