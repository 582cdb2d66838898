"""Exact second moments and optimal one-step predictors.

The closed loop driven by unit-covariance white noise has a known
stationary law, so the regression moments that the VARX estimator only
approximates from data can be computed exactly:

    r[0] = C P C^T + D D^T,
    r[t] = C A^{t-1} (A P C^T + B D^T),   t >= 1,

with P the stationary state covariance of the noise-to-signal
realization.  Q is the block-Toeplitz lag covariance built from
r[0..p-1] (newest lag first) and N stacks the y rows of r[1..p].
The population-optimal lag predictor is G_opt = N Q^{-1}; the
infinite-memory optimum is the steady-state Kalman predictor

    H*(q) = C (qI - (A - KC))^{-1} [B K],

whose mean squared error floor is trace(Psi).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import PredictorUnstable
from .linalg import StateSpace, solve_discrete_lyapunov, spectral_radius
from .realization import PredictorRealization, predictor_from_coefficients
from .systems import ClosedLoop, InnovationModel, noise_to_signal

__all__ = [
    "CovarianceFloorWarning",
    "MomentSet",
    "autocovariance",
    "exact_moments",
    "finite_horizon_predictor",
    "steady_state_predictor",
    "predictor_markov_blocks",
]


class CovarianceFloorWarning(UserWarning):
    """lambda_min(Q) fell below the joint noise floor lambda_min(Gamma).

    The floor holds exactly at lag order 1 (one-step conditioning), but
    stacked lags can dip below it toward the spectral-density minimum
    min_w lambda_min(J(e^{iw}) J(e^{iw})^H), so for p >= 2 this is a real
    possibility, not a numerical artifact.  Q itself is still exact and
    positive definite; only bound constants built on the floor lose
    slack.
    """


@dataclass(frozen=True, eq=False)
class MomentSet:
    """Exact lag moments of a closed loop at lag order p."""

    r: np.ndarray  # (p + 1, n_z, n_z), r[t] = E[z[t] z[0]^T]
    q: np.ndarray  # (p n_z, p n_z) lag covariance, block Toeplitz
    n: np.ndarray  # (n_y, p n_z) target-lag cross covariance
    p: int

    @property
    def n_z(self) -> int:
        return self.r.shape[1]


def autocovariance(cl: ClosedLoop, max_lag: int) -> np.ndarray:
    """Stationary autocovariances r[0..max_lag] of z = (u, y)."""
    if max_lag < 0:
        raise ValueError(f"max_lag must be nonnegative, got {max_lag}")
    j = noise_to_signal(cl)
    p_state = solve_discrete_lyapunov(j.a, j.b @ j.b.T)
    n_z = cl.n_z
    out = np.empty((max_lag + 1, n_z, n_z))
    out[0] = j.c @ p_state @ j.c.T + j.d @ j.d.T
    if max_lag == 0:
        return out
    # cross covariance between the state at t+1 and z at t
    m = j.a @ p_state @ j.c.T + j.b @ j.d.T
    for t in range(1, max_lag + 1):
        out[t] = j.c @ m
        m = j.a @ m
    return out


def exact_moments(cl: ClosedLoop, p: int) -> MomentSet:
    """Population moments (Q, N) of the lag regression at order p.

    Q is block Toeplitz with block (i, j) = r[j - i] for lags stored
    newest first, using r[-t] = r[t]^T; N stacks the y rows of r[1..p].
    The floor lambda_min(Q) >= lambda_min(Gamma) is checked numerically
    with a 1e-8 slack and warns when violated (see
    CovarianceFloorWarning; violations are expected for some loops at
    p >= 2).
    """
    if p < 1:
        raise ValueError(f"lag order must be positive, got {p}")
    r = autocovariance(cl, p)
    n_z, n_y = cl.n_z, cl.n_y
    q = np.empty((p * n_z, p * n_z))
    for i in range(p):
        for j in range(p):
            lag = j - i
            block = r[lag] if lag >= 0 else r[-lag].T
            q[i * n_z : (i + 1) * n_z, j * n_z : (j + 1) * n_z] = block
    q = 0.5 * (q + q.T)
    n = np.hstack([r[t][cl.n_u :, :] for t in range(1, p + 1)])
    lam_min = float(np.linalg.eigvalsh(q).min())
    if lam_min < cl.xi - 1e-8:
        warnings.warn(
            f"lambda_min(Q) = {lam_min:.6e} is below lambda_min(Gamma) = {cl.xi:.6e}",
            CovarianceFloorWarning,
            stacklevel=2,
        )
    return MomentSet(r=r, q=q, n=n, p=p)


def finite_horizon_predictor(cl: ClosedLoop, p: int) -> tuple[np.ndarray, PredictorRealization]:
    """Population-optimal lag-p predictor G_opt = N Q^{-1} and its realization."""
    moments = exact_moments(cl, p)
    try:
        cho = scipy.linalg.cho_factor(moments.q)
    except np.linalg.LinAlgError as exc:
        lam = float(np.linalg.eigvalsh(moments.q).min())
        raise ArithmeticError(
            f"lag covariance not positive definite (lambda_min(Q) = {lam:.6e}, "
            f"lambda_min(Gamma) = {cl.xi:.6e})"
        ) from exc
    g_opt = scipy.linalg.cho_solve(cho, moments.n.T).T
    h_opt = predictor_from_coefficients(g_opt, p, cl.n_u, cl.n_y)
    return g_opt, h_opt


def steady_state_predictor(plant: InnovationModel) -> StateSpace:
    """Steady-state Kalman one-step predictor of an innovation model.

    Realization (A - KC, [B K], C, 0) driven by z = (u, y); requires
    rho(A - KC) < 1.
    """
    a_pred = plant.a - plant.k @ plant.c
    sr = spectral_radius(a_pred)
    if sr >= 1.0 - 1e-9:
        raise PredictorUnstable(f"rho(A - KC) = {sr:.9g}, needs < 1")
    b = np.hstack([plant.b, plant.k])
    d = np.zeros((plant.n_y, plant.n_u + plant.n_y))
    return StateSpace(a_pred, b, plant.c, d)


def predictor_markov_blocks(plant: InnovationModel, count: int) -> np.ndarray:
    """Markov parameters H[i] = C (A - KC)^{i-1} [B K] for i = 1..count."""
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")
    h = steady_state_predictor(plant)
    out = np.empty((count, plant.n_y, plant.n_u + plant.n_y))
    m = h.b
    for i in range(count):
        out[i] = h.c @ m
        m = h.a @ m
    return out
