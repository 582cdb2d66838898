"""Ridge-regularized VARX estimation of the one-step predictor.

Given the joint signal z = (u, y), the estimator regresses y[t] on the
stacked lag vector d[t] = (z[t-1], ..., z[t-p]) (newest lag first) and
solves

    G = argmin_G sum_t ||y[t] - G d[t]||^2 + alpha ||G||_F^2
      = N_T (Q_T + (alpha / T) I)^{-1},

with Q_T = D^T D / T and N_T = Y^T D / T.  A dataset of length T + p
supplies exactly T regression rows; the first p samples are the lag
context for the first row.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, InsufficientData, OrderMismatch

__all__ = [
    "LAG_LAYOUT",
    "Dataset",
    "VarxModel",
    "build_regressors",
    "empirical_moments",
    "solve_normal_equations",
    "fit_varx",
    "fit_from_moments",
    "predict_varx",
]

# Lag blocks are stacked most recent first: d[t] = (z[t-1], ..., z[t-p]).
# Every consumer of coefficient blocks (realization, moment oracles)
# shares this tag so the layouts cannot drift apart.
LAG_LAYOUT = "newest-first"


def _as_samples(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return x[:, None]
    if x.ndim != 2:
        raise DimensionMismatch(f"signal must be 1-d or 2-d, got shape {x.shape}")
    return x


@dataclass(frozen=True, eq=False)
class Dataset:
    """Joint signal window with lag order; length is t_count + p."""

    z: np.ndarray
    p: int
    n_u: int
    n_y: int

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        if z.ndim != 2:
            raise DimensionMismatch(f"z must be 2-d, got shape {z.shape}")
        if self.n_u < 1 or self.n_y < 1 or z.shape[1] != self.n_u + self.n_y:
            raise DimensionMismatch(
                f"z has {z.shape[1]} columns, expected n_u + n_y = {self.n_u + self.n_y}"
            )
        if self.p < 1:
            raise ValueError(f"lag order must be positive, got {self.p}")
        if z.shape[0] < self.p + 1:
            raise InsufficientData(
                f"need at least p + 1 = {self.p + 1} samples, got {z.shape[0]}"
            )
        if not np.all(np.isfinite(z)):
            raise ValueError("z contains non-finite entries")
        z = z.copy()
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @property
    def n_z(self) -> int:
        return self.n_u + self.n_y

    @property
    def t_count(self) -> int:
        """Number of regression rows."""
        return self.z.shape[0] - self.p

    @property
    def u(self) -> np.ndarray:
        return self.z[:, : self.n_u]

    @property
    def y(self) -> np.ndarray:
        return self.z[:, self.n_u :]

    @classmethod
    def from_signals(cls, u, y, p: int) -> "Dataset":
        """Build a dataset from (samples, channels) arrays; 1-d arrays are
        read as a single channel."""
        u = _as_samples(u)
        y = _as_samples(y)
        if u.shape[0] != y.shape[0]:
            raise DimensionMismatch("u and y must have the same number of samples")
        return cls(np.hstack([u, y]), p, u.shape[1], y.shape[1])


@dataclass(frozen=True, eq=False)
class VarxModel:
    """Fitted lag-polynomial coefficients G (n_y by p * n_z)."""

    g: np.ndarray
    p: int
    alpha: float
    lag_layout: str = field(default=LAG_LAYOUT)

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.g, dtype=float))
        if self.p < 1:
            raise ValueError(f"lag order must be positive, got {self.p}")
        if g.shape[1] % self.p != 0:
            raise DimensionMismatch(
                f"G has {g.shape[1]} columns, not divisible by p = {self.p}"
            )
        if not np.all(np.isfinite(g)):
            raise ValueError("G contains non-finite entries")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.lag_layout != LAG_LAYOUT:
            raise ValueError(f"unsupported lag layout {self.lag_layout!r}")
        g = g.copy()
        g.setflags(write=False)
        object.__setattr__(self, "g", g)

    @property
    def n_y(self) -> int:
        return self.g.shape[0]

    @property
    def n_z(self) -> int:
        return self.g.shape[1] // self.p

    def block(self, lag: int) -> np.ndarray:
        """Coefficient block for z[t - lag], lag in 1..p."""
        if not 1 <= lag <= self.p:
            raise ValueError(f"lag must lie in 1..{self.p}, got {lag}")
        n_z = self.n_z
        return self.g[:, (lag - 1) * n_z : lag * n_z]


def build_regressors(ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Stack lag vectors and targets: returns (D, Y) with T rows each.

    Row i corresponds to time index t = p + i in the dataset window;
    its lag blocks are z[t-1], z[t-2], ..., z[t-p] in that order and the
    target is the y part of z[t].
    """
    z, p, t = ds.z, ds.p, ds.t_count
    d = np.empty((t, p * ds.n_z))
    for lag in range(1, p + 1):
        d[:, (lag - 1) * ds.n_z : lag * ds.n_z] = z[p - lag : p - lag + t]
    y = z[p:, ds.n_u :].copy()
    return d, y


def empirical_moments(d: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sample moments Q_T = D^T D / T and N_T = Y^T D / T."""
    d = np.asarray(d, dtype=float)
    y = np.asarray(y, dtype=float)
    if d.shape[0] != y.shape[0]:
        raise DimensionMismatch("D and Y must have the same number of rows")
    if d.shape[0] == 0:
        raise InsufficientData("no regression rows")
    t = d.shape[0]
    return d.T @ d / t, y.T @ d / t


def solve_normal_equations(q: np.ndarray, n: np.ndarray, ridge: float) -> np.ndarray:
    """Solve G (Q + ridge I) = N by symmetric factorization."""
    q = np.asarray(q, dtype=float)
    n = np.asarray(n, dtype=float)
    lhs = q + ridge * np.eye(q.shape[0])
    cho = scipy.linalg.cho_factor(0.5 * (lhs + lhs.T))
    return scipy.linalg.cho_solve(cho, n.T).T


def fit_varx(ds: Dataset, alpha: float) -> VarxModel:
    """Ridge VARX fit G = N_T (Q_T + (alpha / T) I)^{-1}."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    d, y = build_regressors(ds)
    q_t, n_t = empirical_moments(d, y)
    g = solve_normal_equations(q_t, n_t, alpha / ds.t_count)
    return VarxModel(g, ds.p, alpha)


def fit_from_moments(q: np.ndarray, n: np.ndarray, p: int, alpha: float, t: float) -> VarxModel:
    """Fit from externally supplied moments; exact moments give the
    population-optimal coefficients as alpha / t -> 0."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    g = solve_normal_equations(np.asarray(q, float), np.asarray(n, float), alpha / t)
    return VarxModel(g, p, alpha)


def predict_varx(model: VarxModel, ds: Dataset) -> tuple[np.ndarray, float]:
    """One-step predictions and mean squared error on a dataset.

    Returns (yhat, mse) where yhat has one row per regression row and
    mse averages ||y[t] - yhat[t]||^2 over those rows.
    """
    if ds.p != model.p:
        raise OrderMismatch(f"dataset lag order {ds.p} != model lag order {model.p}")
    if ds.n_z != model.n_z:
        raise DimensionMismatch(f"dataset n_z {ds.n_z} != model n_z {model.n_z}")
    d, y = build_regressors(ds)
    yhat = d @ model.g.T
    mse = float(np.mean(np.sum((y - yhat) ** 2, axis=1)))
    return yhat, mse
