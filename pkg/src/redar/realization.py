"""Predictor realizations and innovation-form extraction.

A fitted lag polynomial G defines a finite-impulse-response one-step
predictor yhat[t] = G d[t].  Its delay-line realization stores the p
most recent z samples (newest first) in the state:

    A = block down-shift (nilpotent),  B = inject z[t] into the top slot,
    C = G,                             D = 0.

Balanced truncation of that realization gives the reduced predictor,
and splitting the reduced input matrix into its u and y columns
recovers a state-space model in innovation form: with B_r = [Bhat Khat]
and Chat = C_r, the predictor of (Ahat, Bhat, Chat, Khat) with
Ahat = A_r + Khat Chat is exactly the reduced system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .linalg import StateSpace, balanced_truncate, spectral_radius
from .varx import Dataset, VarxModel, _as_samples, fit_varx

__all__ = [
    "PredictorRealization",
    "IdentifiedModel",
    "FitResult",
    "predictor_from_coefficients",
    "varx_to_predictor",
    "reduce_predictor",
    "extract_innovation_form",
    "fit_redar",
    "run_predictor",
    "predict_with_model",
    "prediction_mse",
]


@dataclass(frozen=True, eq=False)
class PredictorRealization:
    """State-space predictor fed by z = (u, y); kind is full or reduced."""

    ss: StateSpace
    n_u: int
    n_y: int
    kind: str

    def __post_init__(self):
        if self.kind not in ("full", "reduced"):
            raise ValueError(f"kind must be 'full' or 'reduced', got {self.kind!r}")
        if self.ss.n_inputs != self.n_u + self.n_y:
            raise DimensionMismatch(
                f"predictor has {self.ss.n_inputs} inputs, expected {self.n_u + self.n_y}"
            )
        if self.ss.n_outputs != self.n_y:
            raise DimensionMismatch(
                f"predictor has {self.ss.n_outputs} outputs, expected {self.n_y}"
            )

    @property
    def order(self) -> int:
        return self.ss.n_states


@dataclass(frozen=True, eq=False)
class IdentifiedModel:
    """Innovation-form estimate (Ahat, Bhat, Chat, Dhat = 0, Khat)."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    k: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 2:
            a = np.atleast_2d(a) if a.size else a.reshape(0, 0)
        n = a.shape[0]
        if a.shape != (n, n):
            raise DimensionMismatch(f"Ahat must be square, got {a.shape}")
        b = np.atleast_2d(np.asarray(self.b, dtype=float))
        c = np.atleast_2d(np.asarray(self.c, dtype=float))
        k = np.atleast_2d(np.asarray(self.k, dtype=float))
        d = np.atleast_2d(np.asarray(self.d, dtype=float))
        if b.shape[0] != n:
            raise DimensionMismatch(f"Bhat has {b.shape[0]} rows, expected {n}")
        if c.shape[1] != n:
            raise DimensionMismatch(f"Chat has {c.shape[1]} columns, expected {n}")
        n_y = c.shape[0]
        if k.shape != (n, n_y):
            raise DimensionMismatch(f"Khat has shape {k.shape}, expected {(n, n_y)}")
        if d.shape != (n_y, b.shape[1]):
            raise DimensionMismatch(f"Dhat has shape {d.shape}, expected {(n_y, b.shape[1])}")
        if np.any(d != 0.0):
            raise ValueError("identified models are strictly proper: Dhat must be zero")
        for name, m in (("Ahat", a), ("Bhat", b), ("Chat", c), ("Khat", k)):
            if m.size and not np.all(np.isfinite(m)):
                raise ValueError(f"{name} contains non-finite entries")
        for name, m in (("a", a), ("b", b), ("c", c), ("d", d), ("k", k)):
            m = m.copy()
            m.setflags(write=False)
            object.__setattr__(self, name, m)

    @property
    def order(self) -> int:
        return self.a.shape[0]

    @property
    def n_u(self) -> int:
        return self.b.shape[1]

    @property
    def n_y(self) -> int:
        return self.c.shape[0]

    def predictor(self) -> StateSpace:
        """One-step predictor (A - K C, [B K], C, 0) driven by z."""
        return StateSpace(
            self.a - self.k @ self.c,
            np.hstack([self.b, self.k]),
            self.c,
            np.zeros((self.n_y, self.n_u + self.n_y)),
        )


def predictor_from_coefficients(g, p: int, n_u: int, n_y: int) -> PredictorRealization:
    """Delay-line realization of yhat[t] = G d[t] (newest lag first)."""
    g = np.atleast_2d(np.asarray(g, dtype=float))
    n_z = n_u + n_y
    if g.shape != (n_y, p * n_z):
        raise DimensionMismatch(f"G has shape {g.shape}, expected {(n_y, p * n_z)}")
    n = p * n_z
    a = np.zeros((n, n))
    for j in range(1, p):
        a[j * n_z : (j + 1) * n_z, (j - 1) * n_z : j * n_z] = np.eye(n_z)
    b = np.zeros((n, n_z))
    b[:n_z] = np.eye(n_z)
    d = np.zeros((n_y, n_z))
    return PredictorRealization(StateSpace(a, b, g, d), n_u, n_y, kind="full")


def varx_to_predictor(model: VarxModel, n_u: int, n_y: int) -> PredictorRealization:
    """Delay-line realization of a fitted VARX model."""
    if model.n_y != n_y or model.n_z != n_u + n_y:
        raise DimensionMismatch(
            f"model is ({model.n_y} by p*{model.n_z}), inconsistent with "
            f"n_u = {n_u}, n_y = {n_y}"
        )
    return predictor_from_coefficients(model.g, model.p, n_u, n_y)


def reduce_predictor(h_full: PredictorRealization, phi: float) -> tuple[PredictorRealization, float]:
    """Balanced-truncate a predictor to H-infinity budget ``phi``.

    Returns (reduced, certified_error) with certified_error <= phi and
    the zero feedthrough preserved.
    """
    reduced_ss, certified = balanced_truncate(h_full.ss, phi)
    reduced = PredictorRealization(reduced_ss, h_full.n_u, h_full.n_y, kind="reduced")
    return reduced, certified


def extract_innovation_form(h_reduced: PredictorRealization) -> IdentifiedModel:
    """Read an innovation-form model off a reduced predictor.

    Bhat takes the first n_u input columns, Khat the remaining n_y,
    Chat = C_r and Ahat = A_r + Khat Chat; the model's own predictor then
    reproduces the reduced system exactly.
    """
    if h_reduced.kind != "reduced":
        raise ValueError("extraction expects a reduced predictor")
    ss = h_reduced.ss
    n_u = h_reduced.n_u
    b_hat = ss.b[:, :n_u]
    k_hat = ss.b[:, n_u:]
    c_hat = ss.c
    a_hat = ss.a + k_hat @ c_hat
    d_hat = np.zeros((h_reduced.n_y, n_u))
    return IdentifiedModel(a_hat, b_hat, c_hat, d_hat, k_hat)


@dataclass(frozen=True)
class FitResult:
    """Every stage of one pipeline run, from lag polynomial to model."""

    varx: VarxModel
    full: PredictorRealization
    reduced: PredictorRealization
    certified_error: float
    model: IdentifiedModel


def fit_redar(ds: Dataset, alpha: float, phi: float) -> FitResult:
    """Full pipeline: ridge VARX fit, delay-line realization, balanced
    reduction to budget ``phi``, innovation-form extraction."""
    varx = fit_varx(ds, alpha)
    full = varx_to_predictor(varx, ds.n_u, ds.n_y)
    reduced, certified = reduce_predictor(full, phi)
    model = extract_innovation_form(reduced)
    return FitResult(varx=varx, full=full, reduced=reduced, certified_error=certified, model=model)


def run_predictor(ss: StateSpace, z: np.ndarray) -> np.ndarray:
    """Run a predictor recursion over a joint signal from zero state.

    Output row t depends on z[0..t-1] only (strict one-step causality:
    the feedthrough of predictor realizations is zero).
    """
    z = np.asarray(z, dtype=float)
    if z.ndim != 2 or z.shape[1] != ss.n_inputs:
        raise DimensionMismatch(f"z has shape {z.shape}, expected (*, {ss.n_inputs})")
    a, b, c, d = ss.a, ss.b, ss.c, ss.d
    x = np.zeros(ss.n_states)
    out = np.empty((z.shape[0], ss.n_outputs))
    for t in range(z.shape[0]):
        out[t] = c @ x + d @ z[t]
        x = a @ x + b @ z[t]
    return out


def predict_with_model(model: IdentifiedModel, u, y) -> np.ndarray:
    """One-step predictions of an identified model on given signals.

    ``u`` and ``y`` are (samples, channels) arrays; 1-d arrays are read
    as a single channel.
    """
    u = _as_samples(u)
    y = _as_samples(y)
    if u.shape[0] != y.shape[0]:
        raise DimensionMismatch("u and y must have the same number of samples")
    if u.shape[1] != model.n_u or y.shape[1] != model.n_y:
        raise DimensionMismatch("channel counts do not match the model")
    return run_predictor(model.predictor(), np.hstack([u, y]))


def prediction_mse(y: np.ndarray, yhat: np.ndarray, discard: int = 0) -> float:
    """Mean of ||y[t] - yhat[t]||^2 over t >= discard."""
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape:
        raise DimensionMismatch(f"shape mismatch {y.shape} vs {yhat.shape}")
    if discard >= y.shape[0]:
        raise ValueError("discard leaves no samples")
    err = y[discard:] - yhat[discard:]
    return float(np.mean(np.sum(err**2, axis=1)))
