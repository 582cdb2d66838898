"""Plant, controller and closed-loop containers plus simulation.

The plant is a linear stochastic system in innovation form,

    x[t+1] = A x[t] + B u[t] + K e[t],      y[t] = C x[t] + e[t],

driven by a dynamic output-feedback controller with an exogenous
excitation channel,

    s[t+1] = AF s[t] + B1F y[t] + B2F v[t],
    u[t]   = CF s[t] + D1F y[t] + D2F v[t],

where e ~ N(0, Psi) and v ~ N(0, I) are independent white sequences.
The plant is strictly proper in u, so the loop is well posed: y[t] is
computed from (x[t], e[t]) first and u[t] follows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateNoise,
    DimensionMismatch,
    GenerationFailed,
    NotStabilizable,
    Unstable,
)
from .linalg import (
    StateSpace,
    kalman_gain,
    solve_discrete_lyapunov,
    solve_discrete_riccati,
    spectral_radius,
)

__all__ = [
    "InnovationModel",
    "Controller",
    "ClosedLoop",
    "Trajectory",
    "Dims",
    "assemble_closed_loop",
    "noise_to_signal",
    "stationary_autocovariance_zero",
    "signal_powers",
    "simulate",
    "random_innovation_model",
    "random_closed_loop",
]


def _matrix(m, rows, cols, name):
    a = np.atleast_2d(np.asarray(m, dtype=float))
    if a.shape != (rows, cols):
        raise DimensionMismatch(f"{name} has shape {a.shape}, expected {(rows, cols)}")
    if a.size and not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    a = a.copy()
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class InnovationModel:
    """Innovation-form plant (A, B, C, K, Psi); strictly proper in u."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    k: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        n_x = a.shape[0]
        if a.shape != (n_x, n_x):
            raise DimensionMismatch(f"A must be square, got {a.shape}")
        b = np.atleast_2d(np.asarray(self.b, dtype=float))
        if b.shape[0] != n_x:
            raise DimensionMismatch(f"B has {b.shape[0]} rows, expected {n_x}")
        c = np.atleast_2d(np.asarray(self.c, dtype=float))
        if c.shape[1] != n_x:
            raise DimensionMismatch(f"C has {c.shape[1]} columns, expected {n_x}")
        n_y = c.shape[0]
        k = _matrix(self.k, n_x, n_y, "K")
        psi = _matrix(self.psi, n_y, n_y, "Psi")
        if not np.allclose(psi, psi.T, atol=1e-12):
            raise ValueError("Psi must be symmetric")
        if np.linalg.eigvalsh(0.5 * (psi + psi.T)).min() <= 0.0:
            raise ValueError("Psi must be positive definite")
        object.__setattr__(self, "a", _matrix(a, n_x, n_x, "A"))
        object.__setattr__(self, "b", _matrix(b, n_x, b.shape[1], "B"))
        object.__setattr__(self, "c", _matrix(c, n_y, n_x, "C"))
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "psi", psi)

    @property
    def n_x(self) -> int:
        return self.a.shape[0]

    @property
    def n_u(self) -> int:
        return self.b.shape[1]

    @property
    def n_y(self) -> int:
        return self.c.shape[0]


@dataclass(frozen=True, eq=False)
class Controller:
    """Output-feedback controller with excitation input v."""

    af: np.ndarray
    b1f: np.ndarray
    b2f: np.ndarray
    cf: np.ndarray
    d1f: np.ndarray
    d2f: np.ndarray

    def __post_init__(self):
        af = np.atleast_2d(np.asarray(self.af, dtype=float))
        n_s = af.shape[0]
        if af.shape != (n_s, n_s):
            raise DimensionMismatch(f"AF must be square, got {af.shape}")
        b1f = np.atleast_2d(np.asarray(self.b1f, dtype=float))
        b2f = np.atleast_2d(np.asarray(self.b2f, dtype=float))
        cf = np.atleast_2d(np.asarray(self.cf, dtype=float))
        if b1f.shape[0] != n_s or b2f.shape[0] != n_s:
            raise DimensionMismatch("B1F and B2F must have as many rows as AF")
        if cf.shape[1] != n_s:
            raise DimensionMismatch("CF must have as many columns as AF")
        n_y, n_u = b1f.shape[1], cf.shape[0]
        d1f = _matrix(self.d1f, n_u, n_y, "D1F")
        d2f = _matrix(self.d2f, n_u, b2f.shape[1], "D2F")
        object.__setattr__(self, "af", _matrix(af, n_s, n_s, "AF"))
        object.__setattr__(self, "b1f", _matrix(b1f, n_s, n_y, "B1F"))
        object.__setattr__(self, "b2f", _matrix(b2f, n_s, d2f.shape[1], "B2F"))
        object.__setattr__(self, "cf", _matrix(cf, n_u, n_s, "CF"))
        object.__setattr__(self, "d1f", d1f)
        object.__setattr__(self, "d2f", d2f)

    @property
    def n_s(self) -> int:
        return self.af.shape[0]

    @property
    def n_u(self) -> int:
        return self.cf.shape[0]

    @property
    def n_y(self) -> int:
        return self.b1f.shape[1]

    @property
    def n_v(self) -> int:
        return self.d2f.shape[1]


@dataclass(frozen=True, eq=False)
class ClosedLoop:
    """Assembled loop over the joint state (x, s) with z = (u, y)."""

    plant: InnovationModel
    controller: Controller
    a: np.ndarray = field(repr=False)
    b_e: np.ndarray = field(repr=False)
    b_v: np.ndarray = field(repr=False)
    c_z: np.ndarray = field(repr=False)
    d_e: np.ndarray = field(repr=False)
    d_v: np.ndarray = field(repr=False)

    @property
    def n_u(self) -> int:
        return self.plant.n_u

    @property
    def n_y(self) -> int:
        return self.plant.n_y

    @property
    def n_z(self) -> int:
        return self.plant.n_u + self.plant.n_y

    @property
    def n_states(self) -> int:
        return self.a.shape[0]

    @property
    def gamma(self) -> np.ndarray:
        """Joint driving-noise covariance blockdiag(Psi, D2F D2F^T)."""
        psi = self.plant.psi
        omega = self.controller.d2f @ self.controller.d2f.T
        n_y, n_v = psi.shape[0], omega.shape[0]
        out = np.zeros((n_y + n_v, n_y + n_v))
        out[:n_y, :n_y] = psi
        out[n_y:, n_y:] = omega
        return out

    @property
    def xi(self) -> float:
        """Smallest eigenvalue of the joint noise covariance."""
        return float(np.linalg.eigvalsh(self.gamma).min())


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Simulated closed-loop signals, all of equal length."""

    u: np.ndarray
    y: np.ndarray
    e: np.ndarray
    v: np.ndarray
    seed: int

    @property
    def z(self) -> np.ndarray:
        """Joint signal (u, y) with u columns first."""
        return np.hstack([self.u, self.y])

    def __len__(self) -> int:
        return self.u.shape[0]


def assemble_closed_loop(plant: InnovationModel, controller: Controller) -> ClosedLoop:
    """Interconnect plant and controller; raises if the loop is invalid.

    Raises Unstable when the loop spectral radius reaches 1 and
    DegenerateNoise when blockdiag(Psi, D2F D2F^T) is numerically singular.
    """
    if controller.n_u != plant.n_u or controller.n_y != plant.n_y:
        raise DimensionMismatch(
            f"controller is ({controller.n_u} by {controller.n_y}), "
            f"plant needs ({plant.n_u} by {plant.n_y})"
        )
    a_p, b_p, c_p, k_p = plant.a, plant.b, plant.c, plant.k
    af, b1f, b2f, cf, d1f, d2f = (
        controller.af,
        controller.b1f,
        controller.b2f,
        controller.cf,
        controller.d1f,
        controller.d2f,
    )
    n_x, n_s = plant.n_x, controller.n_s
    a = np.block(
        [
            [a_p + b_p @ d1f @ c_p, b_p @ cf],
            [b1f @ c_p, af],
        ]
    )
    b_e = np.vstack([b_p @ d1f + k_p, b1f])
    b_v = np.vstack([b_p @ d2f, b2f])
    c_z = np.block(
        [
            [d1f @ c_p, cf],
            [c_p, np.zeros((plant.n_y, n_s))],
        ]
    )
    d_e = np.vstack([d1f, np.eye(plant.n_y)])
    d_v = np.vstack([d2f, np.zeros((plant.n_y, controller.n_v))])

    sr = spectral_radius(a)
    if sr >= 1.0:
        raise Unstable(f"closed-loop spectral radius is {sr:.6g}")
    omega = d2f @ d2f.T
    xi = min(
        np.linalg.eigvalsh(plant.psi).min(),
        np.linalg.eigvalsh(omega).min() if omega.size else np.inf,
    )
    if xi <= 1e-12:
        raise DegenerateNoise(f"joint noise covariance has lambda_min {xi:.3e}")
    return ClosedLoop(plant, controller, a, b_e, b_v, c_z, d_e, d_v)


def _psi_factor(psi):
    return np.linalg.cholesky(psi)


def noise_to_signal(cl: ClosedLoop) -> StateSpace:
    """Realization mapping unit-covariance white noise to z = (u, y).

    The driving input is (Psi^{-1/2} e, v), so the returned system has
    identity input covariance and its output autocovariance matches the
    stationary law of z.
    """
    l_psi = _psi_factor(cl.plant.psi)
    b = np.hstack([cl.b_e @ l_psi, cl.b_v])
    d = np.hstack([cl.d_e @ l_psi, cl.d_v])
    return StateSpace(cl.a, b, cl.c_z, d)


def stationary_autocovariance_zero(cl: ClosedLoop) -> np.ndarray:
    """Stationary covariance of z from the closed-loop Lyapunov solve."""
    j = noise_to_signal(cl)
    p = solve_discrete_lyapunov(j.a, j.b @ j.b.T)
    return j.c @ p @ j.c.T + j.d @ j.d.T


def signal_powers(cl: ClosedLoop) -> tuple[float, float]:
    """Stationary mean-square powers (E||z||^2, E||e||^2)."""
    r0 = stationary_autocovariance_zero(cl)
    return float(np.trace(r0)), float(np.trace(cl.plant.psi))


def default_burn_in(cl: ClosedLoop) -> int:
    sr = spectral_radius(cl.a)
    return int(np.ceil(10.0 / max(1.0 - sr, 1e-6)))


def simulate(cl: ClosedLoop, t_total: int, burn_in: int | None = None, seed: int = 0) -> Trajectory:
    """Simulate the closed loop from zero state.

    Draws ``burn_in + t_total`` noise samples (innovations first, then
    excitation), runs the loop recursion and discards the first
    ``burn_in`` steps.  ``burn_in=None`` uses ceil(10 / (1 - rho(A))).
    Identical seeds reproduce bit-identical trajectories.
    """
    if t_total <= 0:
        raise ValueError(f"t_total must be positive, got {t_total}")
    if burn_in is None:
        burn_in = default_burn_in(cl)
    if burn_in < 0:
        raise ValueError(f"burn_in must be nonnegative, got {burn_in}")
    rng = np.random.default_rng(seed)
    n = burn_in + t_total
    l_psi = _psi_factor(cl.plant.psi)
    e = rng.standard_normal((n, cl.n_y)) @ l_psi.T
    v = rng.standard_normal((n, cl.controller.n_v))

    a, b_e, b_v = cl.a, cl.b_e, cl.b_v
    c_z, d_e, d_v = cl.c_z, cl.d_e, cl.d_v
    w = np.zeros(cl.n_states)
    z = np.empty((n, cl.n_z))
    for t in range(n):
        z[t] = c_z @ w + d_e @ e[t] + d_v @ v[t]
        w = a @ w + b_e @ e[t] + b_v @ v[t]
    n_u = cl.n_u
    return Trajectory(
        u=z[burn_in:, :n_u].copy(),
        y=z[burn_in:, n_u:].copy(),
        e=e[burn_in:].copy(),
        v=v[burn_in:].copy(),
        seed=seed,
    )


@dataclass(frozen=True)
class Dims:
    """Dimensions for random system generation."""

    n_x: int
    n_u: int
    n_y: int
    n_s: int | None = None

    def __post_init__(self):
        for name in ("n_x", "n_u", "n_y"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.n_s is not None and self.n_s != self.n_x:
            raise ValueError("LQG synthesis fixes the controller order at n_x")


def random_pd(rng: np.random.Generator, n: int, floor: float = 0.1) -> np.ndarray:
    """Random symmetric positive definite matrix M M^T + floor * I."""
    m = rng.standard_normal((n, n))
    return m @ m.T + floor * np.eye(n)


def random_innovation_model(
    dims: Dims, spectral_target: float, rng: np.random.Generator
) -> InnovationModel:
    """Sample a plant with a stable steady-state predictor.

    A, B, C are Gaussian (A rescaled to the requested spectral radius,
    B and C scaled by 1/sqrt(n_x)); K is the steady-state Kalman
    predictor gain for random positive definite noise weights, which
    guarantees rho(A - K C) < 1 even when A itself is unstable.
    """
    if not 0.0 < spectral_target < 1.0:
        raise ValueError(f"spectral_target must lie in (0, 1), got {spectral_target}")
    n_x, n_u, n_y = dims.n_x, dims.n_u, dims.n_y
    a = rng.standard_normal((n_x, n_x))
    sr = spectral_radius(a)
    if sr > 1e-12:
        a *= spectral_target / sr
    scale = 1.0 / np.sqrt(n_x)
    b = scale * rng.standard_normal((n_x, n_u))
    c = scale * rng.standard_normal((n_y, n_x))
    k, _ = kalman_gain(a, c, random_pd(rng, n_x), random_pd(rng, n_y))
    psi = random_pd(rng, n_y)
    return InnovationModel(a, b, c, k, psi)


def random_closed_loop(
    dims: Dims,
    spectral_target: float,
    seed: int,
    noise_floor: float = 0.05,
    retries: int = 100,
) -> ClosedLoop:
    """Sample a stable stochastic loop: random plant plus LQG controller.

    The controller is an observer with LQR state feedback designed on the
    sampled plant (random positive definite weights), with excitation
    entering through a positive definite D2F.  Retries until the loop is
    stable, the joint noise covariance clears ``noise_floor`` and the
    plant predictor is stable; raises GenerationFailed past ``retries``.
    """
    rng = np.random.default_rng(seed)
    for _ in range(retries):
        try:
            plant = random_innovation_model(dims, spectral_target, rng)
            a, b, c = plant.a, plant.b, plant.c
            n_x, n_u, n_y = plant.n_x, plant.n_u, plant.n_y
            r_ctrl = random_pd(rng, n_u)
            p_ctrl = solve_discrete_riccati(a, b, random_pd(rng, n_x), r_ctrl)
            f = np.linalg.solve(r_ctrl + b.T @ p_ctrl @ b, b.T @ p_ctrl @ a)
            l_obs, _ = kalman_gain(a, c, random_pd(rng, n_x), random_pd(rng, n_y))
            m = rng.standard_normal((n_u, n_u))
            d2f = 0.3 * np.eye(n_u) + 0.1 * (m @ m.T) / n_u
            controller = Controller(
                af=a - l_obs @ c - b @ f,
                b1f=l_obs,
                b2f=b @ d2f,
                cf=-f,
                d1f=np.zeros((n_u, n_y)),
                d2f=d2f,
            )
            cl = assemble_closed_loop(plant, controller)
        except (Unstable, DegenerateNoise, NotStabilizable, np.linalg.LinAlgError):
            continue
        if cl.xi <= noise_floor:
            continue
        if spectral_radius(plant.a - plant.k @ plant.c) >= 1.0 - 1e-9:
            continue
        return cl
    raise GenerationFailed(f"no admissible system after {retries} attempts (seed {seed})")
