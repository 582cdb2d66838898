"""End-to-end identification experiments.

One experiment sweeps sample sizes over a set of randomly generated
closed loops.  Per seed it builds the loop, computes the exact
lag-p predictor and the bound constants once, simulates a shared test
trajectory and one maximal training trajectory, then fits the full
pipeline (ridge regression, delay-line realization, balanced reduction,
innovation-form extraction) on every prefix in the sweep.  Rows record
empirical errors next to the computable bounds; rows below the bound
validity threshold are marked invalid rather than dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .bounds import (
    BoundInputs,
    ConstantLedger,
    bound_inputs,
    expected_error_bound,
    format_ledger,
    model_error_detail,
    select_ledger,
)
from .errors import RedarError, SchemaError
from .kalman import finite_horizon_predictor
from .linalg import hinf_norm, parallel_difference
from .realization import fit_redar, prediction_mse, run_predictor
from .systems import Dims, random_closed_loop, simulate
from .varx import Dataset

__all__ = [
    "ExperimentConfig",
    "ReportRow",
    "SeedOutcome",
    "ExperimentResult",
    "REPORT_COLUMNS",
    "run_seed",
    "run_experiment",
    "write_report",
    "write_outputs",
    "render_cell",
]

_DEFAULT_SWEEP = (256, 512, 1024, 2048, 4096, 8192, 16384)


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs for one experiment; every field maps to a CLI flag."""

    n_x: int = 3
    n_u: int = 2
    n_y: int = 2
    spectral_target: float = 0.7
    noise_floor: float = 0.05
    p: int = 4
    alpha: float = 1.0
    phi: float = 0.05
    theta: float = 0.1
    t_sweep: tuple[int, ...] = _DEFAULT_SWEEP
    test_length: int = 10_000
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    burn_in: int | None = None
    output_dir: str = "results"
    hinf_grid: int = 4096
    envelope_grid: int = 2048
    rho_grid: int = 64
    t0_candidates: int = 16

    def __post_init__(self):
        if self.n_x < 1 or self.n_u < 1 or self.n_y < 1:
            raise ValueError("n_x, n_u, n_y must be positive")
        if not 0.0 < self.spectral_target < 1.0:
            raise ValueError(f"spectral_target must lie in (0, 1), got {self.spectral_target}")
        if self.noise_floor <= 0:
            raise ValueError("noise_floor must be positive")
        if self.p < 1:
            raise ValueError(f"p must be positive, got {self.p}")
        if self.alpha <= 0 or self.phi < 0:
            raise ValueError("alpha must be positive and phi nonnegative")
        if not 0.0 < self.theta < 1.0:
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")
        if not self.t_sweep or any(t < self.p for t in self.t_sweep):
            raise ValueError("t_sweep must be nonempty with every entry at least p")
        if list(self.t_sweep) != sorted(set(self.t_sweep)):
            raise ValueError("t_sweep must be strictly increasing")
        if self.test_length <= self.p:
            raise ValueError("test_length must exceed p")
        if not self.seeds:
            raise ValueError("seeds must be nonempty")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        for name in ("hinf_grid", "envelope_grid", "rho_grid"):
            if getattr(self, name) < 8:
                raise ValueError(f"{name} must be at least 8")
        if self.t0_candidates < 1:
            raise ValueError("t0_candidates must be positive")


def _parse_int_tuple(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


_FIELD_PARSERS = {
    "n_x": int,
    "n_u": int,
    "n_y": int,
    "spectral_target": float,
    "noise_floor": float,
    "p": int,
    "alpha": float,
    "phi": float,
    "theta": float,
    "t_sweep": _parse_int_tuple,
    "test_length": int,
    "seeds": _parse_int_tuple,
    "burn_in": lambda s: None if s in ("", "none") else int(s),
    "output_dir": str,
    "hinf_grid": int,
    "envelope_grid": int,
    "rho_grid": int,
    "t0_candidates": int,
}

assert set(_FIELD_PARSERS) == {f.name for f in fields(ExperimentConfig)}


def config_from_mapping(mapping: dict[str, str], base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Apply string key/value overrides (config file entries) to a config."""
    base = base if base is not None else ExperimentConfig()
    updates = {}
    for key, value in mapping.items():
        parser = _FIELD_PARSERS.get(key)
        if parser is None:
            raise SchemaError(f"unknown configuration key {key!r}")
        try:
            updates[key] = parser(value)
        except ValueError:
            raise SchemaError(f"bad value for {key!r}: {value!r}") from None
    try:
        return replace(base, **updates)
    except ValueError as exc:
        raise SchemaError(str(exc)) from None


REPORT_COLUMNS = (
    "seed",
    "t",
    "status",
    "mse_fit",
    "mse_oracle",
    "expected_bound",
    "expected_bound_alt",
    "bound_valid",
    "hinf_actual",
    "hinf_bound",
    "reduced_order",
    "certified_error",
    "t0",
    "k",
    "ledger_ref",
)


@dataclass(frozen=True)
class ReportRow:
    """One (seed, sample size) cell of the experiment report."""

    seed: int
    t: int
    status: str = "ok"
    mse_fit: float | None = None
    mse_oracle: float | None = None
    expected_bound: float | None = None
    expected_bound_alt: float | None = None
    bound_valid: bool = False
    hinf_actual: float | None = None
    hinf_bound: float | None = None
    reduced_order: int | None = None
    certified_error: float | None = None
    t0: float | None = None
    k: float | None = None
    ledger_ref: str = ""


@dataclass(frozen=True)
class SeedOutcome:
    """Per-seed artifacts: the sampled loop, its bound data and the rows."""

    seed: int
    inputs: BoundInputs
    ledger: ConstantLedger
    mse_oracle: float
    rows: tuple[ReportRow, ...]


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    outcomes: tuple[SeedOutcome, ...]
    violations: tuple[ReportRow, ...]

    @property
    def rows(self) -> tuple[ReportRow, ...]:
        return tuple(row for outcome in self.outcomes for row in outcome.rows)


def run_seed(config: ExperimentConfig, seed: int, log=None) -> SeedOutcome:
    """Run the full sweep for one seed.

    System, training and test randomness come from independent spawn
    streams of the seed, so changing the sweep or test length never
    changes the sampled system.
    """
    say = log if log is not None else lambda *_: None
    system_seed, train_seed, test_seed = (np.random.SeedSequence([seed, k]) for k in range(3))
    cl = random_closed_loop(
        Dims(config.n_x, config.n_u, config.n_y),
        config.spectral_target,
        seed=system_seed,
        noise_floor=config.noise_floor,
    )
    say(f"seed {seed}: loop with {cl.n_states} states, xi = {cl.xi:.4g}")
    inputs = bound_inputs(
        cl,
        config.p,
        config.alpha,
        config.phi,
        n_rho=config.rho_grid,
        envelope_grid=config.envelope_grid,
        hinf_grid=config.hinf_grid,
    )
    ledger = select_ledger(inputs, float(max(config.t_sweep)), config.t0_candidates)
    say(f"seed {seed}: t0 = {ledger.t0:.4g}, k = {ledger.k:.4g}")
    _, h_opt = finite_horizon_predictor(cl, config.p)
    test = simulate(cl, config.test_length, burn_in=config.burn_in, seed=test_seed)
    test_z = test.z
    mse_oracle = prediction_mse(test.y, run_predictor(h_opt.ss, test_z), discard=config.p)
    max_t = max(config.t_sweep)
    train = simulate(cl, max_t + config.p, burn_in=config.burn_in, seed=train_seed)
    train_z = train.z

    rows = []
    for t in config.t_sweep:
        try:
            ds = Dataset(z=train_z[: t + config.p], p=config.p, n_u=cl.n_u, n_y=cl.n_y)
            fit = fit_redar(ds, config.alpha, config.phi)
            yhat = run_predictor(fit.reduced.ss, test_z)
            mse_fit = prediction_mse(test.y, yhat, discard=config.p)
            hinf_actual = hinf_norm(
                parallel_difference(fit.reduced.ss, h_opt.ss), n_grid=config.hinf_grid
            )
            detail = model_error_detail(inputs, config.theta, float(t))
            valid = t >= ledger.t0
            expected = expected_error_bound(inputs, ledger, float(t)) if valid else None
            expected_alt = (
                expected_error_bound(inputs, ledger, float(t), squared_tail=True) if valid else None
            )
            row = ReportRow(
                seed=seed,
                t=t,
                mse_fit=mse_fit,
                mse_oracle=mse_oracle,
                expected_bound=expected,
                expected_bound_alt=expected_alt,
                bound_valid=valid,
                hinf_actual=hinf_actual,
                hinf_bound=detail.value,
                reduced_order=fit.reduced.order,
                certified_error=fit.certified_error,
                t0=ledger.t0,
                k=ledger.k,
                ledger_ref=f"ledger_seed{seed}.txt",
            )
        except (RedarError, np.linalg.LinAlgError) as exc:
            row = ReportRow(seed=seed, t=t, status=f"error: {exc}")
        say(f"seed {seed} t {t}: {row.status}")
        rows.append(row)
    return SeedOutcome(
        seed=seed, inputs=inputs, ledger=ledger, mse_oracle=mse_oracle, rows=tuple(rows)
    )


def find_violations(rows) -> tuple[ReportRow, ...]:
    """Rows whose empirical error exceeds a bound claimed valid."""
    return tuple(
        row
        for row in rows
        if row.status == "ok" and row.bound_valid and row.mse_fit > row.expected_bound
    )


def run_experiment(config: ExperimentConfig, log=None) -> ExperimentResult:
    outcomes = tuple(run_seed(config, seed, log) for seed in config.seeds)
    rows = [row for outcome in outcomes for row in outcome.rows]
    return ExperimentResult(config=config, outcomes=outcomes, violations=find_violations(rows))


def render_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return repr(value)
    return str(value)


def write_report(path, rows) -> None:
    """Report CSV with one row per (seed, sample size), stable column order.

    Bound cells of rows below the validity threshold read ``invalid``.
    """
    lines = [",".join(REPORT_COLUMNS)]
    for row in rows:
        cells = []
        for col in REPORT_COLUMNS:
            value = getattr(row, col)
            if (
                col in ("expected_bound", "expected_bound_alt")
                and row.status == "ok"
                and not row.bound_valid
            ):
                cells.append("invalid")
            else:
                cells.append(render_cell(value))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def _write_curve(path, header: str, pairs) -> None:
    lines = [f"t,{header}"] + [f"{t},{cell}" for t, cell in pairs]
    Path(path).write_text("\n".join(lines) + "\n")


def write_outputs(result: ExperimentResult, output_dir=None) -> Path:
    """Write report.csv, per-seed ledgers and per-seed plot data.

    Plot data is two two-column files per seed: sample size against the
    expected-error bound and against the empirical test error.
    """
    out = Path(output_dir if output_dir is not None else result.config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_report(out / "report.csv", result.rows)
    for outcome in result.outcomes:
        (out / f"ledger_seed{outcome.seed}.txt").write_text(format_ledger(outcome.ledger))
        _write_curve(
            out / f"bound_seed{outcome.seed}.csv",
            "bound",
            (
                (
                    row.t,
                    render_cell(row.expected_bound)
                    if row.bound_valid or row.status != "ok"
                    else "invalid",
                )
                for row in outcome.rows
            ),
        )
        _write_curve(
            out / f"mse_seed{outcome.seed}.csv",
            "mse",
            ((row.t, render_cell(row.mse_fit)) for row in outcome.rows),
        )
    return out
