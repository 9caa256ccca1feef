"""
Time integration of df/dt = Q(f, f) in spectral space, with moment and
entropy diagnostics, the BKW closed-form solution and Maxwellian equilibria.
"""

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from . import codec
from .exceptions import ContractError, NumericalError
from .grid import SpectralField, VelocityGrid, analyze, hermitian_part, synthesize
from .kernel import KernelSpec, SeparableKernel, q_direct, q_fast
from .specnet import SpecNetParams, forward_coeffs

logger = logging.getLogger(__name__)

ENTROPY_FLOOR = 1e-14
SCHEMES = ("rk3", "euler")


class CollisionOperator:
    """Maps a spectral state to Q(f, f); outputs are projected onto real fields"""

    name = "operator"

    def evaluate(self, f: SpectralField) -> SpectralField:
        raise NotImplementedError

    def __call__(self, f: SpectralField) -> SpectralField:
        q = self.evaluate(f)
        return SpectralField(f.grid, hermitian_part(q.coeffs, f.grid.d))

    def describe(self) -> dict:
        return {"operator": self.name}


class ZeroOperator(CollisionOperator):
    name = "zero"

    def evaluate(self, f):
        return SpectralField.zeros(f.grid)


class FastOperator(CollisionOperator):
    name = "fast"

    def __init__(self, kernel: SeparableKernel):
        self.kernel = kernel

    def evaluate(self, f):
        return q_fast(f, self.kernel)

    def describe(self):
        return {"operator": self.name, **self.kernel.describe()}


class DirectOperator(CollisionOperator):
    name = "direct"

    def __init__(self, spec: KernelSpec, grid: VelocityGrid):
        self.spec = spec
        self.grid = grid

    def evaluate(self, f):
        return q_direct(f, self.spec, self.grid)

    def describe(self):
        return {"operator": self.name, "kernel": self.spec.describe(), "grid": self.grid.describe()}


class SpecNetOperator(CollisionOperator):
    name = "specnet"

    def __init__(self, params: SpecNetParams):
        self.params = params

    def evaluate(self, f):
        return SpectralField(f.grid, forward_coeffs(f.coeffs, self.params, f.grid))

    def describe(self):
        return {
            "operator": self.name,
            "N_trun": self.params.n_trun,
            "M": self.params.M,
            "n_real_params": self.params.n_real_params,
        }


@dataclass
class Moments:
    rho: float
    u: np.ndarray
    temp: float
    ke: float
    entropy: float

    @property
    def valid(self) -> bool:
        return self.rho > 0 and self.temp >= 0

    def as_row(self) -> dict:
        row = {"rho": self.rho}
        for i, ui in enumerate(self.u, start=1):
            row[f"u{i}"] = float(ui)
        row.update({"temp": self.temp, "ke": self.ke, "entropy": self.entropy})
        return row


def moments(f, grid: VelocityGrid = None) -> Moments:
    """Periodic trapezoid quadrature of the density, momentum and energy"""
    if isinstance(f, SpectralField):
        grid = f.grid
        values = synthesize(f, check=False)
    else:
        values = np.asarray(f, dtype=float).reshape(grid.shape)
    if not np.all(np.isfinite(values)):
        raise NumericalError("Cannot take moments of a non-finite state")
    h = grid.cell_volume
    v = grid.points
    rho = float(np.sum(values) * h)
    axes = tuple(range(1, grid.d + 1))
    momentum = np.sum(values * v, axis=axes) * h
    ke = float(np.sum(values * grid.speed_squared) * h)
    if rho > 0:
        u = momentum / rho
        temp = (ke - rho * float(np.dot(u, u))) / (grid.d * rho)
    else:
        logger.warning(f"Non-positive mass {rho:.3e}; moments are not admissible")
        u = np.full(grid.d, np.nan)
        temp = float("nan")
    entropy = float(np.sum(values * np.log(np.maximum(values, ENTROPY_FLOOR))) * h)
    return Moments(rho=rho, u=u, temp=temp, ke=ke, entropy=entropy)


def maxwellian_values(grid: VelocityGrid, rho: float, u, temp: float) -> np.ndarray:
    if not temp > 0:
        raise ContractError(f"Maxwellian needs a positive temperature, got {temp}")
    u = np.asarray(u, dtype=float).reshape((grid.d,) + (1,) * grid.d)
    r2 = np.sum((grid.points - u) ** 2, axis=0)
    return rho / (2.0 * np.pi * temp) ** (grid.d / 2.0) * np.exp(-r2 / (2.0 * temp))


def maxwellian_of(m: Moments, grid: VelocityGrid) -> SpectralField:
    return analyze(maxwellian_values(grid, m.rho, m.u, m.temp), grid)


def gaussian_mixture(grid: VelocityGrid, centers, widths, weights=None, normalize=True) -> np.ndarray:
    """Weighted sum of isotropic Gaussians, rescaled to unit mass on the grid"""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    widths = np.atleast_1d(np.asarray(widths, dtype=float))
    if centers.shape != (widths.size, grid.d):
        raise ContractError(f"Need one {grid.d}-dimensional center per width, got {centers.shape} and {widths.size}")
    weights = np.full(widths.size, 1.0 / widths.size) if weights is None else np.asarray(weights, dtype=float)
    values = np.zeros(grid.shape)
    for w, c, s in zip(weights, centers, widths):
        values += w * maxwellian_values(grid, 1.0, c, s**2)
    if normalize:
        values /= np.sum(values) * grid.cell_volume
    return values


def _bkw_scale(t):
    return 1.0 - 0.5 * np.exp(-np.asarray(t, dtype=float) / 8.0)


def bkw_exact(t: float, v, sigma: float = 1.0) -> np.ndarray:
    """
    2D BKW solution for Maxwellian molecules with C = 1/(2 pi):

        f = exp(-|v|^2 / (2 K s^2)) / (2 pi K^2 s^2) * (2K - 1 + (1 - K)/(2K) |v|^2 / s^2)

    with K = 1 - exp(-t/8)/2. This normalization has unit mass for every s.
    `v` has shape (2, ...).
    """
    if t < 0:
        raise ContractError(f"BKW time must be non-negative, got {t}")
    v = np.asarray(v, dtype=float)
    if v.shape[0] != 2:
        raise ContractError("The BKW solution is two-dimensional")
    K = float(_bkw_scale(t))
    r2 = np.sum(v**2, axis=0) / sigma**2
    return np.exp(-r2 / (2.0 * K)) / (2.0 * np.pi * K**2 * sigma**2) * (2.0 * K - 1.0 + (1.0 - K) / (2.0 * K) * r2)


def bkw_time_derivative(t: float, v, sigma: float = 1.0) -> np.ndarray:
    """d/dt of `bkw_exact`, which equals Q(f, f) for the BKW kernel"""
    v = np.asarray(v, dtype=float)
    K = float(_bkw_scale(t))
    r2 = np.sum(v**2, axis=0) / sigma**2
    A = 1.0 / (2.0 * np.pi * K**2 * sigma**2)
    E = np.exp(-r2 / (2.0 * K))
    P = 2.0 * K - 1.0 + (1.0 - K) / (2.0 * K) * r2
    dA = -2.0 * A / K
    dE = E * r2 / (2.0 * K**2)
    dP = 2.0 - r2 / (2.0 * K**2)
    dK = math.exp(-t / 8.0) / 16.0
    return (dA * E * P + A * dE * P + A * E * dP) * dK


def bkw_field(t: float, grid: VelocityGrid, sigma: float = 1.0) -> SpectralField:
    return analyze(bkw_exact(t, grid.points, sigma), grid)


def relative_l2(f: SpectralField, reference: SpectralField) -> float:
    reference.grid.require_same(f.grid, "relative error")
    ref = reference.norm()
    if ref == 0:
        raise ContractError("Relative error against a zero reference")
    return (f - reference).norm() / ref


def _checked(f: SpectralField, what: str) -> SpectralField:
    if not f.is_finite():
        raise NumericalError(f"Non-finite state after {what}")
    return f


def step_euler(f: SpectralField, operator, dt: float) -> SpectralField:
    if not dt > 0:
        raise ContractError(f"Time step must be positive, got {dt}")
    return _checked(f + dt * operator(f), "Euler step")


def step_rk3(f: SpectralField, operator, dt: float) -> SpectralField:
    """Shu-Osher three-stage SSP Runge-Kutta"""
    if not dt > 0:
        raise ContractError(f"Time step must be positive, got {dt}")
    u1 = f + dt * operator(f)
    u2 = 0.75 * f + 0.25 * (u1 + dt * operator(u1))
    return _checked(f * (1.0 / 3.0) + (2.0 / 3.0) * (u2 + dt * operator(u2)), "RK3 step")


STEPPERS = {"rk3": step_rk3, "euler": step_euler}


def default_cadence(N: int) -> int:
    return 1 if N <= 64 else 10


@dataclass
class Trajectory:
    grid: VelocityGrid
    dt: float
    times: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    states: list = field(default_factory=list)
    moments: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    q_norms: list = field(default_factory=list)
    operator: dict = field(default_factory=dict)
    scheme: str = "rk3"
    wall_time: float = 0.0

    def __len__(self):
        return len(self.times)

    def record(self, step: int, f: SpectralField, keep_state: bool, error=None, q_norm=None):
        self.steps.append(step)
        self.times.append(step * self.dt)
        self.moments.append(moments(f))
        self.states.append(f.copy() if keep_state else None)
        if error is not None:
            self.errors.append(error)
        if q_norm is not None:
            self.q_norms.append(q_norm)

    @property
    def final_state(self):
        return self.states[-1] if self.states else None

    def attach_reference(self, reference: "Trajectory"):
        """Relative L2 error against another trajectory recorded at the same steps"""
        if reference.steps != self.steps:
            raise ContractError("Reference trajectory was recorded at different steps")
        self.errors = [
            relative_l2(state, ref_state)
            for state, ref_state in zip(self.states, reference.states)
        ]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([m.as_row() for m in self.moments])
        frame.insert(0, "t", self.times)
        frame.insert(0, "step", self.steps)
        if self.errors:
            frame["err_vs_reference"] = self.errors
        if self.q_norms:
            frame["q_norm"] = self.q_norms
        return frame

    def write_csv(self, path):
        self.to_frame().to_csv(path, index=False, float_format="%.17g")
        return path

    def snapshot_documents(self, run_id: str, encoding: str = "decimal"):
        for index, (t, state) in enumerate(zip(self.times, self.states)):
            if state is None:
                continue
            yield f"{run_id}_{index}.json", codec.make_document(
                "snapshot",
                run_id=run_id,
                t_index=index,
                t=t,
                grid=self.grid.describe(),
                coeffs=codec.encode_array(state.coeffs, encoding),
            )


def step_count(dt: float, t_final: float, cadence: int = 1) -> int:
    """round(t_final / dt), rounded up to a whole number of recording intervals"""
    n_steps = max(1, int(round(t_final / dt)))
    return -(-n_steps // cadence) * cadence


def solve(f0: SpectralField, operator, dt: float, t_final: float, *, cadence: int = None, scheme: str = "rk3", keep_states: bool = True, reference=None, track_q_norm: bool = False, on_step=None) -> Trajectory:
    """
    Integrate from f0 over round(t_final / dt) steps, rounded up to a
    multiple of `cadence` so that diagnostics, recorded at step 0 and every
    `cadence` steps, are evenly spaced in time and include the final state.
    `reference(t)` may return the exact state at time t, in which case the
    relative L2 error is recorded alongside the moments.
    """
    if not t_final > 0:
        raise ContractError(f"t_final must be positive, got {t_final}")
    if not dt > 0:
        raise ContractError(f"Time step must be positive, got {dt}")
    if scheme not in STEPPERS:
        raise ContractError(f"Unknown time integrator: {scheme}")
    cadence = cadence or default_cadence(f0.grid.N)
    if cadence < 1:
        raise ContractError(f"Recording cadence must be at least 1, got {cadence}")
    n_steps = step_count(dt, t_final, cadence)
    if n_steps != step_count(dt, t_final):
        logger.info(f"Extending to {n_steps} steps (t={n_steps * dt:.4g}) to end on a recording step of cadence {cadence}")
    stepper = STEPPERS[scheme]
    describe = getattr(operator, "describe", None)
    traj = Trajectory(
        grid=f0.grid,
        dt=dt,
        operator=describe() if describe else {"operator": getattr(operator, "name", "custom")},
        scheme=scheme,
    )

    def record(step, f):
        error = relative_l2(f, reference(step * dt)) if reference is not None else None
        q_norm = operator(f).norm() if track_q_norm else None
        traj.record(step, f, keep_states, error=error, q_norm=q_norm)

    started = time.perf_counter()
    f = _checked(f0.copy(), "initial condition")
    record(0, f)
    logger.info(f"Integrating {n_steps} {scheme} steps of dt={dt} on N={f.grid.N}, d={f.grid.d}")
    for step in range(1, n_steps + 1):
        try:
            f = stepper(f, operator, dt)
        except NumericalError as exc:
            traj.wall_time = time.perf_counter() - started
            raise NumericalError(f"{exc} at step {step} (t={step * dt:.4g})", partial=traj) from exc
        if step % cadence == 0:
            record(step, f)
        if on_step is not None:
            on_step(step, n_steps)
    traj.wall_time = time.perf_counter() - started
    if not traj.moments[-1].valid:
        logger.warning("Final state has non-positive mass or negative temperature")
    return traj
