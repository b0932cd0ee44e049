"""Time integration of the dynamic lattice NLS.

The integrator solves

    i dpsi/dt = Delta psi - V psi + g(x, |psi|) psi,    g(x, r) = f(x, r) / r,

which is the dynamic equation rearranged so that psi(t) = exp(-i lam t) u is
an exact solution whenever (u, lam) solves the Euler-Lagrange equation
-Delta u + V u + lam u = f(x, u). An eigenvector of -Delta with eigenvalue mu
therefore rotates as exp(i mu t) (its multiplier is lam = -mu).

Two schemes are available:

- ``strang_split``: half a Cayley (Crank-Nicolson) step of the linear part
  i psi_t = Delta psi, a full exact phase rotation psi <- exp(-i h (g - V)) psi,
  and another linear half step. Every sub-step is unitary pointwise or globally,
  and the composition is symmetric, so running it with -h inverts it.
- ``implicit_midpoint``: the full equation at the midpoint, with the linear part
  factored once and the nonlinear term resolved by fixed-point iteration.
"""

import io
import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import sparse
from scipy.sparse.linalg import splu

from .constants import (
    DEFAULT_SAMPLES,
    FIXED_POINT_MAX_ITERS,
    FIXED_POINT_TOL,
    FLOAT_FORMAT,
    LINEAR_SOLVE_RTOL,
    MAX_DT,
    TRAJECTORY_CSV_HEADER,
)
from .lattice import BoxDomain, ComplexLatticeField, LatticeField, gradient_energy_values
from .livetypes import EvolutionStepError
from .models import _Potential, _PowerSum

logger = logging.getLogger(__name__)


class EvolutionConfig(BaseModel):
    """Time step, horizon and scheme of a trajectory."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    dt: float = Field(default=1e-3, gt=0, le=MAX_DT)
    T: float = Field(default=1.0, gt=0)
    scheme: Literal["strang_split", "implicit_midpoint"] = "strang_split"
    samples: int = Field(default=DEFAULT_SAMPLES, ge=2)
    linear_rtol: float = Field(default=LINEAR_SOLVE_RTOL, gt=0)
    fixed_point_tol: float = Field(default=FIXED_POINT_TOL, gt=0)
    fixed_point_max_iters: int = Field(default=FIXED_POINT_MAX_ITERS, ge=1)

    @model_validator(mode="after")
    def _dt_below_horizon(self) -> "EvolutionConfig":
        if not self.dt < self.T:
            raise ValueError(f"dt ({self.dt}) must be smaller than T ({self.T})")
        return self

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.T / self.dt - 1e-9))

    @property
    def step(self) -> float:
        """Actual step length: T split into n_steps equal steps (never above dt)."""
        return self.T / self.n_steps


@dataclass
class Trajectory:
    """Diagnostics sampled along one trajectory."""

    times: np.ndarray
    mass: np.ndarray
    energy: np.ndarray
    mod_dev: np.ndarray
    phase_err: np.ndarray
    final: ComplexLatticeField
    steps: int = 0
    snapshots: list[ComplexLatticeField] = field(default_factory=list)

    @property
    def mass_drift(self) -> float:
        return float(np.max(np.abs(self.mass - self.mass[0])))

    @property
    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.energy - self.energy[0])))

    @property
    def max_mod_dev(self) -> float:
        return float(np.max(self.mod_dev))

    @property
    def max_phase_err(self) -> float:
        return float(np.nanmax(self.phase_err)) if np.any(np.isfinite(self.phase_err)) else math.nan


@dataclass
class StandingWaveReport:
    max_mod_dev: float
    max_phase_err: float
    mass_drift: float
    energy_drift: float
    trajectory: Trajectory

    def to_json_dict(self) -> dict:
        return {
            "max_mod_dev": self.max_mod_dev,
            "max_phase_err": self.max_phase_err,
            "mass_drift": self.mass_drift,
            "energy_drift": self.energy_drift,
        }


def complex_energy(domain: BoxDomain, potential_values: np.ndarray, modulation: np.ndarray, nonlinearity: _PowerSum, psi: np.ndarray) -> float:
    """Phi(psi) = 1/2 |grad psi|^2 + 1/2 sum V |psi|^2 - sum F(x, |psi|)."""
    mag = np.abs(psi)
    return float(
        0.5 * gradient_energy_values(domain, psi)
        + 0.5 * np.sum(potential_values * mag**2)
        - np.sum(modulation * nonlinearity.limit_F(mag))
    )


class _LinearSolver:
    """Factored Cayley system (I + i c Delta_V) x = (I - i c Delta_V) y."""

    def __init__(self, operator: sparse.csr_matrix, c: float, rtol: float):
        n = operator.shape[0]
        ident = sparse.identity(n, dtype=complex, format="csc")
        self.lhs = (ident + 1j * c * operator).tocsc()
        self.rhs = (ident - 1j * c * operator).tocsr()
        self.lu = splu(self.lhs)
        self.rtol = rtol

    def solve(self, b: np.ndarray) -> np.ndarray:
        x = self.lu.solve(b)
        bnorm = np.linalg.norm(b)
        if bnorm > 0:
            res = np.linalg.norm(self.lhs @ x - b) / bnorm
            if not res <= self.rtol:
                raise EvolutionStepError(f"linear sub-step residual {res:.3e} exceeds {self.rtol:.1e}")
        return x

    def cayley(self, y: np.ndarray) -> np.ndarray:
        return self.solve(self.rhs @ y)


def _phase_error(psi: np.ndarray, psi0: np.ndarray, lam: Optional[float], t: float) -> float:
    if lam is None:
        return math.nan
    return float(np.linalg.norm(psi - np.exp(-1j * lam * t) * psi0))


def evolve(
    psi0: ComplexLatticeField,
    potential: _Potential,
    nonlinearity: _PowerSum,
    config: EvolutionConfig,
    reference_lambda: Optional[float] = None,
    backward: bool = False,
    keep_snapshots: bool = False,
) -> Trajectory:
    """Integrate from psi0 over [0, T] (or [0, -T] when `backward`).

    Samples mass, energy, the modulus deviation max |psi| - |psi0| and, when a
    reference multiplier is given, the phase error against exp(-i lam t) psi0.
    """
    domain = psi0.domain
    V = potential.values_on(domain)
    modulation = np.asarray(nonlinearity.modulation(domain.l1_norms), dtype=float)
    h = -config.step if backward else config.step
    n_steps = config.n_steps
    sample_steps = set(np.unique(np.round(np.linspace(0, n_steps, config.samples)).astype(int)).tolist())

    lap = domain.laplacian_matrix.astype(complex)
    if config.scheme == "strang_split":
        # i psi_t = Delta psi over h/2: c = h/4
        linear = _LinearSolver(lap, h / 4.0, config.linear_rtol)
    else:
        linear = _LinearSolver((lap - sparse.diags(V)).tocsr(), h / 2.0, config.linear_rtol)

    psi = psi0.values.astype(complex).copy()
    start = psi.copy()
    start_mod = np.abs(start)
    times, mass, energy, mod_dev, phase_err, snapshots = [], [], [], [], [], []

    def record(step: int, values: np.ndarray) -> None:
        t = step * h
        times.append(t)
        mass.append(float(np.vdot(values, values).real))
        energy.append(complex_energy(domain, V, modulation, nonlinearity, values))
        mod_dev.append(float(np.max(np.abs(np.abs(values) - start_mod), initial=0.0)))
        phase_err.append(_phase_error(values, start, reference_lambda, t))
        if keep_snapshots:
            snapshots.append(ComplexLatticeField(domain, values))

    record(0, psi)
    for step in range(1, n_steps + 1):
        if config.scheme == "strang_split":
            psi = _strang_step(psi, h, linear, V, modulation, nonlinearity)
        else:
            psi = _midpoint_step(psi, h, linear, modulation, nonlinearity, config)
        if not np.all(np.isfinite(psi)):
            raise EvolutionStepError(f"non-finite state at step {step}")
        if step in sample_steps:
            record(step, psi)

    trajectory = Trajectory(
        times=np.asarray(times),
        mass=np.asarray(mass),
        energy=np.asarray(energy),
        mod_dev=np.asarray(mod_dev),
        phase_err=np.asarray(phase_err),
        final=ComplexLatticeField(domain, psi),
        steps=n_steps,
        snapshots=snapshots,
    )
    logger.info(
        "Evolution finished",
        extra={
            "scheme": config.scheme,
            "dt": config.step,
            "T": config.T,
            "mass_drift": trajectory.mass_drift,
            "energy_drift": trajectory.energy_drift,
        },
    )
    return trajectory


def _strang_step(
    psi: np.ndarray,
    h: float,
    linear: _LinearSolver,
    V: np.ndarray,
    modulation: np.ndarray,
    nonlinearity: _PowerSum,
) -> np.ndarray:
    psi = linear.cayley(psi)
    # |psi| is invariant under the rotation, so g is frozen over the sub-step
    g = modulation * nonlinearity.limit_g(np.abs(psi))
    psi = np.exp(-1j * h * (g - V)) * psi
    return linear.cayley(psi)


def _midpoint_step(
    psi: np.ndarray,
    h: float,
    linear: _LinearSolver,
    modulation: np.ndarray,
    nonlinearity: _PowerSum,
    config: EvolutionConfig,
) -> np.ndarray:
    base = linear.rhs @ psi
    nxt = linear.solve(base)
    scale = max(1.0, float(np.linalg.norm(psi)))
    for _ in range(config.fixed_point_max_iters):
        mid = 0.5 * (psi + nxt)
        g = modulation * nonlinearity.limit_g(np.abs(mid))
        candidate = linear.solve(base - 1j * h * g * mid)
        change = float(np.linalg.norm(candidate - nxt))
        nxt = candidate
        if change <= config.fixed_point_tol * scale:
            return nxt
    raise EvolutionStepError(
        f"implicit midpoint fixed point did not settle in {config.fixed_point_max_iters} iterations "
        f"(last change {change:.3e})"
    )


def standing_wave_check(
    u: LatticeField,
    lam: float,
    potential: _Potential,
    nonlinearity: _PowerSum,
    config: EvolutionConfig,
) -> StandingWaveReport:
    """Evolve psi0 = u and measure how far it drifts from exp(-i lam t) u."""
    trajectory = evolve(u.to_complex(), potential, nonlinearity, config, reference_lambda=lam)
    return StandingWaveReport(
        max_mod_dev=trajectory.max_mod_dev,
        max_phase_err=trajectory.max_phase_err,
        mass_drift=trajectory.mass_drift,
        energy_drift=trajectory.energy_drift,
        trajectory=trajectory,
    )


def trajectory_to_csv(trajectory: Trajectory) -> str:
    """CSV with header t,mass,energy,mod_dev,phase_err."""
    buf = io.StringIO()
    buf.write(",".join(TRAJECTORY_CSV_HEADER) + "\n")
    for row in zip(trajectory.times, trajectory.mass, trajectory.energy, trajectory.mod_dev, trajectory.phase_err):
        buf.write(",".join(format(float(v), FLOAT_FORMAT) for v in row) + "\n")
    return buf.getvalue()
