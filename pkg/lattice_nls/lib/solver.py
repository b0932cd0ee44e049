"""Minimization of the energy on the sphere S_a = {||u||_2^2 = a}.

Projected gradient descent with a renormalization retraction: the gradient is
projected on the tangent space of the sphere, a step is taken, and the
iterate is rescaled back onto the sphere. Steps are Barzilai-Borwein trial
lengths with Armijo backtracking, so accepted energies never increase (up to
rounding noise, see ENERGY_ROUNDING_SLACK).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .constants import (
    ARMIJO_COEFF,
    BRUTE_FORCE_BUDGET,
    BRUTE_FORCE_MAX_ITERS,
    BRUTE_FORCE_MAX_SITES,
    DEFAULT_MAX_ITERS,
    DEFAULT_STARTS,
    DEFAULT_TOL,
    ENERGY_ROUNDING_SLACK,
    INITIAL_STEP,
    MAX_STEP,
    MIN_STEP,
    STEP_SHRINK,
    TIE_TOL,
)
from .energy import EnergyContext, el_residual, lagrange_multiplier
from .lattice import BoxDomain, LatticeField
from .livetypes import (
    DomainTooLargeError,
    InvalidParameterError,
    NonConvergenceError,
    StartKind,
)
from .models import find_xi_witness

logger = logging.getLogger(__name__)


class SolveConfig(BaseModel):
    """Stopping rule, step rule, start set and seed of the sphere solver."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    tol: float = Field(default=DEFAULT_TOL, gt=0)
    max_iters: int = Field(default=DEFAULT_MAX_ITERS, ge=1)
    starts: tuple[StartKind, ...] = Field(default=tuple(StartKind(s) for s in DEFAULT_STARTS))
    seed: int = Field(default=0, ge=0, lt=2**64)
    initial_step: float = Field(default=INITIAL_STEP, gt=0)
    shrink: float = Field(default=STEP_SHRINK, gt=0, lt=1)
    armijo: float = Field(default=ARMIJO_COEFF, gt=0, lt=1)
    strict: bool = False
    record_history: bool = False

    @field_validator("starts")
    @classmethod
    def _at_least_one_start(cls, v: tuple[StartKind, ...]) -> tuple[StartKind, ...]:
        if not v:
            raise ValueError("at least one start is required")
        return v


@dataclass
class DescentTrace:
    """Raw outcome of one projected descent run."""

    values: np.ndarray
    objective: float
    grad_norm: float
    iters: int
    converged: bool
    history: list[float] = field(default_factory=list)


@dataclass
class SolveResult:
    """Candidate ground state found from one start."""

    u: LatticeField
    E: float
    lam: float
    residual_norm: float
    iters: int
    converged: bool
    start_label: str
    start_index: int = 0
    energy_history: list[float] = field(default_factory=list)

    @property
    def mass(self) -> float:
        return float(np.dot(self.u.values, self.u.values))

    @property
    def relative_residual(self) -> float:
        norm = math.sqrt(self.mass)
        return self.residual_norm / norm if norm > 0 else 0.0

    def to_json_dict(self) -> dict:
        return {
            "a": self.mass,
            "E": self.E,
            "lambda": self.lam,
            "residual": self.residual_norm,
            "relative_residual": self.relative_residual,
            "iters": self.iters,
            "converged": self.converged,
            "start_label": self.start_label,
        }


@dataclass
class SolveOutcome:
    """Best result of a multi-start solve together with every per-start result."""

    best: SolveResult
    results: list[SolveResult]

    @property
    def converged(self) -> bool:
        return self.best.converged


def renormalize(values: np.ndarray, mass: float) -> np.ndarray:
    """Rescale the rows of `values` to squared l2 norm `mass`."""
    norms = np.sqrt(np.sum(values * values, axis=-1, keepdims=True))
    if np.any(norms == 0):
        raise InvalidParameterError("cannot renormalize the zero field onto the sphere")
    return values * (math.sqrt(mass) / norms)


def sphere_descent(
    objective: Callable[[np.ndarray], float],
    gradient: Callable[[np.ndarray], np.ndarray],
    u0: np.ndarray,
    mass: float,
    config: SolveConfig,
) -> DescentTrace:
    """Projected gradient descent of `objective` on {||u||^2 = mass}."""
    u = renormalize(np.asarray(u0, dtype=float), mass)
    value = objective(u)
    history = [value] if config.record_history else []
    step = config.initial_step
    prev_u: Optional[np.ndarray] = None
    prev_g: Optional[np.ndarray] = None
    gnorm = math.inf

    for it in range(config.max_iters + 1):
        g = gradient(u)
        g_proj = g - (np.dot(g, u) / mass) * u
        gnorm = float(np.linalg.norm(g_proj))
        if gnorm <= config.tol:
            return DescentTrace(u, value, gnorm, it, True, history)
        if it == config.max_iters:
            break

        if prev_u is not None and prev_g is not None:
            s = u - prev_u
            y = g_proj - prev_g
            sy = float(np.dot(s, y))
            if sy > 0:
                step = min(max(float(np.dot(s, s)) / sy, MIN_STEP), MAX_STEP)

        slack = ENERGY_ROUNDING_SLACK * max(1.0, abs(value))
        t = step
        while True:
            candidate = renormalize(u - t * g_proj, mass)
            cand_value = objective(candidate)
            if cand_value <= value - config.armijo * t * gnorm**2:
                break
            # Near convergence the Armijo decrease drops below rounding noise
            if cand_value <= value + slack and t * gnorm < 1e-6 * math.sqrt(mass):
                break
            t *= config.shrink
            if t < MIN_STEP:
                logger.debug("Backtracking stalled", extra={"iter": it, "grad_norm": gnorm})
                return DescentTrace(u, value, gnorm, it, False, history)

        prev_u, prev_g = u, g_proj
        u, value = candidate, cand_value
        step = t
        if config.record_history:
            history.append(value)

    return DescentTrace(u, value, gnorm, config.max_iters, False, history)


# Start fields


def tent_field(domain: BoxDomain, a: float, n: int) -> LatticeField:
    """c (n - |x|) / n^(d/2+1) on |x| <= n, scaled so ||u||_2^2 = a."""
    if n < 1 or n > domain.L:
        raise InvalidParameterError(f"tent radius must satisfy 1 <= n <= L = {domain.L}, got {n}")
    if not a > 0:
        raise InvalidParameterError(f"mass must be positive, got {a}")
    profile = np.clip(n - domain.l1_norms, 0.0, None) / n ** (domain.d / 2 + 1)
    return LatticeField(domain, renormalize(profile, a))


def box_field(domain: BoxDomain, xi: float, R: int) -> LatticeField:
    """xi on the sup-norm ball |x|_inf <= R, zero elsewhere."""
    if R < 0:
        raise InvalidParameterError(f"R must be >= 0, got {R}")
    # The sup ball of radius R sits in the l1 ball of radius L iff d R <= L
    if domain.d * R > domain.L:
        raise InvalidParameterError(
            f"sup-ball of radius {R} overflows the box (needs d*R <= L = {domain.L})"
        )
    return LatticeField(domain, np.where(domain.sup_norms <= R, float(xi), 0.0))


def _start_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def initial_fields(ctx: EnergyContext, config: SolveConfig) -> list[tuple[str, np.ndarray]]:
    """Labelled start fields, one per configured start kind."""
    domain, a = ctx.domain, ctx.mass
    starts = []
    for index, kind in enumerate(config.starts):
        label = f"{kind.value}:{index}"
        rng = _start_rng(config.seed, index)
        if kind is StartKind.TENT:
            if domain.L >= 1:
                values = tent_field(domain, a, max(1, domain.L // 2)).values
            else:
                values = LatticeField.delta(domain).values
        elif kind is StartKind.BOX:
            xi = find_xi_witness(ctx.nonlinearity) or 1.0
            values = box_field(domain, xi, domain.L // domain.d).values
        elif kind is StartKind.GAUSSIAN:
            center_idx = rng.integers(domain.site_count)
            center = domain.sites[center_idx]
            width = rng.uniform(1.0, max(1.0, domain.L / 2))
            dist = np.abs(domain.sites - center).sum(axis=1)
            values = np.exp(-(dist**2) / (2 * width**2))
        else:
            values = rng.standard_normal(domain.site_count)
        starts.append((label, renormalize(np.asarray(values, dtype=float), a)))
    return starts


def solve_from(ctx: EnergyContext, u0: np.ndarray, config: SolveConfig, label: str, index: int = 0) -> SolveResult:
    """Run the projected descent from a single start."""
    trace = sphere_descent(ctx.energy_values, ctx.gradient_values, u0, ctx.mass, config)
    u = LatticeField(ctx.domain, trace.values)
    lam = lagrange_multiplier(ctx, u)
    _, residual = el_residual(ctx, u, lam)
    return SolveResult(
        u=u,
        E=float(trace.objective),
        lam=lam,
        residual_norm=residual,
        iters=trace.iters,
        converged=trace.converged,
        start_label=label,
        start_index=index,
        energy_history=trace.history,
    )


def pick_best(results: list[SolveResult]) -> SolveResult:
    """Lowest energy among converged results (all results if none converged).

    Energies within TIE_TOL count as equal and the lowest start index wins.
    """
    pool = [r for r in results if r.converged] or list(results)
    best = pool[0]
    for r in pool[1:]:
        if r.E < best.E - TIE_TOL or (abs(r.E - best.E) <= TIE_TOL and r.start_index < best.start_index):
            best = r
    return best


def minimize_on_sphere(ctx: EnergyContext, config: SolveConfig) -> SolveOutcome:
    """Multi-start minimization of Phi over S_a; E is an upper bound on E_a."""
    results = [
        solve_from(ctx, u0, config, label, index)
        for index, (label, u0) in enumerate(initial_fields(ctx, config))
    ]
    best = pick_best(results)
    outcome = SolveOutcome(best=best, results=results)

    logger.info(
        "Solve finished",
        extra={
            "a": ctx.mass,
            "E": best.E,
            "lambda": best.lam,
            "start": best.start_label,
            "iters": best.iters,
            "converged": best.converged,
        },
    )
    if not best.converged:
        logger.warning(
            f"No start converged for a={ctx.mass:g}; reporting best iterate "
            f"(E={best.E:.12g}, residual={best.residual_norm:.3e})"
        )
        if config.strict:
            raise NonConvergenceError(f"no start converged for mass {ctx.mass:g}", outcome=outcome)
    return outcome


def brute_force_min(
    ctx: EnergyContext,
    budget: int = BRUTE_FORCE_BUDGET,
    seed: int = 0,
    tol: float = 1e-7,
    max_iters: int = BRUTE_FORCE_MAX_ITERS,
) -> float:
    """Exhaustive multi-start estimate of E_a on a tiny box.

    `budget` random points of S_a are refined together by the same projected
    descent (vectorized over starts, one step length per start).
    """
    domain, a = ctx.domain, ctx.mass
    n = domain.site_count
    if n > BRUTE_FORCE_MAX_SITES:
        raise DomainTooLargeError(
            f"brute force is limited to {BRUTE_FORCE_MAX_SITES} sites, domain has {n}"
        )
    rng = np.random.default_rng(np.random.SeedSequence([seed, n]))
    U = renormalize(rng.standard_normal((budget, n)), a)
    E = ctx.energy_values(U)
    steps = np.full(budget, INITIAL_STEP)
    active = np.ones(budget, dtype=bool)

    for _ in range(max_iters):
        G = ctx.gradient_values(U)
        Gp = G - (np.sum(G * U, axis=1, keepdims=True) / a) * U
        gn2 = np.sum(Gp * Gp, axis=1)
        active = gn2 > tol**2
        if not active.any():
            break
        trial = renormalize(U - steps[:, None] * Gp, a)
        E_trial = ctx.energy_values(trial)
        slack = ENERGY_ROUNDING_SLACK * np.maximum(1.0, np.abs(E))
        accept = active & (
            (E_trial <= E - ARMIJO_COEFF * steps * gn2)
            | ((E_trial <= E + slack) & (steps * np.sqrt(gn2) < 1e-6))
        )
        U[accept] = trial[accept]
        E[accept] = E_trial[accept]
        steps = np.where(accept, np.minimum(steps / STEP_SHRINK, MAX_STEP), steps * STEP_SHRINK)
        steps = np.maximum(steps, MIN_STEP)

    best = float(E.min())
    logger.debug(
        "Brute force estimate",
        extra={"a": a, "sites": n, "budget": budget, "E": best, "unconverged": int(active.sum())},
    )
    return best


def box_convergence(ctx: EnergyContext, config: SolveConfig, radii: list[int]) -> list[tuple[int, float]]:
    """Best energies of the same problem on boxes of the given radii."""
    out = []
    for L in radii:
        outcome = minimize_on_sphere(ctx.with_domain(BoxDomain(ctx.domain.d, L)), config)
        out.append((L, outcome.best.E))
    return out
