"""The constrained energy functional, its gradient and the Euler-Lagrange residual."""

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .lattice import BoxDomain, LatticeField, apply_laplacian, gradient_energy_values
from .livetypes import InvalidParameterError, ZeroFieldError
from .models import ZeroPotential, _Potential, _PowerSum

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnergyContext:
    """Domain, potential, nonlinearity and prescribed mass a = ||u||_2^2."""

    domain: BoxDomain
    potential: _Potential
    nonlinearity: _PowerSum
    mass: float = field(default=1.0)

    def __post_init__(self) -> None:
        if not self.mass > 0:
            raise InvalidParameterError(f"mass must be positive, got {self.mass}")

    @cached_property
    def potential_values(self) -> np.ndarray:
        v = self.potential.values_on(self.domain)
        v.setflags(write=False)
        return v

    @cached_property
    def modulation_values(self) -> np.ndarray:
        return np.asarray(self.nonlinearity.modulation(self.domain.l1_norms), dtype=float)

    def with_mass(self, mass: float) -> "EnergyContext":
        return replace(self, mass=mass)

    def with_domain(self, domain: BoxDomain) -> "EnergyContext":
        return replace(self, domain=domain)

    def limit_context(self) -> "EnergyContext":
        """Context of the limit functional: V = 0 and the limit nonlinearity."""
        return replace(self, potential=ZeroPotential(), nonlinearity=self.nonlinearity.limit)

    # Array kernels over the last axis

    def energy_values(self, values: np.ndarray) -> np.ndarray:
        grad = gradient_energy_values(self.domain, values)
        pot = np.sum(self.potential_values * values**2, axis=-1)
        prim = np.sum(self.modulation_values * self.nonlinearity.limit_F(values), axis=-1)
        return 0.5 * grad + 0.5 * pot - prim

    def gradient_values(self, values: np.ndarray) -> np.ndarray:
        return (
            -apply_laplacian(self.domain, values)
            + self.potential_values * values
            - self.modulation_values * self.nonlinearity.limit_f(values)
        )

    def nonlinear_values(self, values: np.ndarray) -> np.ndarray:
        return self.modulation_values * self.nonlinearity.limit_f(values)


def energy(ctx: EnergyContext, u: LatticeField) -> float:
    """Phi(u) = 1/2 |grad u|^2 + 1/2 sum V u^2 - sum F(x, u)."""
    return float(ctx.energy_values(u.values))


def energy_gradient(ctx: EnergyContext, u: LatticeField) -> LatticeField:
    """First variation of Phi: -Delta u + V u - f(x, u)."""
    return LatticeField(u.domain, ctx.gradient_values(u.values))


def lagrange_multiplier(ctx: EnergyContext, u: LatticeField) -> float:
    """lambda = <f(., u) - (-Delta + V) u, u> / ||u||_2^2."""
    norm2 = float(np.dot(u.values, u.values))
    if norm2 == 0.0:
        raise ZeroFieldError("Lagrange multiplier is undefined for the zero field")
    g = ctx.gradient_values(u.values)
    return float(-np.dot(g, u.values) / norm2)


def el_residual(ctx: EnergyContext, u: LatticeField, lam: float) -> tuple[LatticeField, float]:
    """r = -Delta u + V u + lambda u - f(x, u), with its l2 norm."""
    r = ctx.gradient_values(u.values) + lam * u.values
    return LatticeField(u.domain, r), float(np.linalg.norm(r))


def box_ground_eigenvalue(ctx: EnergyContext) -> float:
    """Smallest eigenvalue of -Delta + V on the box (dense eigen-decomposition)."""
    H = -ctx.domain.laplacian_matrix.toarray() + np.diag(ctx.potential_values)
    return float(np.linalg.eigvalsh(H)[0])
