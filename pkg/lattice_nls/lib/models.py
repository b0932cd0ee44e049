"""Catalog of nonlinearities f(x, s) and potentials V(x).

Every nonlinearity is a sum of odd power terms c_k |s|^(p_k - 2) s, possibly
multiplied by a site modulation 1 + b(x) with b(x) -> 0 as |x| -> inf. The
primitive F is therefore exact: F(x, s) = (1 + b(x)) sum c_k |s|^p_k / p_k.
"""

import logging
import math
from typing import Annotated, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .constants import (
    HYPOTHESIS_SLACK,
    S_GRID,
    SMALL_S,
    THETA_GRID,
    XI_CANDIDATES,
)
from .lattice import BoxDomain
from .livetypes import CheckResult, InvalidParameterError, Report, TableLookupError

logger = logging.getLogger(__name__)


class _Spec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class _PowerSum(_Spec):
    """Nonlinearities without site dependence: f(s) = sum c_k |s|^(p_k-2) s."""

    @property
    def terms(self) -> list[tuple[float, float]]:
        """(coefficient, exponent) pairs with nonzero coefficient."""
        raise NotImplementedError

    @property
    def limit(self) -> "_PowerSum":
        return self

    @property
    def modulation_amplitude(self) -> float:
        return 0.0

    def modulation(self, r1: np.ndarray | float) -> np.ndarray | float:
        """Site factor 1 + b(x) as a function of |x|."""
        return np.ones_like(r1, dtype=float) if isinstance(r1, np.ndarray) else 1.0

    def limit_f(self, s: np.ndarray | float) -> np.ndarray | float:
        s = np.asarray(s, dtype=float)
        mag = np.abs(s)
        out = np.zeros_like(s)
        for c, p in self.terms:
            out = out + c * mag ** (p - 2) * s
        return out

    def limit_F(self, s: np.ndarray | float) -> np.ndarray | float:
        mag = np.abs(np.asarray(s, dtype=float))
        out = np.zeros_like(mag)
        for c, p in self.terms:
            out = out + c * mag**p / p
        return out

    def limit_g(self, r: np.ndarray | float) -> np.ndarray | float:
        """g(r) = f(r) / r, extended by its limit 0 at r = 0."""
        mag = np.abs(np.asarray(r, dtype=float))
        out = np.zeros_like(mag)
        for c, p in self.terms:
            out = out + c * mag ** (p - 2)
        return out

    def f(self, s, r1):
        return self.modulation(r1) * self.limit_f(s)

    def F(self, s, r1):
        return self.modulation(r1) * self.limit_F(s)

    def g(self, r, r1):
        return self.modulation(r1) * self.limit_g(r)

    def df(self, s, r1):
        """Derivative of f in s."""
        mag = np.abs(np.asarray(s, dtype=float))
        out = np.zeros_like(mag)
        for c, p in self.terms:
            out = out + c * (p - 1) * mag ** (p - 2)
        return self.modulation(r1) * out

    @property
    def leading_exponent(self) -> float:
        """Smallest active exponent p (controls the behavior near s = 0)."""
        exps = [p for _, p in self.terms]
        return min(exps) if exps else math.inf

    @property
    def top_exponent(self) -> float:
        exps = [p for _, p in self.terms]
        return max(exps) if exps else 0.0

    @property
    def growth_exponent(self) -> float:
        """The q of (f1): f / |s|^q -> 0 at infinity for every q above top_exponent - 1."""
        return max(self.top_exponent - 1.0, 1.0)


class PowerNonlinearity(_PowerSum):
    """f(s) = |s|^(p-2) s."""

    kind: Literal["power"] = "power"
    p: float = Field(gt=2)

    @property
    def terms(self) -> list[tuple[float, float]]:
        return [(1.0, self.p)]


class CombinedPowerNonlinearity(_PowerSum):
    """f(s) = kappa |s|^(p-2) s + mu |s|^(q-2) s.

    kappa = mu = 0 is the degenerate F = 0 case used as a linear oracle.
    """

    kind: Literal["combined_power"] = "combined_power"
    p: float = Field(gt=2)
    q: float = Field(gt=2)
    mu: float = Field(default=1.0, ge=0)
    kappa: float = Field(default=1.0, ge=0)

    @property
    def terms(self) -> list[tuple[float, float]]:
        return [(c, e) for c, e in ((self.kappa, self.p), (self.mu, self.q)) if c > 0]


BaseNonlinearity = Annotated[
    Union[PowerNonlinearity, CombinedPowerNonlinearity], Field(discriminator="kind")
]


class ModulatedNonlinearity(_PowerSum):
    """f(x, s) = (1 + b(x)) f~(s), b(x) = b0 / (1 + |x|^2)^decay."""

    kind: Literal["modulated"] = "modulated"
    base: BaseNonlinearity
    b0: float = Field(default=1.0, ge=0)
    decay: float = Field(default=1.0, gt=0)

    @property
    def terms(self) -> list[tuple[float, float]]:
        return self.base.terms

    @property
    def limit(self) -> _PowerSum:
        return self.base

    @property
    def modulation_amplitude(self) -> float:
        return self.b0

    def modulation(self, r1):
        return 1.0 + self.b0 / (1.0 + np.asarray(r1, dtype=float) ** 2) ** self.decay


NonlinearitySpec = Annotated[
    Union[PowerNonlinearity, CombinedPowerNonlinearity, ModulatedNonlinearity],
    Field(discriminator="kind"),
]


def degenerate_nonlinearity() -> CombinedPowerNonlinearity:
    """The F = 0 member of the catalog."""
    return CombinedPowerNonlinearity(p=4, q=6, kappa=0.0, mu=0.0)


class _Potential(_Spec):
    @property
    def v_inf(self) -> float:
        raise NotImplementedError

    def values_on(self, domain: BoxDomain) -> np.ndarray:
        raise NotImplementedError

    def value_at(self, x: Sequence[int]) -> float:
        raise NotImplementedError


class ZeroPotential(_Potential):
    kind: Literal["zero"] = "zero"

    @property
    def v_inf(self) -> float:
        return 0.0

    def values_on(self, domain: BoxDomain) -> np.ndarray:
        return np.zeros(domain.site_count)

    def value_at(self, x: Sequence[int]) -> float:
        return 0.0


class WellPotential(_Potential):
    """V(x) = -c / (1 + |x|^2)."""

    kind: Literal["well"] = "well"
    c: float = Field(ge=0)

    @property
    def v_inf(self) -> float:
        return 0.0

    def values_on(self, domain: BoxDomain) -> np.ndarray:
        return -self.c / (1.0 + domain.l1_norms**2)

    def value_at(self, x: Sequence[int]) -> float:
        r = float(np.abs(np.asarray(x)).sum())
        return -self.c / (1.0 + r * r)


class TrappingPotential(_Potential):
    """V(x) = |x|^beta."""

    kind: Literal["trapping"] = "trapping"
    beta: float = Field(gt=0)

    @property
    def v_inf(self) -> float:
        return math.inf

    def values_on(self, domain: BoxDomain) -> np.ndarray:
        return domain.l1_norms**self.beta

    def value_at(self, x: Sequence[int]) -> float:
        return float(np.abs(np.asarray(x)).sum()) ** self.beta


class TablePotential(_Potential):
    """Tabulated V on an explicit list of sites, with its limit at infinity."""

    kind: Literal["table"] = "table"
    sites: list[list[int]]
    values: list[float]
    v_limit: float = 0.0

    @model_validator(mode="after")
    def _lengths_match(self) -> "TablePotential":
        if len(self.sites) != len(self.values):
            raise ValueError("sites and values must have the same length")
        return self

    @property
    def v_inf(self) -> float:
        return self.v_limit

    def _lookup(self) -> dict[tuple[int, ...], float]:
        return {tuple(s): v for s, v in zip(self.sites, self.values)}

    def value_at(self, x: Sequence[int]) -> float:
        key = tuple(int(c) for c in x)
        table = self._lookup()
        if key not in table:
            raise TableLookupError(f"potential table has no entry for site {list(key)}")
        return table[key]

    def values_on(self, domain: BoxDomain) -> np.ndarray:
        table = self._lookup()
        out = np.empty(domain.site_count)
        for idx, coords in enumerate(domain.sites):
            key = tuple(int(c) for c in coords)
            if key not in table:
                raise TableLookupError(f"potential table has no entry for site {list(key)}")
            out[idx] = table[key]
        return out


PotentialSpec = Annotated[
    Union[ZeroPotential, WellPotential, TrappingPotential, TablePotential],
    Field(discriminator="kind"),
]


def _r1(x: Sequence[int]) -> float:
    return float(np.abs(np.asarray(x)).sum())


def eval_f(spec: _PowerSum, x: Sequence[int], s: float) -> float:
    """f(x, s)."""
    return float(spec.f(s, _r1(x)))


def eval_F(spec: _PowerSum, x: Sequence[int], s: float) -> float:
    """F(x, s) = integral of f(x, t) over [0, s]."""
    return float(spec.F(s, _r1(x)))


def eval_V(vspec: _Potential, x: Sequence[int]) -> float:
    """V(x); tabulated potentials raise TableLookupError outside their table."""
    return float(vspec.value_at(x))


def find_xi_witness(spec: _PowerSum, candidates: Sequence[float] = XI_CANDIDATES) -> Optional[float]:
    """First candidate xi > 0 with F~(xi) > 0, if any."""
    for xi in candidates:
        if xi > 0 and spec.limit.limit_F(xi) > 0:
            return float(xi)
    return None


def check_hypotheses(
    spec: _PowerSum,
    vspec: _Potential,
    domain: BoxDomain,
    thetas: Sequence[float] = THETA_GRID,
    s_grid: Sequence[float] = S_GRID,
) -> Report:
    """Check (f0)-(f4) and (V0) on finite grids; failures name the first violation."""
    report = Report(title="hypotheses")
    r1 = domain.l1_norms
    s = np.asarray([v for v in s_grid if v != 0], dtype=float)
    limit = spec.limit

    # (f0): closed forms are continuous; check they are finite on the grid
    fx = spec.f(s[None, :], r1[:, None])
    report.add(
        CheckResult(
            name="f0",
            passed=bool(np.all(np.isfinite(fx))),
            detail="closed-form f is finite on the sample grid",
        )
    )

    # (f1): f(x,s)/s -> 0 as s -> 0, uniformly in x
    small = np.array([SMALL_S, -SMALL_S])
    ratio = np.abs(spec.f(small[None, :], r1[:, None]) / small[None, :])
    coeff = sum(c for c, _ in spec.terms) * (1.0 + spec.modulation_amplitude)
    bound = coeff * SMALL_S ** (spec.leading_exponent - 2) if spec.terms else 0.0
    f1_ok = bool(np.all(ratio <= bound * (1 + 1e-9) + HYPOTHESIS_SLACK))
    report.add(
        CheckResult(
            name="f1",
            passed=f1_ok,
            witness=spec.growth_exponent,
            detail=f"|f/s| <= {bound:.3e} at |s| = {SMALL_S}; growth exponent q = {spec.growth_exponent}",
        )
    )

    # (f2): F(x,s) >= F~(s) everywhere, strict at x1 = 0 for modulated specs
    Fx = spec.F(s[None, :], r1[:, None])
    Ft = limit.limit_F(s)[None, :]
    bad = np.argwhere(Fx < Ft - HYPOTHESIS_SLACK)
    violation = None
    if bad.size:
        i, k = bad[0]
        violation = {"site": domain.sites[i].tolist(), "s": float(s[k])}
    detail = "F(x,s) >= F~(s) on the grid"
    if spec.modulation_amplitude > 0:
        strict = bool(np.all(spec.F(s, 0.0) > limit.limit_F(s)))
        detail += f"; strict at x1 = 0: {strict}"
    report.add(CheckResult(name="f2", passed=violation is None, violation=violation, detail=detail))

    # (f3): a witness xi with F~(xi) > 0
    xi = find_xi_witness(spec)
    report.add(
        CheckResult(
            name="f3",
            passed=xi is not None,
            witness=xi,
            detail="no xi with F~(xi) > 0" if xi is None else f"F~({xi}) = {float(limit.limit_F(xi)):.6g}",
        )
    )

    # (f4): F(x, sqrt(theta) s) > theta F(x, s)
    violation = None
    for theta in thetas:
        lhs = spec.F(math.sqrt(theta) * s[None, :], r1[:, None])
        rhs = theta * spec.F(s[None, :], r1[:, None])
        bad = np.argwhere(~(lhs - rhs > HYPOTHESIS_SLACK * np.abs(rhs)))
        if bad.size:
            i, k = bad[0]
            violation = {"theta": float(theta), "s": float(s[k]), "site": domain.sites[i].tolist()}
            break
    report.add(CheckResult(name="f4", passed=violation is None, violation=violation))

    # (V0): V(x) <= V_inf on the box
    violation = None
    try:
        v = vspec.values_on(domain)
        bad_sites = np.flatnonzero(v > vspec.v_inf)
        if bad_sites.size:
            i = bad_sites[0]
            violation = {"site": domain.sites[i].tolist(), "V": float(v[i]), "V_inf": vspec.v_inf}
    except TableLookupError as e:
        violation = {"error": str(e)}
    report.add(CheckResult(name="V0", passed=violation is None, violation=violation))

    logger.debug(
        "Hypothesis check complete",
        extra={"spec": spec.kind, "potential": vspec.kind, "passed": report.passed},
    )
    return report


def mass_critical_criterion(spec: _PowerSum, d: int) -> str:
    """Whether liminf F~(s)/|s|^(2+4/d) is infinite at s -> 0.

    Returns "alpha_zero" for mass-subcritical growth near 0 and
    "alpha_positive" for critical or supercritical growth.
    """
    critical = 2.0 + 4.0 / d
    if spec.limit.leading_exponent < critical:
        return "alpha_zero"
    return "alpha_positive"


def growth_constant(spec: _PowerSum, d: int, delta: float) -> float:
    """Smallest C_F with F(x,s) <= C_F |s|^(2+4/d) for |s| <= delta, all x."""
    if delta <= 0:
        raise InvalidParameterError(f"delta must be positive, got {delta}")
    critical = 2.0 + 4.0 / d
    total = 0.0
    for c, p in spec.terms:
        if p < critical:
            return math.inf
        total += c * delta ** (p - critical) / p
    return (1.0 + spec.modulation_amplitude) * total


def check_hardy_admissibility(
    vspec: _Potential, domain: BoxDomain, hardy_constant: float, eps: float
) -> CheckResult:
    """V(x) >= -C_d (1 - eps) / (1 + |x|^2) on the box.

    The reported violation is the site with the largest shortfall.
    """
    if not 0 < eps < 1:
        raise InvalidParameterError(f"eps must lie in (0, 1), got {eps}")
    v = vspec.values_on(domain)
    floor = -hardy_constant * (1 - eps) / (1.0 + domain.l1_norms**2)
    bad = np.flatnonzero(v < floor)
    violation = None
    if bad.size:
        i = bad[np.argmax(floor[bad] - v[bad])]
        violation = {"site": domain.sites[i].tolist(), "V": float(v[i]), "floor": float(floor[i])}
    return CheckResult(
        name="hardy_admissible",
        passed=violation is None,
        violation=violation,
        detail=f"C_d = {hardy_constant:.6g}, eps = {eps}",
    )
