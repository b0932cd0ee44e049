"""Energy-curve scans, threshold estimation and the structural curve checks."""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .constants import BISECTION_ITERS, CURVE_THETAS, CURVE_TOL, EPS_NEG
from .energy import EnergyContext, box_ground_eigenvalue
from .livetypes import AlphaStatus, CheckResult, InvalidParameterError, Report
from .models import _PowerSum
from .solver import SolveConfig, SolveOutcome, minimize_on_sphere

logger = logging.getLogger(__name__)


@dataclass
class AlphaEstimate:
    """Bracket (lower, upper] for the threshold alpha = inf{a : E_a < 0}."""

    lower: float
    upper: Optional[float]
    status: AlphaStatus
    probes: list[tuple[float, float]] = field(default_factory=list)

    @property
    def alpha_hat(self) -> Optional[float]:
        return self.upper

    @property
    def width(self) -> float:
        return math.inf if self.upper is None else self.upper - self.lower

    def to_json_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "status": self.status.value}


@dataclass
class ThresholdScan:
    """Sampled energy curve a -> E_a with per-point diagnostics."""

    a_grid: list[float]
    E_values: list[float]
    lambdas: list[float]
    residuals: list[float]
    iters: list[int]
    converged: list[bool]
    eps_neg: float = EPS_NEG
    alpha: Optional[AlphaEstimate] = None

    def __post_init__(self) -> None:
        _check_grid(self.a_grid)
        if not all(math.isfinite(e) for e in self.E_values):
            raise InvalidParameterError("scan energies must be finite")
        if self.alpha is None:
            self.alpha = estimate_alpha(self)

    def energy_at(self, a: float, rel: float = 1e-12) -> Optional[float]:
        for ai, ei in zip(self.a_grid, self.E_values):
            if abs(ai - a) <= rel * max(1.0, abs(a)):
                return ei
        return None

    def rows(self) -> list[tuple]:
        return list(zip(self.a_grid, self.E_values, self.lambdas, self.residuals, self.iters, self.converged))


def _check_grid(a_grid: Sequence[float]) -> None:
    if len(a_grid) == 0:
        raise InvalidParameterError("mass grid is empty")
    if any(a <= 0 for a in a_grid):
        raise InvalidParameterError("mass grid must be positive")
    if any(b <= a for a, b in zip(a_grid, a_grid[1:])):
        raise InvalidParameterError("mass grid must be strictly increasing")


def build_scan(a_grid: Sequence[float], outcomes: Sequence[SolveOutcome], eps_neg: float = EPS_NEG) -> ThresholdScan:
    """Assemble a scan from per-point solve outcomes (in grid order)."""
    best = [o.best for o in outcomes]
    return ThresholdScan(
        a_grid=[float(a) for a in a_grid],
        E_values=[r.E for r in best],
        lambdas=[r.lam for r in best],
        residuals=[r.residual_norm for r in best],
        iters=[r.iters for r in best],
        converged=[r.converged for r in best],
        eps_neg=eps_neg,
    )


def scan_energy_curve(
    ctx_template: EnergyContext,
    a_grid: Sequence[float],
    config: SolveConfig,
    eps_neg: float = EPS_NEG,
) -> ThresholdScan:
    """Solve at every grid mass; strict-mode non-convergence propagates."""
    _check_grid(a_grid)
    outcomes = [minimize_on_sphere(ctx_template.with_mass(float(a)), config) for a in a_grid]
    scan = build_scan(a_grid, outcomes, eps_neg)
    logger.info(
        "Energy curve scanned",
        extra={"points": len(a_grid), "alpha_status": scan.alpha.status.value},
    )
    return scan


def estimate_alpha(scan: ThresholdScan) -> AlphaEstimate:
    """Grid bracket for alpha from the first mass with E < -eps_neg."""
    negative = [i for i, e in enumerate(scan.E_values) if e < -scan.eps_neg]
    if not negative:
        return AlphaEstimate(lower=scan.a_grid[-1], upper=None, status=AlphaStatus.ABOVE_GRID)
    i = negative[0]
    if i == 0:
        return AlphaEstimate(lower=0.0, upper=scan.a_grid[0], status=AlphaStatus.CONSISTENT_WITH_ZERO)
    return AlphaEstimate(lower=scan.a_grid[i - 1], upper=scan.a_grid[i], status=AlphaStatus.BRACKETED)


def refine_alpha(
    ctx_template: EnergyContext,
    config: SolveConfig,
    bracket: AlphaEstimate,
    iters: int = BISECTION_ITERS,
    width: float = 0.0,
    eps_neg: float = EPS_NEG,
    solve: Optional[Callable[[EnergyContext, SolveConfig], SolveOutcome]] = None,
) -> AlphaEstimate:
    """Bisection on a, one full solve per probe, until `iters` or `width` is reached."""
    if bracket.upper is None:
        return bracket
    solve = solve or minimize_on_sphere
    lo, hi = bracket.lower, bracket.upper
    probes = list(bracket.probes)
    for _ in range(iters):
        if hi - lo <= width:
            break
        mid = 0.5 * (lo + hi)
        E = solve(ctx_template.with_mass(mid), config).best.E
        probes.append((mid, E))
        if E < -eps_neg:
            hi = mid
        else:
            lo = mid
    status = AlphaStatus.CONSISTENT_WITH_ZERO if lo == 0.0 else AlphaStatus.BRACKETED
    logger.info("Threshold bracket refined", extra={"lower": lo, "upper": hi, "probes": len(probes)})
    return AlphaEstimate(lower=lo, upper=hi, status=status, probes=probes)


def alpha_upper_bound(limit_spec: _PowerSum, xi: float, d: int) -> float:
    """xi^2 (floor(d xi^2 / F~(xi)) + 1)^d."""
    F_xi = float(limit_spec.limit.limit_F(xi))
    if not F_xi > 0:
        raise InvalidParameterError(f"F~(xi) must be positive, got {F_xi} at xi = {xi}")
    return xi**2 * (math.floor(d * xi**2 / F_xi) + 1) ** d


def alpha_lower_bound(C_F: float, delta: float, eps: float, C_gns: float, d: int) -> float:
    """min((eps / (2 C_F C_gns))^(d/2), delta^2)."""
    for name, value in (("C_F", C_F), ("delta", delta), ("eps", eps), ("C_gns", C_gns)):
        if not value > 0:
            raise InvalidParameterError(f"{name} must be positive, got {value}")
    if not eps < 1:
        raise InvalidParameterError(f"eps must be < 1, got {eps}")
    if d < 1:
        raise InvalidParameterError(f"dimension must be >= 1, got {d}")
    return min((eps / (2.0 * C_F * C_gns)) ** (d / 2.0), delta**2)


def continuity_constant(ctx: EnergyContext, a_max: float) -> float:
    """Bound on |dE_a/da| = |lambda_a| / 2 over a <= a_max.

    |lambda| <= 4d + max|V| + (1 + b0) sum c_k a^(p_k/2 - 1) for u on S_a.
    """
    spec = ctx.nonlinearity
    v_max = float(np.max(np.abs(ctx.potential_values), initial=0.0))
    nonlinear = sum(c * a_max ** (p / 2 - 1) for c, p in spec.terms) * (1 + spec.modulation_amplitude)
    return 0.5 * (4 * ctx.domain.d + v_max + nonlinear)


def probe_masses(
    scan: ThresholdScan,
    thetas: Sequence[float] = CURVE_THETAS,
    pairs: Sequence[tuple[int, int]] = (),
) -> list[float]:
    """Masses theta*a and a+b that the curve checks need but the grid lacks."""
    wanted: set[float] = set()
    for a in scan.a_grid:
        for theta in thetas:
            wanted.add(theta * a)
    for i, j in pairs:
        wanted.add(scan.a_grid[i] + scan.a_grid[j])
    return [a for a in sorted(wanted) if scan.energy_at(a) is None]


def solve_curve_probes(
    ctx_template: EnergyContext,
    scan: ThresholdScan,
    config: SolveConfig,
    thetas: Sequence[float] = CURVE_THETAS,
    pairs: Sequence[tuple[int, int]] = (),
) -> dict[float, float]:
    """Extra solves at theta*a and a+b for masses missing from the grid."""
    return {
        a: minimize_on_sphere(ctx_template.with_mass(a), config).best.E
        for a in probe_masses(scan, thetas, pairs)
    }


def _lookup(scan: ThresholdScan, probes: dict[float, float], a: float) -> Optional[float]:
    value = scan.energy_at(a)
    if value is not None:
        return value
    for key, e in probes.items():
        if abs(key - a) <= 1e-12 * max(1.0, abs(a)):
            return e
    return None


def _cause(scan: ThresholdScan, *indices: int) -> str:
    if any(not scan.converged[i] for i in indices if i is not None):
        return "non_converged_solve"
    return "solver_upper_bound_gap"


def box_gap(ctx: EnergyContext) -> float:
    """Per-unit-mass energy the box adds at minimum: max(0, mu_1(-Delta + V)) / 2.

    On a finite box E_a - a * box_gap is nonpositive and nonincreasing, while
    E_a itself can sit slightly above zero where the infinite lattice has 0.
    """
    return 0.5 * max(0.0, box_ground_eigenvalue(ctx))


def verify_curve_properties(
    scan: ThresholdScan,
    ctx_template: Optional[EnergyContext] = None,
    probes: Optional[dict[float, float]] = None,
    tol: float = CURVE_TOL,
    thetas: Sequence[float] = CURVE_THETAS,
    pairs: Optional[Sequence[tuple[int, int]]] = None,
    gap: Optional[float] = None,
) -> Report:
    """Check the structural properties of the energy curve.

    Solver energies are upper bounds on E_a, so a violation beyond `tol`
    points at the solver (each violation names the cause), not the theorem.
    Sign and monotonicity are checked on E_a - a * gap; the gap defaults to
    `box_gap(ctx_template)` when a context is given and to 0 otherwise.
    Scaling and subadditivity do not depend on it.
    """
    probes = probes or {}
    report = Report(title="energy_curve")
    a, E = scan.a_grid, scan.E_values
    if pairs is None:
        pairs = [(i, j) for i in range(len(a)) for j in range(i, len(a))]
    if gap is None:
        gap = box_gap(ctx_template) if ctx_template is not None else 0.0
    shifted = [e - gap * ai for ai, e in zip(a, E)]

    bad = [i for i, e in enumerate(shifted) if e > tol]
    report.add(
        CheckResult(
            name="nonpositive",
            passed=not bad,
            witness=gap,
            detail=f"E(a) <= {gap:.6g} a",
            violation=None if not bad else {"index": bad[0], "a": a[bad[0]], "E": E[bad[0]], "cause": _cause(scan, bad[0])},
        )
    )

    bad = [i + 1 for i in range(len(E) - 1) if shifted[i + 1] > shifted[i] + tol]
    report.add(
        CheckResult(
            name="nonincreasing",
            passed=not bad,
            witness=gap,
            violation=None if not bad else {
                "index": bad[0], "a": a[bad[0]], "E": E[bad[0]], "previous": E[bad[0] - 1],
                "cause": _cause(scan, bad[0], bad[0] - 1),
            },
        )
    )
    if ctx_template is not None:
        C = continuity_constant(ctx_template, a[-1])
        bad = [i + 1 for i in range(len(E) - 1) if abs(E[i + 1] - E[i]) > C * (a[i + 1] - a[i]) + tol]
        report.add(
            CheckResult(
                name="continuity",
                passed=not bad,
                witness=C,
                violation=None if not bad else {"index": bad[0], "a": a[bad[0]], "cause": _cause(scan, bad[0], bad[0] - 1)},
                detail=f"|E(a') - E(a)| <= {C:.6g} |a' - a|",
            )
        )

    scaling_violation = None
    strict_scaling = []
    for i, ai in enumerate(a):
        for theta in thetas:
            e_theta = _lookup(scan, probes, theta * ai)
            if e_theta is None:
                continue
            if e_theta > theta * E[i] + tol and scaling_violation is None:
                scaling_violation = {"index": i, "a": ai, "theta": theta, "lhs": e_theta, "rhs": theta * E[i], "cause": _cause(scan, i)}
            if scan.converged[i] and E[i] < -scan.eps_neg:
                strict_scaling.append(e_theta < theta * E[i] - tol)
    report.add(CheckResult(name="scaling", passed=scaling_violation is None, violation=scaling_violation))
    report.add(
        CheckResult(
            name="strict_scaling",
            passed=all(strict_scaling),
            hard=False,
            detail=f"E(theta a) < theta E(a) at {sum(strict_scaling)}/{len(strict_scaling)} attained points",
        )
    )

    sub_violation = None
    strict_sub = []
    for i, j in pairs:
        e_sum = _lookup(scan, probes, a[i] + a[j])
        if e_sum is None:
            continue
        if e_sum > E[i] + E[j] + tol and sub_violation is None:
            sub_violation = {"pair": [i, j], "lhs": e_sum, "rhs": E[i] + E[j], "cause": _cause(scan, i, j)}
        if (scan.converged[i] and E[i] < -scan.eps_neg) or (scan.converged[j] and E[j] < -scan.eps_neg):
            strict_sub.append(e_sum < E[i] + E[j] - tol)
    report.add(CheckResult(name="subadditivity", passed=sub_violation is None, violation=sub_violation))
    report.add(
        CheckResult(
            name="strict_subadditivity",
            passed=all(strict_sub),
            hard=False,
            detail=f"E(a+b) < E(a) + E(b) at {sum(strict_sub)}/{len(strict_sub)} pairs with an attained side",
        )
    )
    return report


def compare_with_limit(scan: ThresholdScan, limit_scan: ThresholdScan, tol: float = CURVE_TOL) -> Report:
    """E(a) <= E^inf(a) + tol pointwise, plus the strict margin where E^inf(a) < 0."""
    if len(scan.a_grid) != len(limit_scan.a_grid) or any(
        abs(x - y) > 1e-12 * max(1.0, x) for x, y in zip(scan.a_grid, limit_scan.a_grid)
    ):
        raise InvalidParameterError("scans must share the same mass grid")
    report = Report(title="limit_comparison")
    violation = None
    margins = []
    for i, (e, e_inf) in enumerate(zip(scan.E_values, limit_scan.E_values)):
        if e > e_inf + tol and violation is None:
            violation = {"index": i, "a": scan.a_grid[i], "E": e, "E_inf": e_inf, "cause": _cause(scan, i)}
        if e_inf < -scan.eps_neg:
            margins.append(e_inf - e)
    report.add(CheckResult(name="below_limit", passed=violation is None, violation=violation))
    report.add(
        CheckResult(
            name="strictly_below_limit",
            passed=all(m > tol for m in margins),
            hard=False,
            witness=min(margins) if margins else None,
            detail="smallest E^inf(a) - E(a) where E^inf(a) < 0",
        )
    )
    return report
