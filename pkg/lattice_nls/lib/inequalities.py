"""Functional inequalities on the lattice: quotients, constant estimates, sweeps.

Constants are one-sided: GNS estimates are suprema over evaluated fields
(lower bounds on the best constant), Hardy estimates are infima (upper bounds).
Both searches run on the unit sphere with the solver's retraction.
"""

import logging
import math
from typing import Optional

import numpy as np

from .constants import (
    GNS_SAFETY,
    NORM_SLACK,
    QUOTIENT_MAX_ITERS,
    QUOTIENT_TOL,
)
from .lattice import BoxDomain, LatticeField, apply_laplacian, gradient_energy, gradient_energy_values, lp_norm
from .livetypes import CheckResult, ConstantEstimate, Direction, InvalidParameterError, Report, ZeroFieldError
from .solver import SolveConfig, sphere_descent

logger = logging.getLogger(__name__)


def _require_nonzero(u: LatticeField) -> None:
    if not np.any(u.values):
        raise ZeroFieldError("quotient is undefined for the zero field")


def critical_exponent(d: int) -> float:
    """Mass-critical exponent 2 + 4/d."""
    return 2.0 + 4.0 / d


def gns_theta_max(d: int, p: float) -> float:
    """min(1, d (1/2 - 1/p))."""
    return min(1.0, d * (0.5 - 1.0 / p))


def gns_quotient(u: LatticeField, p: float, theta: float) -> float:
    """||u||_p / (||grad u||_2^theta ||u||_2^(1-theta))."""
    _require_nonzero(u)
    if not p > 2:
        raise InvalidParameterError(f"p must exceed 2, got {p}")
    if not 0 < theta <= 1:
        raise InvalidParameterError(f"theta must lie in (0, 1], got {theta}")
    grad = math.sqrt(gradient_energy(u))
    return lp_norm(u, p) / (grad**theta * lp_norm(u, 2) ** (1 - theta))


def critical_gns_quotient(u: LatticeField) -> float:
    """||u||_r^r / (||grad u||_2^2 ||u||_2^(4/d)) with r = 2 + 4/d."""
    _require_nonzero(u)
    d = u.domain.d
    r = critical_exponent(d)
    return lp_norm(u, r) ** r / (gradient_energy(u) * lp_norm(u, 2) ** (4.0 / d))


def hardy_weights(domain: BoxDomain) -> np.ndarray:
    return 1.0 / (1.0 + domain.l1_norms**2)


def hardy_quotient(u: LatticeField) -> float:
    """|grad u|^2 / sum u^2 / (1 + |x|^2)."""
    _require_nonzero(u)
    weighted = float(np.sum(hardy_weights(u.domain) * u.values**2))
    return gradient_energy(u) / weighted


def check_norm_monotonicity(u: LatticeField, p: float, q: float) -> bool:
    """||u||_q <= ||u||_p for 1 <= p < q."""
    if not 1 <= p < q:
        raise InvalidParameterError(f"need 1 <= p < q, got p={p}, q={q}")
    return lp_norm(u, q) <= lp_norm(u, p) + NORM_SLACK


def total_variation(u: LatticeField) -> float:
    """Once-per-edge sum |u(y) - u(x)|, boundary edges to the zero exterior included."""
    domain = u.domain
    i, j = domain.edges[:, 0], domain.edges[:, 1]
    interior = np.sum(np.abs(u.values[i] - u.values[j]))
    return float(interior + np.sum(domain.exterior_degree * np.abs(u.values)))


def check_sup_tv_d1(u: LatticeField) -> bool:
    """||u||_inf <= total variation, d = 1."""
    if u.domain.d != 1:
        raise InvalidParameterError(f"sup/TV bound is one-dimensional, got d={u.domain.d}")
    return lp_norm(u, math.inf) <= total_variation(u) + NORM_SLACK


def _quotient_config(seed: int) -> SolveConfig:
    return SolveConfig(tol=QUOTIENT_TOL, max_iters=QUOTIENT_MAX_ITERS, seed=seed)


def _trial_start(domain: BoxDomain, seed: int, trial: int) -> np.ndarray:
    if trial == 0:
        return LatticeField.delta(domain).values
    rng = np.random.default_rng(np.random.SeedSequence([seed, trial]))
    values = rng.standard_normal(domain.site_count)
    # Localized starts reach concentrated maximizers faster
    if trial % 2 == 0:
        values *= np.exp(-domain.l1_norms / max(1.0, rng.uniform(0.5, domain.L / 2 + 1)))
    return values


def estimate_gns_constant(domain: BoxDomain, trials: int, seed: int = 0, config: Optional[SolveConfig] = None) -> ConstantEstimate:
    """Running supremum of the mass-critical quotient over refined trials.

    Trial 0 starts from delta_0; later trials start from seeded random fields.
    Each trial is ascended on the unit sphere, so the estimate never decreases
    as trials are added.
    """
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    config = config or _quotient_config(seed)
    d = domain.d
    r = critical_exponent(d)

    # On the unit sphere the quotient is sum |u|^r / |grad u|^2
    def neg_quotient(v: np.ndarray) -> float:
        return -float(np.sum(np.abs(v) ** r) / gradient_energy_values(domain, v))

    def neg_quotient_grad(v: np.ndarray) -> np.ndarray:
        N = float(np.sum(np.abs(v) ** r))
        G = float(gradient_energy_values(domain, v))
        dN = r * np.abs(v) ** (r - 2) * v
        dG = -2.0 * apply_laplacian(domain, v)
        return -(dN * G - N * dG) / G**2

    best = 0.0
    for trial in range(trials):
        u0 = _trial_start(domain, seed, trial)
        best = max(best, -neg_quotient(u0 / np.linalg.norm(u0)))
        trace = sphere_descent(neg_quotient, neg_quotient_grad, u0, 1.0, config)
        best = max(best, -trace.objective)
    logger.info("GNS constant estimated", extra={"d": d, "L": domain.L, "trials": trials, "estimate": best})
    return ConstantEstimate(
        inequality="gns_mass_critical", d=d, p=r, estimate=best,
        direction=Direction.LOWER, box_L=domain.L, trials=trials, seed=seed,
    )


def estimate_hardy_constant(domain: BoxDomain, trials: int, seed: int = 0, config: Optional[SolveConfig] = None) -> ConstantEstimate:
    """Running infimum of the Hardy quotient over refined trials (upper estimate of C_d)."""
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    if domain.d < 3:
        logger.warning(f"Hardy constant is only positive for d >= 3; estimating for d={domain.d} anyway")
    config = config or _quotient_config(seed)
    w = hardy_weights(domain)

    def quotient(v: np.ndarray) -> float:
        return float(gradient_energy_values(domain, v) / np.sum(w * v**2))

    def quotient_grad(v: np.ndarray) -> np.ndarray:
        G = float(gradient_energy_values(domain, v))
        W = float(np.sum(w * v**2))
        return (-2.0 * apply_laplacian(domain, v) * W - G * 2.0 * w * v) / W**2

    best = math.inf
    for trial in range(trials):
        u0 = _trial_start(domain, seed, trial)
        best = min(best, quotient(u0))
        trace = sphere_descent(quotient, quotient_grad, u0, 1.0, config)
        best = min(best, trace.objective)
    logger.info("Hardy constant estimated", extra={"d": domain.d, "L": domain.L, "trials": trials, "estimate": best})
    return ConstantEstimate(
        inequality="hardy", d=domain.d, p=None, estimate=best,
        direction=Direction.UPPER, box_L=domain.L, trials=trials, seed=seed,
    )


def random_fields(domain: BoxDomain, count: int, rng: np.random.Generator) -> list[LatticeField]:
    """Nonzero random fields with random supports and scales."""
    fields = []
    n = domain.site_count
    for _ in range(count):
        values = rng.standard_normal(n) * rng.exponential(1.0)
        mask = rng.random(n) < rng.uniform(0.05, 1.0)
        if not mask.any():
            mask[rng.integers(n)] = True
        fields.append(LatticeField(domain, np.where(mask, values, 0.0)))
    return fields


def run_inequality_sweeps(
    domains: dict[int, BoxDomain],
    count: int,
    seed: int = 0,
    gns_estimates: Optional[dict[int, float]] = None,
    hardy_estimate: Optional[float] = None,
) -> Report:
    """Property sweeps of the lattice inequalities over random fields.

    `domains` maps dimension to box. Constants default to each sweep's own
    running extremum over the fields it evaluates.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    report = Report(title="inequalities")
    gns_estimates = dict(gns_estimates or {})

    for d, domain in sorted(domains.items()):
        fields = random_fields(domain, count, rng)

        failures = 0
        for u in fields:
            p = rng.uniform(1.0, 7.0)
            q = rng.uniform(p, 8.0)
            if q > p and not check_norm_monotonicity(u, p, q):
                failures += 1
        report.add(CheckResult(name=f"norm_monotonicity_d{d}", passed=failures == 0, detail=f"{failures} failures"))

        quotients = np.array([critical_gns_quotient(u) for u in fields])
        C = max(gns_estimates.get(d, 0.0), float(quotients.max()))
        gns_estimates[d] = C
        bad = int(np.sum(quotients > C * (1 + GNS_SAFETY)))
        report.add(CheckResult(name=f"gns_mass_critical_d{d}", passed=bad == 0, witness=C, detail=f"{bad} failures"))

        if d == 2:
            four = np.array([lp_norm(u, 4) ** 4 / (gradient_energy(u) * lp_norm(u, 2) ** 2) for u in fields])
            bad = int(np.sum(four > C * (1 + GNS_SAFETY)))
            report.add(CheckResult(name="four_norm_d2", passed=bad == 0, witness=C, detail=f"{bad} failures"))

        if d == 3:
            hq = np.array([hardy_quotient(u) for u in fields])
            H = min(hardy_estimate if hardy_estimate is not None else math.inf, float(hq.min()))
            bad = int(np.sum(H * (1 - GNS_SAFETY) > hq))
            report.add(CheckResult(name="hardy_d3", passed=bad == 0, witness=H, detail=f"{bad} failures"))

        if d == 1:
            bad = sum(not check_sup_tv_d1(u) for u in fields)
            report.add(CheckResult(name="sup_tv_d1", passed=bad == 0, detail=f"{bad} failures"))

    return report
