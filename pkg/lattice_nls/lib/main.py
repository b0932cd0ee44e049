"""Command-line entry point for lattice-nls.

Usage:
    lattice-nls solve  --config run.json      # one ground state -> solve.json, field.csv
    lattice-nls scan   --config run.json      # energy curve -> scan.csv, summary.json
    lattice-nls bounds --config run.json      # threshold bounds -> bounds.json
    lattice-nls gns    --config run.json      # GNS constant -> gns.json
    lattice-nls hardy  --config run.json      # Hardy constant -> hardy.json
    lattice-nls verify --config run.json      # all check suites -> verify.json
    lattice-nls evolve --config run.json      # standing-wave run -> trajectory.csv
"""

import argparse
import asyncio
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Any, Callable, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .constants import (
    APP_NAME,
    APP_VERSION,
    BISECTION_ITERS,
    CURVE_THETAS,
    CURVE_TOL,
    EPS_NEG,
    EXIT_OK,
    LATTICE_NLS_LOG_LEVEL,
    SCAN_CSV_HEADER,
)
from .energy import EnergyContext
from .evolution import EvolutionConfig, standing_wave_check, trajectory_to_csv
from .inequalities import estimate_gns_constant, estimate_hardy_constant, run_inequality_sweeps
from .lattice import BoxDomain, field_to_csv
from .livetypes import AlphaStatus, ConfigError, LatticeNLSError, Report, VerificationError
from .models import (
    NonlinearitySpec,
    PotentialSpec,
    ZeroPotential,
    check_hardy_admissibility,
    check_hypotheses,
    find_xi_witness,
    growth_constant,
    mass_critical_criterion,
)
from .service import Application
from .solver import SolveConfig
from .thresholds import (
    alpha_lower_bound,
    alpha_upper_bound,
    compare_with_limit,
    probe_masses,
    refine_alpha,
    verify_curve_properties,
)
from .utils import atomic_write_text, dump_json, rows_to_csv

logger = logging.getLogger(__name__)


class DomainSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    d: int = Field(ge=1)
    L: int = Field(ge=0)


class ThresholdSection(BaseModel):
    """Negativity margin, bisection depth and the inputs of the threshold bounds."""

    model_config = ConfigDict(extra="forbid")

    eps_neg: float = Field(default=EPS_NEG, gt=0)
    bisection_iters: int = Field(default=BISECTION_ITERS, ge=0)
    width: float = Field(default=0.0, ge=0)
    xi: Optional[float] = Field(default=None, gt=0)
    delta: float = Field(default=0.1, gt=0)
    eps: float = Field(default=0.5, gt=0, lt=1)
    C_gns: Optional[float] = Field(default=None, gt=0)
    curve_tol: float = Field(default=CURVE_TOL, gt=0)


class InequalitySection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    trials: int = Field(default=8, ge=1)
    sweep_fields: int = Field(default=1000, ge=1)
    sweep_dims: list[int] = Field(default_factory=lambda: [1, 2, 3])
    sweep_L: int = Field(default=4, ge=1)
    hardy_eps: float = Field(default=0.5, gt=0, lt=1)


class RunConfig(BaseModel):
    """A complete run: one problem, its mass (or mass grid) and every tool's settings."""

    model_config = ConfigDict(extra="forbid")

    domain: DomainSection
    potential: PotentialSpec = Field(default_factory=ZeroPotential)
    nonlinearity: NonlinearitySpec
    mass: Optional[float] = Field(default=None, gt=0)
    mass_grid: Optional[list[float]] = None
    solver: SolveConfig = Field(default_factory=SolveConfig)
    evolution: EvolutionConfig = Field(default_factory=EvolutionConfig)
    thresholds: ThresholdSection = Field(default_factory=ThresholdSection)
    inequalities: InequalitySection = Field(default_factory=InequalitySection)
    output_dir: str = "out"
    seed: Optional[int] = Field(default=None, ge=0, lt=2**64)

    @field_validator("mass_grid")
    @classmethod
    def _increasing_grid(cls, v: Optional[list[float]]) -> Optional[list[float]]:
        if v is None:
            return v
        if not v:
            raise ValueError("mass grid is empty")
        if any(a <= 0 for a in v):
            raise ValueError("masses must be positive")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("masses must be strictly increasing")
        return v

    @property
    def effective_seed(self) -> int:
        return self.seed if self.seed is not None else self.solver.seed

    @property
    def solve_config(self) -> SolveConfig:
        return self.solver.model_copy(update={"seed": self.effective_seed})

    @property
    def box(self) -> BoxDomain:
        return BoxDomain(self.domain.d, self.domain.L)

    def context(self, mass: float = 1.0) -> EnergyContext:
        return EnergyContext(self.box, self.potential, self.nonlinearity, mass)

    def require(self, name: str, command: str) -> Any:
        value = getattr(self, name)
        if value is None:
            raise ConfigError(f"{name}: field required for '{command}'")
        return value


def _format_validation_error(e: ValidationError) -> str:
    parts = []
    for err in e.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def load_config(path: str, overrides: Optional[dict[str, Any]] = None) -> RunConfig:
    """Read and validate a JSON run configuration.

    Args:
        path: Config file path
        overrides: Top-level keys replaced before validation (CLI flags)

    Returns:
        The validated configuration

    Raises:
        ConfigError: If the file cannot be read, parsed or validated
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")

    for key, value in (overrides or {}).items():
        if key == "strict":
            solver = data.get("solver") or {}
            if isinstance(solver, dict):
                data["solver"] = {**solver, "strict": value}
        else:
            data[key] = value
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(_format_validation_error(e)) from e


def _finite_or_none(value: Optional[float]) -> Optional[float]:
    return value if value is not None and math.isfinite(value) else None


def compute_bounds(config: RunConfig) -> dict[str, Any]:
    """Threshold bounds with the inputs they were evaluated at.

    The lower bound uses a numerical GNS estimate unless C_gns is configured,
    which makes it heuristic; `lower_is_heuristic` records that.
    """
    spec, d, th = config.nonlinearity, config.domain.d, config.thresholds
    xi = th.xi if th.xi is not None else find_xi_witness(spec)
    upper = alpha_upper_bound(spec, xi, d) if xi is not None else None

    C_F = growth_constant(spec, d, th.delta)
    C_gns = th.C_gns
    lower: Optional[float] = None
    heuristic = False
    if math.isfinite(C_F) and C_F > 0:
        if C_gns is None:
            C_gns = estimate_gns_constant(config.box, config.inequalities.trials, config.effective_seed).estimate
            heuristic = True
        lower = alpha_lower_bound(C_F, th.delta, th.eps, C_gns, d)
    elif math.isinf(C_F):
        # Mass-subcritical growth near zero only allows the trivial bound
        lower = 0.0

    return {
        "alpha_upper": upper,
        "alpha_lower": lower,
        "lower_is_heuristic": heuristic,
        "xi": xi,
        "C_F": _finite_or_none(C_F),
        "C_gns": C_gns,
        "delta": th.delta,
        "eps": th.eps,
        "criterion": mass_critical_criterion(spec, d),
    }


def _write(config: RunConfig, name: str, text: str) -> Path:
    path = atomic_write_text(Path(config.output_dir) / name, text)
    logger.info("Artifact written", extra={"path": str(path)})
    return path


def cmd_solve(config: RunConfig, app: Application) -> int:
    mass = config.require("mass", "solve")
    outcome = asyncio.run(app.solve(config.context(mass), config.solve_config))
    payload = outcome.best.to_json_dict()
    payload["field_csv"] = "field.csv"
    payload["starts"] = [r.to_json_dict() for r in outcome.results]
    _write(config, "field.csv", field_to_csv(outcome.best.u))
    _write(config, "solve.json", dump_json(payload))
    return EXIT_OK


def cmd_scan(config: RunConfig, app: Application) -> int:
    grid = config.require("mass_grid", "scan")
    th = config.thresholds
    ctx = config.context()
    scan = asyncio.run(app.scan(ctx, grid, config.solve_config, th.eps_neg))
    alpha = scan.alpha
    if alpha.status is AlphaStatus.BRACKETED and th.bisection_iters > 0:
        alpha = refine_alpha(ctx, config.solve_config, alpha, th.bisection_iters, th.width, th.eps_neg)

    bounds = compute_bounds(config)
    summary = {
        "alpha_bracket": [alpha.lower, alpha.upper],
        "alpha_status": alpha.status.value,
        "eps_neg": th.eps_neg,
        "bounds": {
            "upper": bounds["alpha_upper"],
            "lower": bounds["alpha_lower"],
            "lower_is_heuristic": bounds["lower_is_heuristic"],
        },
        "criterion": bounds["criterion"],
        "all_converged": all(scan.converged),
        "probes": [[a, e] for a, e in alpha.probes],
    }
    _write(config, "scan.csv", rows_to_csv(SCAN_CSV_HEADER, scan.rows()))
    _write(config, "summary.json", dump_json(summary))
    return EXIT_OK


def cmd_bounds(config: RunConfig, app: Application) -> int:
    _write(config, "bounds.json", dump_json(compute_bounds(config)))
    return EXIT_OK


def cmd_gns(config: RunConfig, app: Application) -> int:
    estimate = estimate_gns_constant(config.box, config.inequalities.trials, config.effective_seed)
    _write(config, "gns.json", dump_json(estimate.model_dump(mode="json")))
    return EXIT_OK


def cmd_hardy(config: RunConfig, app: Application) -> int:
    estimate = estimate_hardy_constant(config.box, config.inequalities.trials, config.effective_seed)
    payload = estimate.model_dump(mode="json")
    admissible = check_hardy_admissibility(
        config.potential, config.box, estimate.estimate, config.inequalities.hardy_eps
    )
    payload["potential_check"] = admissible.model_dump(mode="json")
    _write(config, "hardy.json", dump_json(payload))
    return EXIT_OK


def _adjacent_pairs(n: int) -> list[tuple[int, int]]:
    return [(i, i + 1) for i in range(n - 1)] + [(i, i) for i in range(n)]


def build_reports(config: RunConfig, app: Application) -> list[Report]:
    """Hypotheses, curve properties (with a mass grid) and inequality sweeps."""
    reports = [check_hypotheses(config.nonlinearity, config.potential, config.box)]

    if config.mass_grid:
        th = config.thresholds
        ctx = config.context()
        solve_config = config.solve_config
        scan = asyncio.run(app.scan(ctx, config.mass_grid, solve_config, th.eps_neg))
        pairs = _adjacent_pairs(len(scan.a_grid))
        probes = asyncio.run(
            app.solve_masses(ctx, probe_masses(scan, CURVE_THETAS, pairs), solve_config)
        )
        reports.append(verify_curve_properties(scan, ctx, probes, th.curve_tol, CURVE_THETAS, pairs))

        has_limit = not isinstance(config.potential, ZeroPotential) or config.nonlinearity.limit is not config.nonlinearity
        if has_limit:
            limit_scan = asyncio.run(app.scan(ctx.limit_context(), config.mass_grid, solve_config, th.eps_neg))
            reports.append(compare_with_limit(scan, limit_scan, th.curve_tol))

    iq = config.inequalities
    domains = {d: BoxDomain(d, iq.sweep_L) for d in iq.sweep_dims}
    reports.append(run_inequality_sweeps(domains, iq.sweep_fields, config.effective_seed))
    return reports


def cmd_verify(config: RunConfig, app: Application) -> int:
    reports = build_reports(config, app)
    passed = all(r.passed for r in reports)
    payload = {"passed": passed, "reports": [r.model_dump(mode="json") for r in reports]}
    _write(config, "verify.json", dump_json(payload))
    if not passed:
        failed = [f"{r.title}.{c.name}" for r in reports for c in r.failures()]
        raise VerificationError(f"hard checks failed: {', '.join(failed)}")
    return EXIT_OK


def cmd_evolve(config: RunConfig, app: Application) -> int:
    mass = config.require("mass", "evolve")
    outcome = asyncio.run(app.solve(config.context(mass), config.solve_config))
    best = outcome.best
    report = standing_wave_check(best.u, best.lam, config.potential, config.nonlinearity, config.evolution)
    payload = report.to_json_dict()
    payload.update({"E": best.E, "lambda": best.lam, "converged": best.converged, "scheme": config.evolution.scheme})
    _write(config, "trajectory.csv", trajectory_to_csv(report.trajectory))
    _write(config, "evolve.json", dump_json(payload))
    return EXIT_OK


COMMANDS: dict[str, tuple[Callable[[RunConfig, Application], int], str]] = {
    "solve": (cmd_solve, "minimize the energy at one mass"),
    "scan": (cmd_scan, "scan the energy curve over a mass grid and estimate the threshold"),
    "bounds": (cmd_bounds, "evaluate the analytic threshold bounds"),
    "gns": (cmd_gns, "estimate the mass-critical GNS constant"),
    "hardy": (cmd_hardy, "estimate the Hardy constant"),
    "verify": (cmd_verify, "run hypothesis, curve and inequality checks"),
    "evolve": (cmd_evolve, "evolve a ground state and check it is a standing wave"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=APP_NAME, description="Lattice NLS ground states and thresholds")
    parser.add_argument("--version", action="version", version=f"%(prog)s {APP_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (func, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default=None, help="output directory (overrides output_dir)")
        p.add_argument("--seed", type=int, default=None, help="random seed (overrides seed)")
        p.add_argument("--strict", action="store_true", help="fail on solver non-convergence")
        p.set_defaults(func=func)
    return parser


def run(argv: Optional[list[str]] = None) -> int:
    """Parse arguments, run one subcommand and map failures to exit codes."""
    args = build_parser().parse_args(argv)
    overrides: dict[str, Any] = {}
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.strict:
        overrides["strict"] = True

    try:
        config = load_config(args.config, overrides)
        logger.info(
            "Running command",
            extra={"command": args.command, "config": args.config, "output_dir": config.output_dir},
        )
        return args.func(config, Application())
    except LatticeNLSError as e:
        logger.error(f"{args.command} failed: {e}", extra={"exit_code": e.exit_code})
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


def main() -> None:
    load_dotenv()
    logging.basicConfig(
        level=os.getenv("LATTICE_NLS_LOG_LEVEL", LATTICE_NLS_LOG_LEVEL).upper(),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[logging.StreamHandler(sys.stdout)],
    )
    sys.exit(run())


if __name__ == "__main__":
    main()
