"""Application service fanning independent solves out to worker threads."""

import asyncio
import logging
from typing import Any, Callable, Optional, Sequence

from .constants import EPS_NEG
from .energy import EnergyContext
from .solver import SolveConfig, SolveOutcome, minimize_on_sphere
from .thresholds import ThresholdScan, build_scan
from .utils import get_max_workers

logger = logging.getLogger(__name__)


class Application:
    """Runs independent solves concurrently and merges them by index."""

    def __init__(self, max_workers: Optional[int] = None) -> None:
        """Initialize the application.

        Args:
            max_workers: Cap on concurrent solves (defaults to LATTICE_NLS_THREADS)
        """
        self.max_workers = max_workers or get_max_workers()
        self._loop: Optional[asyncio.AbstractEventLoop] = None
        self._semaphore: Optional[asyncio.Semaphore] = None

    def _limiter(self) -> asyncio.Semaphore:
        # One semaphore per event loop
        loop = asyncio.get_running_loop()
        if self._semaphore is None or self._loop is not loop:
            self._loop = loop
            self._semaphore = asyncio.Semaphore(self.max_workers)
        return self._semaphore

    async def _run(self, fn: Callable[..., Any], *args: Any) -> Any:
        async with self._limiter():
            return await asyncio.to_thread(fn, *args)

    async def _gather_ordered(self, calls: Sequence[tuple[Callable[..., Any], tuple]]) -> list[Any]:
        """Run calls concurrently; results keep call order, the first failure by index is raised."""
        results = await asyncio.gather(
            *(self._run(fn, *args) for fn, args in calls), return_exceptions=True
        )
        for result in results:
            if isinstance(result, BaseException):
                raise result
        return list(results)

    async def solve(self, ctx: EnergyContext, config: SolveConfig) -> SolveOutcome:
        return await self._run(minimize_on_sphere, ctx, config)

    async def solve_grid(
        self,
        ctx_template: EnergyContext,
        a_grid: Sequence[float],
        config: SolveConfig,
    ) -> list[SolveOutcome]:
        """Solve at every mass of `a_grid`.

        Args:
            ctx_template: Context whose mass is replaced per grid point
            a_grid: Masses to solve at
            config: Solver configuration shared by all points

        Returns:
            Outcomes in grid order, independent of scheduling
        """
        logger.info(
            "Solving mass grid",
            extra={"points": len(a_grid), "max_workers": self.max_workers},
        )
        calls = [(minimize_on_sphere, (ctx_template.with_mass(float(a)), config)) for a in a_grid]
        return await self._gather_ordered(calls)

    async def scan(
        self,
        ctx_template: EnergyContext,
        a_grid: Sequence[float],
        config: SolveConfig,
        eps_neg: float = EPS_NEG,
    ) -> ThresholdScan:
        outcomes = await self.solve_grid(ctx_template, a_grid, config)
        return build_scan(a_grid, outcomes, eps_neg)

    async def solve_masses(
        self,
        ctx_template: EnergyContext,
        masses: Sequence[float],
        config: SolveConfig,
    ) -> dict[float, float]:
        """Best energies at arbitrary (unsorted, possibly repeated) masses."""
        unique = sorted(set(float(a) for a in masses))
        outcomes = await self.solve_grid(ctx_template, unique, config)
        return {a: o.best.E for a, o in zip(unique, outcomes)}

    async def run_all(self, calls: Sequence[tuple[Callable[..., Any], tuple]]) -> list[Any]:
        """Run arbitrary independent blocking calls with the same cap and ordering."""
        return await self._gather_ordered(calls)
