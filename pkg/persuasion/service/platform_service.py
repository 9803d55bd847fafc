from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Optional

from persuasion.core.config import Settings
from persuasion.core.logging import get_logger
from persuasion.model.reports import BestResponseResult, EquilibriumReport, PoSResult
from persuasion.model.schemas import Grid, HyperplaneCertificate, Prior, SignalingPolicy, UtilityFunction
from persuasion.service.analysis_service import AnalysisService
from persuasion.service.best_response_service import BestResponseService
from persuasion.service.equilibrium_service import EquilibriumService
from persuasion.service.multi_receiver_service import MultiReceiverService
from persuasion.service.region_service import RegionService
from persuasion.service.simplex_service import SimplexSolver
from persuasion.service.sweep_service import SweepService, SweepSpec


logger = get_logger(__name__)


class PersuasionPlatform:
    """
    Wires the solver, constructors, verifier and sweeps from one Settings object.
    """

    def __init__(self, settings: Settings):
        self.settings = settings

        # Subsystems
        self.solver = SimplexSolver(
            tol=settings.LP_TOL,
            pivot_rule=settings.PIVOT_RULE,
            stall_factor=settings.BLAND_STALL_FACTOR,
        )
        self.best_responses = BestResponseService(self.solver, tie_tol=settings.TIE_TOL)
        self.regions = RegionService(scan_step=settings.SCAN_STEP, bisect_tol=settings.BISECT_TOL)
        self.equilibria = EquilibriumService(self.regions, fixture_pieces=settings.FIXTURE_PIECES)
        self.multi = MultiReceiverService(self.regions, newton_max_iter=settings.NEWTON_MAX_ITER)
        self.analysis = AnalysisService(
            self.best_responses,
            self.equilibria,
            self.multi,
            c1=settings.VERIFY_C1,
            c2=settings.VERIFY_C2,
            default_K=settings.DEFAULT_K,
        )
        self.sweeps = SweepService(workers=settings.SWEEP_WORKERS)
        logger.debug("Platform ready: %s", settings.model_dump())

    def grid(self, n: int, points: Optional[int] = None) -> Grid:
        return Grid(n=n, points_per_axis=points or self.settings.DEFAULT_GRID)

    # Construction flows
    def construct(self, family: str, prior: Prior, utility: UtilityFunction, mu: Optional[float] = None):
        return self.analysis.construct(family, prior, utility, mu)

    def example(self, fixture_id: str, pieces: Optional[int] = None):
        return self.equilibria.example_instance(fixture_id, pieces)

    # Verification flows
    def verify(
        self,
        policy: SignalingPolicy,
        prior: Prior,
        utility: UtilityFunction,
        grid_points: Optional[int] = None,
        K: Optional[int] = None,
        closed_form: Optional[HyperplaneCertificate] = None,
    ) -> EquilibriumReport:
        return self.analysis.verify_equilibrium(
            policy, prior, utility, self.grid(policy.n, grid_points), K or self.settings.DEFAULT_K, closed_form
        )

    def best_response(
        self,
        opponent: SignalingPolicy,
        prior: Prior,
        utility: UtilityFunction,
        grid_points: Optional[int] = None,
        K: Optional[int] = None,
    ) -> BestResponseResult:
        return self.best_responses.best_response(
            opponent, prior, utility, self.grid(opponent.n, grid_points), K or self.settings.DEFAULT_K
        )

    # Analysis flows
    def pos(
        self,
        family: str,
        prior: Prior,
        utility: UtilityFunction,
        parameter: Optional[float] = None,
        mu: Optional[float] = None,
    ) -> PoSResult:
        return self.analysis.pos_bound(family, prior, utility, parameter, mu)

    def region(self, target: str, lam: float, n: int = 2, scan_step: Optional[float] = None) -> List[dict]:
        regions = self.regions
        if scan_step is not None and scan_step != regions.scan_step:
            regions = RegionService(scan_step=scan_step, bisect_tol=self.settings.BISECT_TOL)
        return regions.region_rows(target, lam, n)

    def sweep(self, spec: SweepSpec, out_dir: Path | str) -> Dict[str, Path]:
        return self.sweeps.run(spec, out_dir)
