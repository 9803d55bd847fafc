"""Parameter sweeps behind the price-of-stability and feasibility-region figures.

A sweep file names one or more figures; each figure expands to a list of
independent tasks (one per parameter tuple) whose rows are collected in input
order and written as one CSV.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from persuasion.core.errors import PersuasionError
from persuasion.core.logging import get_logger
from persuasion.model.schemas import UtilityFunction
from persuasion.service.closed_forms import (
    multi_scalars,
    solve_mu_sup,
    sub_large_params,
    sub_large_welfare,
    sub_multi_even_params,
    sub_multi_even_welfare,
    sup_multi_params,
)
from persuasion.service.region_service import RegionService
from persuasion.utils.paths import ensure_dir


logger = get_logger(__name__)

CSV_FLOAT_FORMAT = "%.12g"


class Figure(str, Enum):
    SUP_POS_AND_MASS = "sup-pos-and-mass"
    SPECIAL_EQUILIBRIUM = "special-equilibrium-layout-mass-pos"
    POS_MULTI_SUP = "pos-multi-r-sup"
    POS_MULTI_SUB = "pos-multi-r-sub"
    TAU_MULTI_SUB = "tau-multi-r-sub"

    @property
    def filename(self) -> str:
        return self.value.replace("-", "_") + ".csv"


class Range(BaseModel):
    """Inclusive arithmetic range start, start + step, ..., stop."""

    model_config = ConfigDict(frozen=True)

    start: float
    stop: float
    step: float = Field(gt=0.0)

    @model_validator(mode="after")
    def check_order(self) -> "Range":
        if self.stop < self.start:
            raise ValueError(f"empty range: stop {self.stop} < start {self.start}")
        return self

    def values(self) -> List[float]:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9))
        return [round(self.start + i * self.step, 12) for i in range(count + 1)]


class FigureSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    figure: Figure
    lambdas: Range
    rhos: Optional[Range] = None
    taus: Optional[Range] = None
    ns: Tuple[int, ...] = (2,)

    @model_validator(mode="after")
    def check_axes(self) -> "FigureSpec":
        two_receiver = self.figure in (Figure.SUP_POS_AND_MASS, Figure.SPECIAL_EQUILIBRIUM)
        if two_receiver and self.rhos is None:
            raise ValueError(f"figure {self.figure.value} needs a rho range")
        if not two_receiver and self.taus is None:
            raise ValueError(f"figure {self.figure.value} needs a tau range")
        if any(n < 2 for n in self.ns):
            raise ValueError("receiver counts must be >= 2")
        return self


class SweepSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    figures: Tuple[FigureSpec, ...] = Field(min_length=1)
    workers: Optional[int] = Field(default=None, ge=1)
    scan_step: float = Field(default=1e-3, gt=0.0)
    bisect_tol: float = Field(default=1e-9, gt=0.0)

    @classmethod
    def from_file(cls, path: Path | str) -> "SweepSpec":
        return cls.model_validate_json(Path(path).read_text())


# Task functions run in worker processes; each takes one plain tuple.

Task = Tuple[float, ...]


def sup_pos_and_mass_task(task: Task) -> Dict[str, float]:
    lam, rho = task
    mu = solve_mu_sup(lam, rho)
    return {"lambda": lam, "rho": rho, "mu_s": mu, "pos_bound": 1.0 / (1.0 - mu * mu * (0.5 - rho))}


def special_equilibrium_task(task: Task) -> Dict[str, float]:
    lam, rho, scan_step, bisect_tol = task
    row = {"lambda": lam, "rho": rho, "feasible": False, "mu_lb": math.nan, "mu_ub": math.nan,
           "mu": math.nan, "pos_bound": math.nan}
    try:
        interval = RegionService(scan_step, bisect_tol).sub_feasible_interval(lam, rho)
    except PersuasionError as e:
        logger.warning("Skipping lambda=%.4g rho=%.4g: %s", lam, rho, e)
        return row
    if interval is None:
        return row
    params = sub_large_params(lam, rho, interval.lower)
    row.update(
        feasible=True,
        mu_lb=interval.lower,
        mu_ub=interval.upper,
        mu=interval.lower,
        pos_bound=2 * rho / sub_large_welfare(params),
    )
    return row


def pos_multi_sup_task(task: Task) -> Dict[str, float]:
    lam, tau, n = task
    utility = UtilityFunction.power(int(n), tau)
    params = sup_multi_params(lam, utility)
    vn = utility.v(int(n))
    return {
        "lambda": lam,
        "tau": tau,
        "n": int(n),
        "mu": params.mu,
        "R": params.R,
        "pos_bound": vn / (vn + params.mu**2 * params.R),
    }


def pos_multi_sub_task(task: Task) -> Dict[str, float]:
    lam, tau, n, scan_step, bisect_tol = task
    n = int(n)
    utility = UtilityFunction.power(n, tau)
    row = {"lambda": lam, "tau": tau, "n": n, "feasible": False, "mu": math.nan,
           "S": multi_scalars(utility, require_half=True).S, "pos_bound": math.nan}
    try:
        interval = RegionService(scan_step, bisect_tol).sub_multi_feasible_interval(lam, utility)
    except PersuasionError as e:
        logger.warning("Skipping lambda=%.4g tau=%.4g n=%d: %s", lam, tau, n, e)
        return row
    if interval is None:
        return row
    params = sub_multi_even_params(lam, utility, interval.lower)
    row.update(
        feasible=True,
        mu=interval.lower,
        pos_bound=2 * utility.v(n // 2) / sub_multi_even_welfare(params, utility),
    )
    return row


def tau_multi_sub_task(task: Task) -> Dict[str, float]:
    lam, n, tau, scan_step, bisect_tol = task
    n = int(n)
    row = {"lambda": lam, "n": n, "tau": tau, "feasible": False, "mu_lb": math.nan, "mu_ub": math.nan}
    try:
        interval = RegionService(scan_step, bisect_tol).sub_multi_feasible_interval(
            lam, UtilityFunction.power(n, tau)
        )
    except PersuasionError as e:
        logger.warning("Skipping lambda=%.4g n=%d tau=%.4g: %s", lam, n, tau, e)
        return row
    if interval is not None:
        row.update(feasible=True, mu_lb=interval.lower, mu_ub=interval.upper)
    return row


TASKS: Dict[Figure, Callable[[Task], Dict[str, float]]] = {
    Figure.SUP_POS_AND_MASS: sup_pos_and_mass_task,
    Figure.SPECIAL_EQUILIBRIUM: special_equilibrium_task,
    Figure.POS_MULTI_SUP: pos_multi_sup_task,
    Figure.POS_MULTI_SUB: pos_multi_sub_task,
    Figure.TAU_MULTI_SUB: tau_multi_sub_task,
}


def expand_tasks(fig: FigureSpec, scan_step: float, bisect_tol: float) -> List[Task]:
    lams = fig.lambdas.values()
    if fig.figure is Figure.SUP_POS_AND_MASS:
        return [(lam, rho) for lam in lams for rho in fig.rhos.values()]
    if fig.figure is Figure.SPECIAL_EQUILIBRIUM:
        return [(lam, rho, scan_step, bisect_tol) for lam in lams for rho in fig.rhos.values()]
    taus = fig.taus.values()
    if fig.figure is Figure.POS_MULTI_SUP:
        return [(lam, tau, float(n)) for lam in lams for tau in taus if tau > 1 for n in fig.ns]
    even = [n for n in fig.ns if n % 2 == 0]
    if fig.figure is Figure.POS_MULTI_SUB:
        return [(lam, tau, float(n), scan_step, bisect_tol) for lam in lams for tau in taus if tau <= 1 for n in even]
    return [(lam, float(n), tau, scan_step, bisect_tol) for lam in lams for n in even for tau in taus]


class SweepService:
    def __init__(self, workers: int = 1):
        self.workers = workers

    def run_figure(self, fig: FigureSpec, scan_step: float, bisect_tol: float, workers: int) -> pd.DataFrame:
        tasks = expand_tasks(fig, scan_step, bisect_tol)
        task_fn = TASKS[fig.figure]
        logger.info("Figure %s: %d tasks on %d worker(s)", fig.figure.value, len(tasks), workers)
        if workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                # map preserves input order
                rows = list(pool.map(task_fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
        else:
            rows = [task_fn(t) for t in tasks]
        return pd.DataFrame(rows)

    def run(self, spec: SweepSpec, out_dir: Path | str) -> Dict[str, Path]:
        out = ensure_dir(out_dir)
        workers = spec.workers or self.workers
        written: Dict[str, Path] = {}
        for fig in spec.figures:
            frame = self.run_figure(fig, spec.scan_step, spec.bisect_tol, workers)
            path = out / fig.figure.filename
            frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
            written[fig.figure.value] = path
            logger.info("Wrote %d rows to %s", len(frame), path)
        return written


def is_monotone(values: np.ndarray, increasing: bool = True, tol: float = 1e-12) -> bool:
    diffs = np.diff(np.asarray(values, dtype=float))
    return bool(np.all(diffs >= -tol)) if increasing else bool(np.all(diffs <= tol))
