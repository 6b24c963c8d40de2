"""Scheme comparison harness: exact variances and empirical RMSE over repeated runs."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import baselines, overlap
from .errors import PlanError
from .estimator import analytic_variance, fixed_list_estimate, rmse, unified_estimate
from .observable import Observable
from .records import simulate_list
from .sampler import FixedMeasurementList, draw_iid, partial_derandomize, plan_from_list
from .simulator import BornCache, StateVector, expectation

FORMAT_VERSION = 1
SCHEMES = ("l1", "ldf", "cs", "lbcs", "ogm-v1", "ogm-v2", "external")
DEFAULT_REPS = 100


def build_plan(scheme: str, obs: Observable, T: int = 1000, seed: int = 0, restarts: int = 10,
               prune: bool = True):
    """Plan for one of the named schemes (``external`` lists are handled by the caller)."""
    if scheme == "l1":
        return baselines.l1_plan(obs)
    if scheme == "ldf":
        return baselines.grouping_plan(baselines.ldf_grouping(obs), obs)
    if scheme == "cs":
        plan = baselines.cs_uniform_plan(obs.n)
        return baselines._with_diag(plan, obs)
    if scheme == "lbcs":
        return baselines.lbcs_optimize(obs, seed=seed)
    if scheme in ("ogm-v1", "ogm-v2"):
        return overlap.ogm_plan(obs, version=int(scheme[-1]), T=T, restarts=restarts, seed=seed, prune=prune)
    raise PlanError(f"unknown scheme {scheme!r}; choose from {SCHEMES[:-1]}")


@dataclass
class BenchmarkReport:
    n: int
    truth: float
    budgets: tuple
    reps: int
    seed: int
    mode: str
    rows: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "n": self.n,
            "truth": self.truth,
            "budgets": list(self.budgets),
            "reps": self.reps,
            "seed": self.seed,
            "mode": self.mode,
            "rows": self.rows,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_text(self) -> str:
        head = ["scheme", "groups", "diag_cost", "variance"] + [f"rmse@{T}" for T in self.budgets]
        lines = [f"truth = {self.truth:.10g}   reps = {self.reps}   mode = {self.mode}   seed = {self.seed}"]
        table = [head]
        for r in self.rows:
            groups = "-" if r["group_count"] is None else str(r["group_count"])
            table.append([r["scheme"], groups, f"{r['diag_cost']:.6g}", f"{r['analytic_variance']:.6g}"]
                         + [f"{r['rmse'][str(T)]:.6g}" for T in self.budgets])
        widths = [max(len(row[c]) for row in table) for c in range(len(head))]
        for row in table:
            lines.append("  ".join(cell.rjust(w) for cell, w in zip(row, widths)))
        return "\n".join(lines) + "\n"


def _one_run(plan, state, obs, T, seed, mode, cache, fixed=None):
    if fixed is not None:
        records = simulate_list(state, fixed, seed, cache)
        return fixed_list_estimate(records, obs).value
    rng = np.random.default_rng(seed)
    list_seed, shot_seed = rng.integers(0, 2 ** 63, size=2)
    if mode == "derand" and plan.kind != "product":
        mlist = partial_derandomize(plan, T, int(list_seed))
        return fixed_list_estimate(simulate_list(state, mlist, int(shot_seed), cache), obs).value
    mlist = draw_iid(plan, T, int(list_seed))
    return unified_estimate(simulate_list(state, mlist, int(shot_seed), cache), obs, plan).value


def run_benchmark(obs: Observable, state: StateVector, schemes=("ldf", "lbcs", "ogm-v1"),
                  budgets=(100, 1000, 10000), reps: int = DEFAULT_REPS, seed: int = 0,
                  mode: str = "iid", external: FixedMeasurementList = None, timings: bool = False,
                  plan_budget: int = 1000, restarts: int = 10) -> BenchmarkReport:
    """Compare schemes on one observable and state.

    Every (scheme, budget, repetition) triple gets its own seed derived from
    ``seed``, so rows do not depend on which other schemes were requested.

    Args:
        mode: ``"iid"`` draws bases independently and uses the unified
            estimator. ``"derand"`` uses partially derandomized lists and the
            fixed-list estimator for plans with explicit groups.
        external: a fixed list of bases, reported as the ``external`` row
            and re-measured as is in every repetition.
        timings: add per-phase wall times to each row. Off by default so
            that reports are byte-reproducible.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if mode not in ("iid", "derand"):
        raise ValueError(f"unknown mode {mode!r}")
    budgets = tuple(sorted(int(T) for T in budgets))
    if not budgets or budgets[0] < 1:
        raise ValueError("budgets must be positive integers")
    schemes = list(schemes)
    if external is not None and "external" not in schemes:
        schemes.append("external")
    truth = expectation(state, obs)
    cache = BornCache(state)
    report = BenchmarkReport(obs.n, truth, budgets, reps, seed, mode)
    for scheme in schemes:
        if scheme not in SCHEMES:
            raise PlanError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
        code = SCHEMES.index(scheme)
        t0 = time.perf_counter()
        if scheme == "external":
            if external is None:
                raise PlanError("scheme 'external' needs a measurement list")
            plan = plan_from_list(external, obs)
        else:
            plan = build_plan(scheme, obs, T=plan_budget, seed=seed, restarts=restarts)
        t_plan = time.perf_counter() - t0
        variance = analytic_variance(plan, obs, state, allow_uncovered=True)
        diag = overlap.diag_cost(plan, obs)
        row = {
            "scheme": scheme,
            "group_count": None if plan.kind == "product" else len(plan.groups),
            "diag_cost": diag,
            "analytic_variance": variance,
            "bias_bound": plan.diagnostics.uncovered_bias_bound if plan.diagnostics else 0.0,
            "rmse": {},
        }
        t1 = time.perf_counter()
        for T in budgets:
            fixed = external if scheme == "external" else None
            if fixed is not None and T != external.total:
                # a fixed list has one budget; other columns scale it proportionally
                fixed = partial_derandomize(plan, T, seed=int(np.random.default_rng([seed, code, T]).integers(2 ** 31)))
            est = [
                _one_run(plan, state, obs, T, [seed, code, T, r], mode, cache, fixed)
                for r in range(reps)
            ]
            row["rmse"][str(T)] = rmse(est, truth)
        if timings:
            row["wall_time"] = {"plan": t_plan, "runs": time.perf_counter() - t1}
        report.rows.append(row)
    return report
