"""Estimators, their exact variances and closed-form variance bounds.

The single-shot estimator for a drawn basis ``P`` with outcome ``mu`` is

    v = sum_j coeff_j * f(P, Q_j, K) * prod_{i in supp Q_j} mu_i

with ``f`` fixed by the plan (see :mod:`ogm.plan`). The fixed-list estimator
instead averages, per term, every shot whose basis covers the term.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DimensionError, PlanError
from .observable import Observable, l1_norm, locality
from .plan import PRODUCT_LETTERS, MeasurementPlan, chi, f_matrix, usable_matrix
from .records import simulate_list
from .simulator import BornCache, StateVector

FORMAT_VERSION = 1
BOUND_KINDS = ("l1", "grouping", "cs", "diag")


@dataclass(frozen=True)
class EstimateReport:
    value: float
    shots_used: int
    per_term_coverage: tuple
    bias_bound: float = 0.0
    warnings: tuple = field(default_factory=tuple)

    def to_dict(self, obs: Observable = None) -> dict:
        cov = list(self.per_term_coverage)
        if obs is not None:
            cov = {t.pauli.text: int(s) for t, s in zip(obs.terms, self.per_term_coverage)}
        return {
            "format_version": FORMAT_VERSION,
            "value": self.value,
            "shots_used": self.shots_used,
            "per_term_coverage": cov,
            "bias_bound": self.bias_bound,
            "warnings": list(self.warnings),
        }


def _check_scheme(plan: MeasurementPlan, scheme):
    if scheme is not None and scheme != plan.scheme:
        raise PlanError(f"plan was built for scheme {plan.scheme!r}, not {scheme!r}")


def f_value(plan: MeasurementPlan, basis, term, scheme: str = None) -> float:
    """Weight given to term ``term`` by one shot in ``basis`` under ``plan``."""
    _check_scheme(plan, scheme)
    return float(f_matrix(plan, [term], [basis])[0, 0])


def _stack(records):
    return (
        np.concatenate([r.outcomes for r in records]),
        np.concatenate([r.counts for r in records]),
    )


def _shot_sums(records, obs: Observable) -> np.ndarray:
    """``S[b, j]``: sum over the shots of record ``b`` of the parity of term ``j``."""
    supps = np.array([q.support_mask for q in obs.paulis], dtype=np.uint64)
    return np.stack([kernels.parity_sums(r.outcomes, r.counts, supps) for r in records])


def _check_records(records, obs):
    if not records:
        raise PlanError("no measurement records")
    for r in records:
        if r.basis.n != obs.n:
            raise DimensionError(f"record basis {r.basis.text} does not act on {obs.n} qubits")


def _uncovered_warnings(obs, coverage):
    msgs = []
    for t, s in zip(obs.terms, coverage):
        if s == 0:
            msgs.append(f"term {t.pauli.text} (coeff {t.coeff!r}) was never measured; its contribution is set to 0")
    return msgs


def unified_estimate(records, obs: Observable, plan: MeasurementPlan, scheme: str = None) -> EstimateReport:
    """Mean single-shot estimate over i.i.d. records drawn from ``plan``, plus the offset."""
    _check_scheme(plan, scheme)
    _check_records(records, obs)
    if plan.n != obs.n:
        raise DimensionError(f"plan acts on {plan.n} qubits, observable on {obs.n}")
    shots = np.array([r.shots for r in records], dtype=np.int64)
    total = int(shots.sum())
    if total == 0:
        raise PlanError("records hold no shots")
    if obs.m == 0:
        return EstimateReport(obs.offset, total, (), 0.0, ())
    bases = [r.basis for r in records]
    F = f_matrix(plan, obs.paulis, bases)
    S = _shot_sums(records, obs)
    value = float(np.sum(F * S, axis=0) @ obs.coeffs) / total + obs.offset
    coverage = usable_matrix(plan, obs.paulis, bases).astype(np.int64).T @ shots
    c = chi(plan, obs.paulis)
    warnings = []
    never = c <= 0
    bias = float(np.abs(obs.coeffs[never]).sum())
    if plan.diagnostics is not None:
        bias = max(bias, plan.diagnostics.uncovered_bias_bound)
    for t in (t for t, off in zip(obs.terms, never) if off):
        warnings.append(f"term {t.pauli.text} has zero measurement probability under the plan; estimate is biased")
    return EstimateReport(value, total, tuple(int(s) for s in coverage), bias, tuple(warnings))


def fixed_list_estimate(records, obs: Observable) -> EstimateReport:
    """Per-term average over every shot whose basis covers the term.

    Terms that no shot covers contribute 0 and produce a warning; the report's
    ``bias_bound`` is then the sum of their ``|coeff|``.
    """
    _check_records(records, obs)
    shots = np.array([r.shots for r in records], dtype=np.int64)
    total = int(shots.sum())
    if total == 0:
        raise PlanError("records hold no shots")
    if obs.m == 0:
        return EstimateReport(obs.offset, total, (), 0.0, ())
    cov = kernels.cover_matrix(obs.paulis, [r.basis for r in records])
    S = _shot_sums(records, obs)
    sums = np.sum(np.where(cov.T, S, 0.0), axis=0)
    s = cov.astype(np.int64) @ shots
    seen = s > 0
    per_term = np.zeros(obs.m)
    per_term[seen] = sums[seen] / s[seen]
    value = float(per_term @ obs.coeffs) + obs.offset
    bias = float(np.abs(obs.coeffs[~seen]).sum())
    return EstimateReport(value, total, tuple(int(v) for v in s), bias, tuple(_uncovered_warnings(obs, s)))


# ------------------------------------------------------------ exact variance

def _pair_products(state: StateVector, obs: Observable, mask: np.ndarray) -> np.ndarray:
    """``E[j, k] = <Q_j Q_k>`` where ``mask`` is set; those pairs must agree on shared support."""
    x, z = kernels.pauli_masks(obs.paulis)
    both = (x | z)[:, None] & (x | z)[None, :]
    clash = ((x[:, None] ^ x[None, :]) | (z[:, None] ^ z[None, :])) & both
    if np.any(clash[mask] != 0):
        raise PlanError("a basis credits two terms that disagree on shared qubits")
    out = np.zeros(mask.shape)
    cache = {}
    for j, k in zip(*np.nonzero(mask)):
        if k < j:
            continue
        key = (int(x[j] ^ x[k]), int(z[j] ^ z[k]))
        v = cache.get(key)
        if v is None:
            v = kernels.pauli_expectation(state.amplitudes, *key).real
            cache[key] = v
        out[j, k] = out[k, j] = v
    return out


def _expectations(state, obs):
    return np.array([kernels.pauli_expectation(state.amplitudes, q.x, q.z).real for q in obs.paulis])


def _product_gram(plan: MeasurementPlan, obs: Observable) -> np.ndarray:
    """``G[j, k] = E[f_j f_k]`` for a product-form plan."""
    m = obs.m
    g = np.ones((m, m))
    letters = np.full((m, obs.n), -1)
    for j, q in enumerate(obs.paulis):
        for i in range(obs.n):
            c = q.letter(i)
            if c != "I":
                letters[j, i] = PRODUCT_LETTERS.index(c)
    for i in range(obs.n):
        col = letters[:, i]
        both = (col[:, None] >= 0) & (col[None, :] >= 0)
        same = col[:, None] == col[None, :]
        with np.errstate(divide="ignore"):
            inv = np.where(col >= 0, 1.0 / plan.product_dist[i, np.maximum(col, 0)], 1.0)
        g *= np.where(both, np.where(same, inv[:, None], 0.0), 1.0)
    return g


def _gram(plan: MeasurementPlan, obs: Observable) -> np.ndarray:
    """``G[j, k] = E_P[f(P, Q_j) f(P, Q_k)]``."""
    if plan.kind == "product":
        return _product_gram(plan, obs)
    F = f_matrix(plan, obs.paulis, plan.bases)
    return F.T @ (plan.probabilities[:, None] * F)


def analytic_variance(plan: MeasurementPlan, obs: Observable, state: StateVector,
                      allow_uncovered: bool = False) -> float:
    """Exact variance of the single-shot estimator (the offset does not contribute).

    Args:
        allow_uncovered: accept terms the plan never measures. They are
            left out of both moments, so the result is the variance of the
            (biased) estimator actually run.
    """
    if state.n != obs.n or plan.n != obs.n:
        raise DimensionError("plan, observable and state must act on the same qubit count")
    if obs.m == 0:
        return 0.0
    c = chi(plan, obs.paulis)
    on = c > 0
    if not on.all() and not allow_uncovered:
        missing = ", ".join(t.pauli.text for t, ok in zip(obs.terms, on) if not ok)
        raise PlanError(f"terms with zero measurement probability: {missing}")
    g = _gram(plan, obs)
    g[~on, :] = 0.0
    g[:, ~on] = 0.0
    g[np.isinf(g)] = 0.0
    prod = _pair_products(state, obs, g != 0)
    a = obs.coeffs
    second = float(a @ (g * prod) @ a)
    mean = float(a[on] @ _expectations(state, obs)[on])
    return max(second - mean * mean, 0.0)


# ------------------------------------------------------------ bounds

def variance_bounds(obs: Observable, kind: str, plan: MeasurementPlan = None,
                    eps: float = None, delta: float = None) -> dict:
    """Closed-form single-shot variance bound and, optionally, a Chebyshev budget.

    Args:
        kind: ``"l1"`` gives ``||a||_1^2``; ``"grouping"`` gives
            ``||a||_1^2 (sum_k ||a_{e_k}||_1^{-1} sum_{j in e_k} |a_j|)^2``
            over the plan's groups; ``"cs"`` gives
            ``3^locality (sum_j |a_j|)^2``; ``"diag"`` gives
            ``m * diag_cost(plan)``, valid for every plan.
        plan: required for ``"grouping"`` and ``"diag"``.
        eps, delta: when both are given, ``budget`` is the smallest integer
            ``T >= bound / (delta * eps^2)``.
    """
    if kind not in BOUND_KINDS:
        raise ValueError(f"unknown bound kind {kind!r}; choose from {BOUND_KINDS}")
    norm = l1_norm(obs)
    if kind == "l1":
        bound = norm ** 2
    elif kind == "cs":
        bound = 3.0 ** locality(obs) * norm ** 2
    else:
        if plan is None:
            raise PlanError(f"the {kind!r} bound needs a plan")
        if kind == "grouping":
            if plan.kind != "member":
                raise PlanError("the grouping bound applies to non-overlapping grouping plans")
            # with coefficients entering by magnitude every group's ratio is one
            bound = norm ** 2 * len(plan.groups) ** 2
        else:
            c = chi(plan, obs.paulis)
            bound = math.inf if np.any(c <= 0) else obs.m * float(np.sum(obs.coeffs ** 2 / c))
    out = {"kind": kind, "bound": float(bound)}
    if eps is not None and delta is not None:
        out["budget"] = chebyshev_budget(bound, eps, delta)
    return out


def chebyshev_budget(variance: float, eps: float, delta: float) -> int:
    """Smallest ``T`` with ``variance / (T eps^2) <= delta``."""
    if not (eps > 0 and 0 < delta <= 1):
        raise ValueError("need eps > 0 and 0 < delta <= 1")
    if math.isinf(variance):
        raise ValueError("variance bound is infinite")
    return max(1, math.ceil(variance / (delta * eps * eps) - 1e-9))


# ------------------------------------------------------------ fixed lists

def fixed_list_variance(mlist, obs: Observable, state: StateVector, mode: str = "analytic",
                        reps: int = 1000, seed: int = 0) -> float:
    """Variance of :func:`fixed_list_estimate` for a given list of bases.

    ``"analytic"`` assembles ``sum_k M_k sum_{j,j'} a_j a_j' Cov_1(j, j') / (s_j s_j')``
    with the single-shot covariance ``<Q_j Q_j'> - <Q_j><Q_j'>`` over pairs
    both covered by basis ``k``. ``"montecarlo"`` returns the sample variance
    of ``reps`` seeded estimates.
    """
    if mode not in ("analytic", "montecarlo"):
        raise ValueError(f"unknown mode {mode!r}")
    if state.n != obs.n or mlist.n != obs.n:
        raise DimensionError("list, observable and state must act on the same qubit count")
    if not mlist.entries:
        raise PlanError("measurement list is empty")
    if obs.m == 0:
        return 0.0
    if mode == "montecarlo":
        if reps < 2:
            raise ValueError("montecarlo mode needs reps >= 2")
        cache = BornCache(state)
        seeds = np.random.SeedSequence(seed).spawn(reps)
        vals = [fixed_list_estimate(simulate_list(state, mlist, s, cache), obs).value for s in seeds]
        return float(np.var(vals, ddof=1))
    cov = kernels.cover_matrix(obs.paulis, mlist.bases).astype(float)
    shots = mlist.shots.astype(float)
    s = cov @ shots
    w = (cov * shots[None, :]) @ cov.T
    a = np.where(s > 0, obs.coeffs / np.where(s > 0, s, 1.0), 0.0)
    mean = _expectations(state, obs)
    single = _pair_products(state, obs, w > 0) - np.outer(mean, mean)
    return max(float(a @ (w * single) @ a), 0.0)


def rmse(estimates, truth: float) -> float:
    """Root-mean-square deviation of ``estimates`` from ``truth``."""
    e = np.asarray(estimates, dtype=float)
    if e.size == 0:
        raise ValueError("rmse needs at least one estimate")
    return float(np.sqrt(np.mean((e - truth) ** 2)))


def report_json(report: EstimateReport, obs: Observable = None, **extra) -> str:
    d = report.to_dict(obs)
    d.update(extra)
    return json.dumps(d, indent=2) + "\n"
