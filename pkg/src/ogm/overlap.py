"""Overlapped grouping: set generation, cost functions and the distribution optimiser.

Sets are seeded greedily by term weight and may share terms. A term ``Q``
then draws on every basis that covers it, at the rate
``chi(Q) = sum_{P covers Q} K(P)``, and the distribution ``K`` is tuned to
minimise ``sum_j coeff_j^2 / chi(Q_j)`` plus a penalty ``coeff_j^2 * T`` for
terms that pruning leaves uncovered.
"""
from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
from scipy.optimize import minimize

from . import kernels
from .baselines import _require_terms
from .errors import PlanError
from .observable import Observable
from .pauli import compatible, join
from .plan import Group, MeasurementPlan, PlanDiagnostics, chi as _plan_chi

DEFAULT_RESTARTS = 10
KICK_SIZE = 1e-2
KICK_TRIES = 3
# groups below this fraction of the largest weight are tried at exactly zero
VANISHING = 1e-3


def token_budget(obs: Observable) -> np.ndarray:
    """``U_k = 2**(d-1)``, ``d`` the decimal digit count of ``floor(|a_k| / min_j |a_j|)``."""
    _require_terms(obs)
    a = np.abs(obs.coeffs)
    lo = a.min()
    out = np.empty(obs.m, dtype=np.int64)
    for k, v in enumerate(a):
        ratio = math.floor(v / lo)
        out[k] = 2 ** (len(str(ratio)) - 1)
    return out


def _finish_sets(obs, bases, weights):
    """Membership = every term the final basis covers; identical bases are merged."""
    paulis = obs.paulis
    cov = kernels.cover_matrix(paulis, bases)
    merged = {}
    for s, (b, w) in enumerate(zip(bases, weights)):
        if b in merged:
            merged[b][1] += w
        else:
            merged[b] = [s, w]
    groups, k = [], []
    for b, (s, w) in merged.items():
        members = tuple(paulis[j] for j in np.flatnonzero(cov[:, s]))
        groups.append(Group(members, b, float(sum(abs(obs.terms[obs.index_of(q)].coeff) for q in members))))
        k.append(w)
    k = np.array(k, dtype=float)
    return groups, k / k.sum()


def overlapped_sets_v1(obs: Observable):
    """Greedy overlapped sets seeded by the heaviest term not yet in any set.

    Returns ``(groups, initial_probabilities)``. The initial weight of a set
    is the summed ``|coeff|`` of its seed and the later terms it absorbed,
    before the pass over earlier terms.
    """
    _require_terms(obs)
    paulis = obs.paulis
    m = obs.m
    absolute = np.abs(obs.coeffs)
    placed = np.zeros(m, dtype=bool)
    bases, weights = [], []
    while not placed.all():
        j = int(np.flatnonzero(~placed)[0])
        placed[j] = True
        basis = paulis[j]
        members = [j]
        for k in range(j + 1, m):
            if compatible(paulis[k], basis):
                members.append(k)
                placed[k] = True
                basis = join(basis, paulis[k])
        weights.append(float(absolute[members].sum()))
        for k in range(j):
            if compatible(paulis[k], basis):
                basis = join(basis, paulis[k])
        bases.append(basis)
    return _finish_sets(obs, bases, weights)


def overlapped_sets_v2(obs: Observable, tokens=None, return_counts: bool = False):
    """Token-bounded variant: every term is scanned, but may join new sets only ``U_k`` times.

    With ``return_counts`` the per-term appearance counts of the token phase
    are returned as a third element.
    """
    _require_terms(obs)
    paulis = obs.paulis
    m = obs.m
    absolute = np.abs(obs.coeffs)
    tokens = token_budget(obs) if tokens is None else np.asarray(tokens)
    count = np.zeros(m, dtype=np.int64)
    bases, weights = [], []
    while (count == 0).any():
        j = int(np.flatnonzero(count == 0)[0])
        count[j] += 1
        basis = paulis[j]
        members = {j}
        for k in range(m):
            if k != j and count[k] < tokens[k] and compatible(paulis[k], basis):
                members.add(k)
                count[k] += 1
                basis = join(basis, paulis[k])
        weights.append(float(absolute[sorted(members)].sum()))
        for k in range(j):
            if k not in members and compatible(paulis[k], basis):
                members.add(k)
                basis = join(basis, paulis[k])
        bases.append(basis)
    groups, k = _finish_sets(obs, bases, weights)
    if return_counts:
        return groups, k, count
    return groups, k


def chi(term_index: int, plan: MeasurementPlan, obs: Observable) -> float:
    return float(_plan_chi(plan, [obs.terms[term_index].pauli])[0])


def diag_cost(plan: MeasurementPlan, obs: Observable) -> float:
    """``sum_j coeff_j^2 / chi(Q_j)``; ``inf`` if some term is never measured."""
    c = _plan_chi(plan, obs.paulis)
    if np.any(c <= 0):
        return math.inf
    return float(np.sum(obs.coeffs ** 2 / c))


def final_cost(plan: MeasurementPlan, obs: Observable, T: float) -> float:
    """Diagonal cost over measured terms plus ``coeff^2 * T`` for the rest."""
    if not T >= 1:
        raise PlanError(f"sample budget T must be >= 1, got {T!r}")
    c = _plan_chi(plan, obs.paulis)
    w2 = obs.coeffs ** 2
    on = c > 0
    return float(np.sum(w2[on] / c[on]) + T * np.sum(w2[~on]))


class _Cost:
    """Penalised diagonal cost on the simplex, parametrised by softmax logits."""

    def __init__(self, cover, w2, T):
        self.full_cover, self.full_w2, self.T = cover, w2, T
        self.cover = cover.astype(float)
        on = cover.any(axis=1)
        self.w2 = w2[on]
        self.cover = self.cover[on]
        self.penalty = float(T * np.sum(w2[~on]))

    def of_k(self, k):
        c = self.cover @ k
        if np.any(c <= 0):
            return math.inf
        return float(np.sum(self.w2 / c) + self.penalty)

    def of_logits(self, theta):
        z = theta - theta.max()
        e = np.exp(z)
        k = e / e.sum()
        c = self.cover @ k
        c = np.maximum(c, 1e-300)
        val = float(np.sum(self.w2 / c) + self.penalty)
        g = -(self.cover.T @ (self.w2 / c ** 2))
        return val, k * (g - k @ g)


def _logits(k):
    return np.log(np.maximum(k, 1e-300))


def _softmax(theta):
    e = np.exp(theta - theta.max())
    return e / e.sum()


def _local_minimize(cost, k0, ftol=1e-8, maxiter=5000):
    res = minimize(cost.of_logits, _logits(k0), jac=True, method="L-BFGS-B",
                   options={"ftol": ftol, "gtol": 1e-14, "maxiter": maxiter})
    k = _softmax(res.x)
    val = cost.of_k(k)
    if cost.of_k(k0) <= val:
        return np.asarray(k0, dtype=float), cost.of_k(k0), int(res.nit)
    return k, val, int(res.nit)


def _drop_vanishing(cost, k, val):
    # softmax logits only reach a face of the simplex asymptotically
    active = k > 0
    while True:
        small = active & (k < VANISHING * k.max())
        if not small.any():
            return k, val
        keep = active & ~small
        # uncovering terms is left to pruning
        if not np.array_equal(cost.full_cover[:, keep].any(axis=1), cost.full_cover[:, active].any(axis=1)):
            return k, val
        sub = _Cost(cost.full_cover[:, keep], cost.full_w2, cost.T)
        k_sub, val_sub, _ = _local_minimize(sub, k[keep] / k[keep].sum())
        if val_sub >= val:
            return k, val
        k = np.zeros_like(k)
        k[keep] = k_sub
        val, active = val_sub, keep


def _assemble(groups, k, obs, T, iterations):
    k = np.asarray(k, dtype=float)
    k = k / k.sum()
    plan = MeasurementPlan("ogm", obs.n, tuple(groups), k)
    c = _plan_chi(plan, obs.paulis)
    uncovered = tuple(t.pauli for t, ci in zip(obs.terms, c) if ci <= 0)
    on = c > 0
    w2 = obs.coeffs ** 2
    diag = float(np.sum(w2[on] / c[on]))
    diagnostics = PlanDiagnostics(
        diag_cost=diag,
        final_cost=float(diag + T * np.sum(w2[~on])),
        uncovered_bias_bound=float(np.sum(np.abs(obs.coeffs[~on]))),
        group_count=len(groups),
        optimizer_iterations=iterations,
    )
    return replace(plan, uncovered=uncovered, diagnostics=diagnostics)


def optimize_distribution(groups, obs: Observable, T: float = 1000, restarts: int = DEFAULT_RESTARTS,
                          seed: int = 0, initial=None) -> MeasurementPlan:
    """Choose ``K`` over fixed overlapped groups by minimising the penalised cost.

    Candidates are the initial weights and ``restarts`` perturbations drawn
    uniformly from ``[w_s, w_s + max(w)]`` per group. The cheapest candidate
    is refined by L-BFGS on softmax logits, then kicked ``KICK_TRIES`` times
    by a relative ``KICK_SIZE`` and refined again; the best point is kept.
    Groups left with negligible weight are finally tried at exactly zero.
    ``initial`` defaults to the groups' l1 weights.
    """
    groups = list(groups)
    if not groups:
        raise PlanError("no groups to optimise")
    if not T >= 1:
        raise PlanError(f"sample budget T must be >= 1, got {T!r}")
    if initial is None:
        initial = np.array([g.weight for g in groups], dtype=float)
    w = np.asarray(initial, dtype=float)
    if w.sum() <= 0:
        w = np.ones(len(groups))
    cover = kernels.cover_matrix(obs.paulis, [g.basis for g in groups])
    cost = _Cost(cover, obs.coeffs ** 2, T)

    seeds = np.random.SeedSequence(seed).spawn(restarts + 1)
    candidates = [w / w.sum()]
    for ss in seeds[:restarts]:
        rng = np.random.default_rng(ss)
        draw = rng.uniform(w, w + w.max())
        candidates.append(draw / draw.sum())
    start = min(candidates, key=cost.of_k)

    k, val, iters = _local_minimize(cost, start)
    rng = np.random.default_rng(seeds[-1])
    for _ in range(KICK_TRIES):
        kicked = k * (1.0 + KICK_SIZE * rng.standard_normal(k.size))
        kicked = np.clip(kicked, 1e-300, None)
        k2, val2, it2 = _local_minimize(cost, kicked / kicked.sum())
        iters += it2
        if val2 < val:
            k, val = k2, val2
    k, val = _drop_vanishing(cost, k, val)
    return _assemble(groups, k, obs, T, iters)


def prune_groups(plan: MeasurementPlan, obs: Observable, T: float = 1000) -> MeasurementPlan:
    """Drop the least likely group while the re-optimised penalised cost strictly falls."""
    if plan.kind != "cover":
        raise PlanError("pruning applies to overlapped (cover-weighted) plans")
    live = np.flatnonzero(plan.probabilities > 0)
    groups = [plan.groups[i] for i in live]
    k = np.array(plan.probabilities[live], dtype=float)
    current = final_cost(plan, obs, T)
    iterations = plan.diagnostics.optimizer_iterations if plan.diagnostics else 0
    while len(groups) > 1:
        drop = int(np.lexsort((-np.arange(len(k)), k))[0])
        keep = [i for i in range(len(groups)) if i != drop]
        cand_groups = [groups[i] for i in keep]
        k0 = k[keep]
        k0 = k0 / k0.sum() if k0.sum() > 0 else np.full(len(keep), 1.0 / len(keep))
        cover = kernels.cover_matrix(obs.paulis, [g.basis for g in cand_groups])
        cost = _Cost(cover, obs.coeffs ** 2, T)
        k1, val, it = _local_minimize(cost, k0)
        iterations += it
        if not val < current:
            break
        groups, k, current = cand_groups, k1, val
    return _assemble(groups, k, obs, T, iterations)


def ogm_plan(obs: Observable, version: int = 1, T: float = 1000, restarts: int = DEFAULT_RESTARTS,
             seed: int = 0, prune: bool = True) -> MeasurementPlan:
    """Set generation, distribution optimisation and (optionally) pruning in one call."""
    if version == 1:
        groups, k0 = overlapped_sets_v1(obs)
    elif version == 2:
        groups, k0 = overlapped_sets_v2(obs)
    else:
        raise PlanError(f"unknown set generation version {version!r}")
    plan = optimize_distribution(groups, obs, T=T, restarts=restarts, seed=seed, initial=k0)
    if prune:
        plan = prune_groups(plan, obs, T=T)
    return plan
