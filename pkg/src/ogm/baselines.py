"""Reference schemes: l1 sampling, LDF grouping and (locally biased) classical shadows."""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from . import kernels
from .errors import EmptyPlanError, PlanError
from .observable import Observable, l1_norm
from .pauli import PauliString, join
from .plan import Group, MeasurementPlan, PlanDiagnostics, PRODUCT_LETTERS


def _require_terms(obs: Observable):
    if obs.m == 0:
        raise EmptyPlanError("observable has no terms to measure")


def _diagnostics(plan, obs, iterations=0):
    from .overlap import diag_cost

    d = diag_cost(plan, obs)
    return PlanDiagnostics(d, d, 0.0, len(plan.groups), iterations)


def l1_plan(obs: Observable) -> MeasurementPlan:
    """One group per term, drawn with probability ``|coeff| / ||coeff||_1``."""
    _require_terms(obs)
    norm = l1_norm(obs)
    groups = tuple(Group((t.pauli,), t.pauli, abs(t.coeff)) for t in obs.terms)
    k = np.array([abs(t.coeff) / norm for t in obs.terms])
    plan = MeasurementPlan("l1", obs.n, groups, k)
    return _with_diag(plan, obs)


def _with_diag(plan, obs, iterations=0):
    return replace(plan, diagnostics=_diagnostics(plan, obs, iterations))


def ldf_grouping(obs: Observable) -> list:
    """Largest-degree-first greedy colouring of the incompatibility graph.

    Vertices are visited by descending number of incompatible partners, ties
    in canonical term order; each goes to the first group with which it has
    no conflict.
    """
    _require_terms(obs)
    paulis = obs.paulis
    conflict = ~kernels.compatibility_matrix(paulis)
    degree = conflict.sum(axis=1)
    order = sorted(range(obs.m), key=lambda j: (-int(degree[j]), j))
    members = []
    for j in order:
        for grp in members:
            if not conflict[j, grp].any():
                grp.append(j)
                break
        else:
            members.append([j])
    groups = []
    for grp in members:
        basis = paulis[grp[0]]
        for j in grp[1:]:
            basis = join(basis, paulis[j])
        weight = float(sum(abs(obs.terms[j].coeff) for j in grp))
        groups.append(Group(tuple(paulis[j] for j in grp), basis, weight))
    return groups


def grouping_plan(groups, obs: Observable, scheme: str = "ldf") -> MeasurementPlan:
    """Non-overlapping grouping with ``K_j`` proportional to the group l1 weight."""
    _require_terms(obs)
    seen = {}
    for gi, g in enumerate(groups):
        for q in g.members:
            if q not in obs:
                raise PlanError(f"group member {q.text} is not a term of the observable")
            if q in seen:
                raise PlanError(f"term {q.text} appears in groups {seen[q]} and {gi}; groups must not overlap")
            seen[q] = gi
    missing = [t.pauli.text for t in obs.terms if t.pauli not in seen]
    if missing:
        raise PlanError(f"terms not assigned to any group: {', '.join(missing)}")
    norm = l1_norm(obs)
    weights = [sum(abs(obs.terms[obs.index_of(q)].coeff) for q in g.members) for g in groups]
    groups = tuple(Group(tuple(g.members), g.basis, float(w)) for g, w in zip(groups, weights))
    plan = MeasurementPlan(scheme, obs.n, groups, np.array(weights) / norm)
    return _with_diag(plan, obs)


def cs_uniform_plan(n: int) -> MeasurementPlan:
    return MeasurementPlan("cs-uniform", n, product_dist=np.full((n, 3), 1.0 / 3.0))


def _letter_table(obs: Observable) -> np.ndarray:
    """``L[j, i]`` in {-1 (I), 0 (X), 1 (Y), 2 (Z)}."""
    table = np.full((obs.m, obs.n), -1, dtype=np.int8)
    for j, t in enumerate(obs.terms):
        for i in range(obs.n):
            c = t.pauli.letter(i)
            if c != "I":
                table[j, i] = PRODUCT_LETTERS.index(c)
    return table


def _product_chi(dist, table):
    out = np.ones(table.shape[0])
    for i in range(table.shape[1]):
        col = table[:, i]
        used = col >= 0
        out[used] *= dist[i, col[used]]
    return out


def _lbcs_descend(dist, table, w2, iterations, tol, history):
    """Cyclic exact block minimisation, one qubit's simplex at a time.

    With the other qubits fixed the cost is ``sum_a c_a / K_i(a) + const``,
    minimised on the simplex by ``K_i(a) ~ sqrt(c_a)``; every sweep is
    therefore non-increasing.
    """
    n = table.shape[1]
    cost = float(np.sum(w2 / _product_chi(dist, table)))
    if history is not None:
        history.append(cost)
    it = 0
    for it in range(1, iterations + 1):
        for i in range(n):
            col = table[:, i]
            used = col >= 0
            if not used.any():
                continue
            rest = _product_chi(dist, table) / np.where(used, dist[i, np.maximum(col, 0)], 1.0)
            c = np.zeros(3)
            np.add.at(c, col[used], w2[used] / rest[used])
            root = np.sqrt(c)
            dist[i] = root / root.sum()
        new = float(np.sum(w2 / _product_chi(dist, table)))
        if history is not None:
            history.append(new)
        done = abs(cost - new) <= tol * max(abs(cost), 1e-300)
        cost = new
        if done:
            break
    return dist, cost, it


def lbcs_optimize(obs: Observable, iterations: int = 1000, seed: int = 0, restarts: int = 0,
                  tol: float = 1e-10, history=None) -> MeasurementPlan:
    """Locally biased classical shadows: per-qubit distributions minimising the diagonal cost.

    The first descent starts from the uniform distribution. ``restarts``
    extra descents start from Dirichlet draws seeded by ``seed``; the best
    result is kept. Qubits no term acts on keep the uniform triple.
    """
    _require_terms(obs)
    table = _letter_table(obs)
    w2 = obs.coeffs ** 2
    starts = [np.full((obs.n, 3), 1.0 / 3.0)]
    rng = np.random.default_rng(seed)
    starts += [rng.dirichlet(np.ones(3), size=obs.n) for _ in range(restarts)]
    best = None
    total = 0
    for k, start in enumerate(starts):
        dist, cost, it = _lbcs_descend(start.copy(), table, w2, iterations, tol, history if k == 0 else None)
        total += it
        if best is None or cost < best[1]:
            best = (dist, cost)
    dist = best[0]
    dist = dist / dist.sum(axis=1, keepdims=True)
    plan = MeasurementPlan("lbcs", obs.n, product_dist=dist)
    return _with_diag(plan, obs, total)


def product_basis_probability(plan: MeasurementPlan, basis: PauliString) -> float:
    """Probability of drawing the full basis ``basis`` from a product-form plan."""
    p = 1.0
    for i in range(plan.n):
        c = basis.letter(i)
        if c == "I":
            return 0.0
        p *= plan.product_dist[i, PRODUCT_LETTERS.index(c)]
    return p
