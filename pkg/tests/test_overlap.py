import numpy as np
import pytest
from hypothesis import example, given, settings, strategies as st

from oracles import random_terms, simplex_minimize
from ogm import overlap
from ogm.baselines import cs_uniform_plan, l1_plan
from ogm.errors import PlanError
from ogm.estimator import analytic_variance
from ogm.kernels import cover_matrix
from ogm.observable import Observable, parse_observable
from ogm.pauli import covers, parse_pauli
from ogm.plan import Group, MeasurementPlan, dumps, plan_to_dict

# frozen from a hand trace of the greedy set construction on the example
V1_SETS = {
    "XXX": ["IXX", "XXI"],
    "XZZ": ["IZZ", "XIZ"],
    "XXZ": ["IXZ", "XIZ", "XXI"],
    "ZZZ": ["IZZ", "ZZI"],
}
V1_INITIAL = np.array([6, 4, 2, 1]) / 13
V2_INITIAL = np.array([6, 4, 1, 1]) / 12
OPTIMAL_K = np.array([0.43765, 0.11052, 0.17065, 0.28117])
OPTIMAL_DIAG = 0.4952043908


def sets_of(groups):
    return {g.basis.text: sorted(q.text for q in g.members) for g in groups}


def test_token_budget_examples():
    assert overlap.token_budget(parse_observable("1 X\n1 Z")).tolist() == [1, 1]
    obs = parse_observable("100 XI\n1 IZ\n9.99 ZZ\n10 YY")
    assert obs.coeffs.tolist() == [100, 10, 9.99, 1]
    assert overlap.token_budget(obs).tolist() == [4, 2, 1, 1]


def test_v1_example(example_obs):
    groups, k = overlap.overlapped_sets_v1(example_obs)
    assert sets_of(groups) == V1_SETS
    assert [g.basis.text for g in groups] == list(V1_SETS)
    assert k == pytest.approx(V1_INITIAL, abs=1e-15)


def test_v2_example(example_obs):
    groups, k, counts = overlap.overlapped_sets_v2(example_obs, return_counts=True)
    v1, _ = overlap.overlapped_sets_v1(example_obs)
    assert sets_of(groups) == V1_SETS
    assert k == pytest.approx(V2_INITIAL, abs=1e-15)
    assert len(groups) >= len(v1)
    assert np.all(counts <= overlap.token_budget(example_obs))


def test_single_term_and_incompatible_terms():
    groups, k = overlap.overlapped_sets_v1(parse_observable("0.3 XZ"))
    assert len(groups) == 1 and k.tolist() == [1.0]
    obs = parse_observable("0.5 X\n0.3 Y\n0.2 Z")
    for fn in (overlap.overlapped_sets_v1, overlap.overlapped_sets_v2):
        groups, k = fn(obs)
        assert len(groups) == obs.m
        assert k == pytest.approx([0.5, 0.3, 0.2])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 5), st.integers(1, 16), st.sampled_from([1, 2]))
def test_membership_is_exactly_coverage(seed, n, m, version):
    rng = np.random.default_rng(seed)
    m = min(m, 4 ** n - 1)
    obs = Observable.from_terms(n, random_terms(rng, n, m))
    if version == 1:
        groups, k = overlap.overlapped_sets_v1(obs)
    else:
        groups, k, counts = overlap.overlapped_sets_v2(obs, return_counts=True)
        assert np.all(counts <= overlap.token_budget(obs))
    for g in groups:
        members = set(g.members)
        for q in obs.paulis:
            assert covers(q, g.basis) == (q in members)
    covered = {q for g in groups for q in g.members}
    assert covered == set(obs.paulis)
    assert abs(k.sum() - 1) <= 1e-12 and np.all(k > 0)


def test_chi_examples():
    a, b = parse_pauli("XI"), parse_pauli("XZ")
    obs = Observable.from_terms(2, [(1.0, a)])
    plan = MeasurementPlan("ogm", 2, (Group((a,), a), Group((a,), b), Group((), parse_pauli("ZZ"))),
                           np.array([0.3, 0.2, 0.5]))
    assert overlap.chi(0, plan, obs) == pytest.approx(0.5)
    single = MeasurementPlan("ogm", 2, (Group((a,), a), Group((), parse_pauli("ZZ"))), np.array([0.3, 0.7]))
    assert overlap.chi(0, single, obs) == pytest.approx(0.3)
    two_local = Observable.from_terms(2, [(1.0, "XZ")])
    assert overlap.chi(0, cs_uniform_plan(2), two_local) == pytest.approx(1 / 9)


def test_diag_cost_examples(example_obs):
    assert overlap.diag_cost(l1_plan(example_obs), example_obs) == pytest.approx(1.0, abs=1e-12)
    obs = parse_observable("2 XI\n-1 ZZ\n0.5 IY")
    assert overlap.diag_cost(l1_plan(obs), obs) == pytest.approx(3.5 ** 2)
    a = parse_pauli("XI")
    partial = MeasurementPlan("ogm", 2, (Group((a,), a),), np.array([1.0]))
    assert overlap.diag_cost(partial, obs) == float("inf")


def test_final_cost_examples(example_obs):
    plan = overlap.ogm_plan(example_obs, prune=False)
    assert overlap.final_cost(plan, example_obs, 1000) == pytest.approx(overlap.diag_cost(plan, example_obs))
    obs = parse_observable("0.5 XI\n0.1 IZ")
    a = parse_pauli("XI")
    dropped = MeasurementPlan("ogm", 2, (Group((a,), a),), np.array([1.0]))
    assert overlap.final_cost(dropped, obs, 1000) == pytest.approx(0.25 + 10.0)
    with pytest.raises(PlanError):
        overlap.final_cost(dropped, obs, 0)


def test_optimized_example(example_obs, ghz3):
    groups, k0 = overlap.overlapped_sets_v1(example_obs)
    plan = overlap.optimize_distribution(groups, example_obs, T=1000, initial=k0)
    start = MeasurementPlan("ogm", 3, tuple(groups), k0)
    assert overlap.final_cost(plan, example_obs, 1000) <= overlap.final_cost(start, example_obs, 1000)
    assert plan.probabilities == pytest.approx(OPTIMAL_K, abs=1e-4)
    assert plan.diagnostics.diag_cost == pytest.approx(OPTIMAL_DIAG, abs=1e-8)
    assert analytic_variance(plan, example_obs, ghz3) <= 0.51


def test_optimizer_matches_independent_convex_solver(example_obs):
    groups, k0 = overlap.overlapped_sets_v1(example_obs)
    plan = overlap.optimize_distribution(groups, example_obs, initial=k0)
    cover = cover_matrix(example_obs.paulis, [g.basis for g in groups]).astype(float)
    _, best = simplex_minimize(cover, example_obs.coeffs ** 2)
    assert plan.diagnostics.diag_cost == pytest.approx(best, rel=1e-7)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
@example(510511)  # optimum on a face of the simplex
def test_optimizer_reaches_convex_optimum_on_random_instances(seed):
    rng = np.random.default_rng(seed)
    obs = Observable.from_terms(4, random_terms(rng, 4, 12, letters="IXZ"))
    groups, k0 = overlap.overlapped_sets_v1(obs)
    plan = overlap.optimize_distribution(groups, obs, initial=k0, restarts=3)
    cover = cover_matrix(obs.paulis, [g.basis for g in groups]).astype(float)
    _, best = simplex_minimize(cover, obs.coeffs ** 2, iterations=5000)
    assert plan.diagnostics.diag_cost <= best * (1 + 1e-6)


def test_disjoint_compatible_terms_share_one_group():
    obs = parse_observable("0.7 XI\n0.2 IZ")
    plan = overlap.ogm_plan(obs)
    assert [g.basis.text for g in plan.groups] == ["XZ"]
    assert plan.probabilities.tolist() == [1.0]


def test_pruning_keeps_exclusive_heavy_groups():
    obs = parse_observable("1 X\n0.9 Y\n0.8 Z")
    plan = overlap.ogm_plan(obs, T=1000, prune=False)
    pruned = overlap.prune_groups(plan, obs, T=1000)
    assert len(pruned.groups) == 3 and not pruned.uncovered


def test_optimizer_reaches_a_face_of_the_simplex():
    # XXX covers both terms, so the single-term bases are dominated
    obs = parse_observable("0.5 XXI\n0.5 IXX")
    a, b = parse_pauli("XXI"), parse_pauli("IXX")
    groups = [Group((a,), a), Group((a, b), parse_pauli("XXX")), Group((b,), b)]
    plan = overlap.optimize_distribution(groups, obs, restarts=2)
    assert plan.probabilities.tolist() == [0.0, 1.0, 0.0]
    assert plan.diagnostics.diag_cost == pytest.approx(0.5, abs=1e-12)
    assert [g.basis.text for g in overlap.prune_groups(plan, obs).groups] == ["XXX"]


def test_pruning_removes_redundant_group():
    obs = parse_observable("0.5 XXI\n0.5 IXX")
    a, b, basis = parse_pauli("XXI"), parse_pauli("IXX"), parse_pauli("XXX")
    plan = MeasurementPlan("ogm", 3, (Group((a, b), basis), Group((a,), a)), np.array([1 - 1e-9, 1e-9]))
    before = overlap.final_cost(plan, obs, 1000)
    pruned = overlap.prune_groups(plan, obs, T=1000)
    assert [g.basis.text for g in pruned.groups] == ["XXX"]
    assert pruned.diagnostics.final_cost < before
    assert pruned.diagnostics.uncovered_bias_bound == 0.0


def test_pruning_drops_a_negligible_term():
    # a tiny term with its own basis costs more than its penalty at small T
    obs = parse_observable("1 XX\n1e-4 ZZ")
    plan = overlap.ogm_plan(obs, T=10, prune=False)
    pruned = overlap.prune_groups(plan, obs, T=10)
    assert [q.text for q in pruned.uncovered] == ["ZZ"]
    assert pruned.diagnostics.uncovered_bias_bound == pytest.approx(1e-4)
    assert pruned.diagnostics.final_cost < overlap.final_cost(plan, obs, 10)


def test_pruned_not_worse_than_unpruned(example_obs):
    unpruned = overlap.ogm_plan(example_obs, T=1000, prune=False)
    pruned = overlap.ogm_plan(example_obs, T=1000)
    assert overlap.final_cost(pruned, example_obs, 1000) <= overlap.final_cost(unpruned, example_obs, 1000)


def test_plan_is_bit_identical_for_same_seed(example_obs):
    a = dumps(plan_to_dict(overlap.ogm_plan(example_obs, seed=5)))
    b = dumps(plan_to_dict(overlap.ogm_plan(example_obs, seed=5)))
    assert a == b


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_never_worse_than_l1_when_a_join_exists(seed):
    rng = np.random.default_rng(seed)
    obs = Observable.from_terms(4, random_terms(rng, 4, 10))
    groups, _ = overlap.overlapped_sets_v1(obs)
    if all(len(g.members) == 1 for g in groups):
        return
    plan = overlap.ogm_plan(obs, restarts=3, prune=False)
    assert overlap.diag_cost(plan, obs) <= overlap.diag_cost(l1_plan(obs), obs) * (1 + 1e-9)


def test_unknown_version(example_obs):
    with pytest.raises(PlanError):
        overlap.ogm_plan(example_obs, version=3)
