import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import EXAMPLE_TRUTH
from oracles import basis_distribution, estimator_moments, random_real_vector, random_terms, weight
from ogm import baselines, estimator as est, overlap, records as rec, sampler
from ogm import simulator as sim
from ogm.errors import DimensionError, PlanError
from ogm.observable import Observable, parse_observable
from ogm.pauli import parse_pauli
from ogm.plan import Group, MeasurementPlan

P = parse_pauli


def all_plans(obs):
    return {
        "l1": baselines.l1_plan(obs),
        "ldf": baselines.grouping_plan(baselines.ldf_grouping(obs), obs),
        "cs": baselines.cs_uniform_plan(obs.n),
        "lbcs": baselines.lbcs_optimize(obs),
        "ogm-v1": overlap.ogm_plan(obs, version=1, restarts=2),
        "ogm-v2": overlap.ogm_plan(obs, version=2, restarts=2),
    }


def test_f_value_examples():
    q = P("XI")
    plan = MeasurementPlan("ogm", 2, (Group((q,), P("XZ")), Group((), P("ZZ")), Group((q,), P("XX"))),
                           np.array([0.25, 0.5, 0.25]))
    assert est.f_value(plan, P("XZ"), q) == pytest.approx(2.0)
    assert est.f_value(plan, P("ZZ"), q) == 0.0
    assert est.f_value(baselines.cs_uniform_plan(2), P("XZ"), P("XZ")) == pytest.approx(9.0)
    assert est.f_value(baselines.cs_uniform_plan(2), P("XZ"), P("XI")) == pytest.approx(3.0)
    with pytest.raises(PlanError):
        est.f_value(plan, P("XZ"), q, scheme="lbcs")


def test_member_rule_ignores_incidental_cover(example_obs):
    plan = baselines.grouping_plan(baselines.ldf_grouping(example_obs), example_obs)
    # XXX covers XXI and IXX (members) but not ZZI
    assert est.f_value(plan, P("XXX"), P("XXI")) == pytest.approx(2.0)
    l1 = baselines.l1_plan(example_obs)
    assert est.f_value(l1, P("XXI"), P("XXI")) == pytest.approx(4.0)


def test_unified_single_term():
    obs = parse_observable("0.7 Z")
    plan = baselines.l1_plan(obs)
    records = [rec.BasisCounts(P("Z"), np.array([0]), np.array([25]))]
    assert est.unified_estimate(records, obs, plan).value == pytest.approx(0.7)


def test_unified_example_at_one_million(example_obs, ghz3):
    plan = overlap.ogm_plan(example_obs)
    T = 1_000_000
    records = rec.simulate_list(ghz3, sampler.draw_iid(plan, T, 11), 12)
    report = est.unified_estimate(records, example_obs, plan)
    assert abs(report.value - EXAMPLE_TRUTH) <= 4 * np.sqrt(0.50 / T)
    assert report.shots_used == T and not report.warnings


def test_unified_checks_dimensions(example_obs):
    plan = baselines.l1_plan(example_obs)
    with pytest.raises(DimensionError):
        est.unified_estimate([rec.BasisCounts(P("ZZ"), np.array([0]), np.array([1]))], example_obs, plan)
    with pytest.raises(PlanError):
        est.unified_estimate([], example_obs, plan)


def test_fixed_list_single_basis():
    obs = parse_observable("-2 ZI")
    records = [rec.BasisCounts(P("ZZ"), np.array([0, 1, 2, 3]), np.array([4, 3, 2, 1]))]
    # qubit 1 reads -1 for outcomes 2 and 3: mean = (7 - 3) / 10
    assert est.fixed_list_estimate(records, obs).value == pytest.approx(-2 * 0.4)


def test_fixed_list_pools_shots_not_bases():
    obs = parse_observable("1 XI")
    records = [
        rec.BasisCounts(P("XZ"), np.array([0]), np.array([3])),
        rec.BasisCounts(P("XX"), np.array([2]), np.array([1])),
    ]
    report = est.fixed_list_estimate(records, obs)
    assert report.value == pytest.approx((3 - 1) / 4)
    assert report.per_term_coverage == (4,)


def test_fixed_list_uncovered_term_warns():
    obs = parse_observable("1 XI\n0.5 ZZ")
    records = [rec.BasisCounts(P("XX"), np.array([0]), np.array([5]))]
    report = est.fixed_list_estimate(records, obs)
    assert report.value == pytest.approx(1.0)
    assert report.bias_bound == pytest.approx(0.5)
    assert len(report.warnings) == 1 and "ZZ" in report.warnings[0]


def test_fixed_list_equals_unified_for_proportional_shots(example_obs, ghz3):
    groups, _ = overlap.overlapped_sets_v1(example_obs)
    k = np.array([0.4, 0.1, 0.2, 0.3])
    plan = MeasurementPlan("ogm", 3, tuple(groups), k)
    mlist = sampler.partial_derandomize(plan, 1000, 0)
    assert mlist.shots.tolist() == [400, 300, 200, 100]
    records = rec.simulate_list(ghz3, mlist, 3)
    a = est.fixed_list_estimate(records, example_obs).value
    b = est.unified_estimate(records, example_obs, plan).value
    assert a == pytest.approx(b, abs=1e-12)


@pytest.mark.parametrize("scheme, expected, tol", [("l1", 1 - 1 / 9, 1e-12), ("ldf", 0.56, 0.01)])
def test_analytic_variance_anchors(example_obs, ghz3, scheme, expected, tol):
    plan = all_plans(example_obs)[scheme]
    assert est.analytic_variance(plan, example_obs, ghz3) == pytest.approx(expected, abs=tol)


def test_analytic_variance_single_term():
    obs = parse_observable("0.3 XY")
    state = sim.random_state(2, 2)
    q = sim.pauli_expectation(state, P("XY"))
    assert est.analytic_variance(baselines.l1_plan(obs), obs, state) == pytest.approx(0.09 * (1 - q * q))


def test_analytic_variance_rejects_uncovered(example_obs, ghz3):
    mlist = sampler.FixedMeasurementList(3, ((P("XXX"), 1),))
    plan = sampler.plan_from_list(mlist, example_obs)
    with pytest.raises(PlanError):
        est.analytic_variance(plan, example_obs, ghz3)
    assert est.analytic_variance(plan, example_obs, ghz3, allow_uncovered=True) >= 0


def test_offset_does_not_change_variance(example_obs, ghz3):
    shifted = Observable.from_terms(3, [(t.coeff, t.pauli) for t in example_obs.terms], offset=5.0)
    plan = baselines.l1_plan(example_obs)
    assert est.analytic_variance(plan, shifted, ghz3) == pytest.approx(est.analytic_variance(plan, example_obs, ghz3))


def test_bound_examples(example_obs):
    assert est.variance_bounds(example_obs, "l1")["bound"] == pytest.approx(1.0)
    assert est.variance_bounds(example_obs, "cs")["bound"] == pytest.approx(9.0)
    out = est.variance_bounds(example_obs, "l1", eps=0.1, delta=0.05)
    assert out["budget"] == 2000
    with pytest.raises(PlanError):
        est.variance_bounds(example_obs, "diag")
    with pytest.raises(ValueError):
        est.variance_bounds(example_obs, "nope")


def test_cs_bound_uses_magnitudes():
    obs = parse_observable("1 ZI\n-1 IZ")
    state = sim.basis_state(2, 1)
    var = est.analytic_variance(baselines.cs_uniform_plan(2), obs, state)
    assert var > 0
    assert var <= est.variance_bounds(obs, "cs")["bound"]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([3, 4]))
def test_exact_variance_below_bounds(seed, n):
    rng = np.random.default_rng(seed)
    obs = Observable.from_terms(n, random_terms(rng, n, int(rng.integers(2, 9))))
    state = sim.StateVector(n, random_real_vector(rng, n).astype(complex))
    plans = all_plans(obs)
    slack = 1e-9
    assert est.analytic_variance(plans["l1"], obs, state) <= est.variance_bounds(obs, "l1")["bound"] + slack
    assert est.analytic_variance(plans["cs"], obs, state) <= est.variance_bounds(obs, "cs")["bound"] + slack
    assert est.analytic_variance(plans["ldf"], obs, state) <= (
        est.variance_bounds(obs, "grouping", plans["ldf"])["bound"] + slack)
    for plan in plans.values():
        if plan.uncovered:
            continue
        bound = est.variance_bounds(obs, "diag", plan)["bound"]
        assert est.analytic_variance(plan, obs, state) <= bound * (1 + 1e-12) + slack


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([2, 3]))
def test_enumeration_oracle_agrees(seed, n):
    rng = np.random.default_rng(seed)
    terms = random_terms(rng, n, int(rng.integers(1, 7)))
    obs = Observable.from_terms(n, terms)
    psi = random_real_vector(rng, n)
    state = sim.StateVector(n, psi.astype(complex))
    truth = sim.expectation(state, obs)
    canon = [(t.coeff, t.pauli.text) for t in obs.terms]
    for name, plan in all_plans(obs).items():
        if plan.uncovered:
            continue
        mean, var = estimator_moments(plan, canon, psi)
        assert mean == pytest.approx(truth, abs=1e-10), name
        assert est.analytic_variance(plan, obs, state) == pytest.approx(var, abs=1e-10), name


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_weight_has_unit_mean(seed):
    rng = np.random.default_rng(seed)
    obs = Observable.from_terms(3, random_terms(rng, 3, 6))
    for plan in all_plans(obs).values():
        dist = basis_distribution(plan)
        for q in obs.paulis:
            if q in plan.uncovered:
                continue
            assert sum(k * weight(plan, b, q.text) for b, k in dist) == pytest.approx(1.0, abs=1e-12)
            assert sum(k * est.f_value(plan, P(b), q) for b, k in dist) == pytest.approx(1.0, abs=1e-12)


def test_fixed_list_variance_single_term():
    obs = parse_observable("0.5 XZ")
    state = sim.random_state(2, 6)
    q = sim.pauli_expectation(state, P("XZ"))
    mlist = sampler.FixedMeasurementList(2, ((P("XZ"), 40),))
    assert est.fixed_list_variance(mlist, obs, state) == pytest.approx(0.25 * (1 - q * q) / 40)


def test_fixed_list_variance_analytic_vs_montecarlo(example_obs, ghz3):
    plan = overlap.ogm_plan(example_obs)
    mlist = sampler.partial_derandomize(plan, 200, 0)
    analytic = est.fixed_list_variance(mlist, example_obs, ghz3)
    reps = 10_000
    mc = est.fixed_list_variance(mlist, example_obs, ghz3, mode="montecarlo", reps=reps, seed=1)
    # the sample variance of R draws has relative sd about sqrt(2 / (R - 1)) for near-normal data
    assert abs(mc - analytic) <= 4 * analytic * np.sqrt(2 / (reps - 1))


def test_derandomized_list_not_worse_than_iid(example_obs, ghz3):
    groups, _ = overlap.overlapped_sets_v1(example_obs)
    plan = MeasurementPlan("ogm", 3, tuple(groups), np.array([0.4, 0.1, 0.2, 0.3]))
    T = 1000
    mlist = sampler.partial_derandomize(plan, T, 0)
    assert est.fixed_list_variance(mlist, example_obs, ghz3) <= est.analytic_variance(plan, example_obs, ghz3) / T


def test_rmse_examples():
    assert est.rmse([0.3, 0.3], 0.3) == 0.0
    assert est.rmse([1.2, 0.8, 1.2, 0.8], 1.0) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        est.rmse([], 0.0)


def test_rmse_at_thousand_shots(example_obs, ghz3):
    plan = overlap.ogm_plan(example_obs)
    cache = sim.BornCache(ghz3)
    vals = [
        est.unified_estimate(rec.simulate_list(ghz3, sampler.draw_iid(plan, 1000, s), s + 10_000, cache),
                             example_obs, plan).value
        for s in range(100)
    ]
    assert est.rmse(vals, EXAMPLE_TRUTH) == pytest.approx(np.sqrt(0.50 / 1000), rel=0.30)


def test_records_round_trip(tmp_path, ghz3):
    mlist = sampler.FixedMeasurementList(3, ((P("XYZ"), 50), (P("ZZZ"), 7)))
    records = rec.simulate_list(ghz3, mlist, 0)
    rec.save_records(records, 3, tmp_path / "r.json")
    back = rec.load_records(tmp_path / "r.json")
    for a, b in zip(records, back):
        assert a.basis == b.basis
        assert np.array_equal(a.outcomes, b.outcomes) and np.array_equal(a.counts, b.counts)
    data = json.loads((tmp_path / "r.json").read_text())
    assert set(data["records"][1]["counts"]) <= {"+++", "---"}


def test_records_from_single_shots(ghz3):
    shots = sim.measure(ghz3, P("ZZZ"), 30, seed=2)
    [counts] = rec.from_measurements(shots)
    assert counts.shots == 30
    assert set(counts.outcomes.tolist()) <= {0, 7}


def test_report_json(example_obs):
    report = est.EstimateReport(0.1, 10, (1, 2, 3, 4, 5, 6), 0.0, ())
    d = json.loads(est.report_json(report, example_obs, estimator="unified"))
    assert d["per_term_coverage"]["IXX"] == 1 and d["format_version"] == 1
