"""Tests for trend/limit classification, theorem verdicts, the experiment
runner, and the simulation-backed concentration checks."""

import json
import math

import numpy as np
import pytest

from gprior_lab.model_core import (
    ConstantRule,
    DesignSpec,
    EmpiricalBayesG,
    FirstMRule,
    FixedDimension,
    FixedG,
    HyperG,
    PriorConstants,
    ScaledNormRule,
    SqrtDimension,
    ZellnerSiowG,
)
from gprior_lab.g_regimes import build_g_posterior
from gprior_lab.posterior_engine import BallOptions
from gprior_lab.consistency_lab import (
    FLOOR_THRESHOLD,
    REPORT_SCHEMA_VERSION,
    VANISH_THRESHOLD,
    classify_limit,
    classify_trend,
    evaluate_theorem1,
    evaluate_theorem_subsequence_condition,
    limit_profile,
    predict_verdict,
    regime_kind,
    run_experiment,
    shrinkage_spread_stat,
    verify_lemmas,
)

from conftest import axis_stats, make_scenario

PRIOR = PriorConstants()
GRID = (200, 800, 3200)
# capped quadrature keeps the larger experiment smokes fast; accuracy is
# covered against the full grid in test_posterior_engine
CAPPED = BallOptions(method="exact", g_quad=64, sigma_grid=65)


class TestTrendClassification:
    def test_thresholds(self):
        assert VANISH_THRESHOLD == 0.05
        assert FLOOR_THRESHOLD == 0.1
        assert REPORT_SCHEMA_VERSION == 1

    def test_decreasing_to_small_is_vanishing(self):
        assert classify_trend([1.0, 0.5, 0.01]) == "vanishing"

    def test_plateau_above_floor_is_bounded_away(self):
        assert classify_trend([0.5, 0.6, 0.5, 0.5]) == "bounded_away"

    def test_dip_and_rebound_is_indeterminate(self):
        assert classify_trend([0.2, 0.05, 0.2]) == "indeterminate"

    def test_single_point_is_indeterminate(self):
        assert classify_trend([0.3]) == "indeterminate"

    def test_identically_zero_is_vanishing(self):
        assert classify_trend([0.0, 0.0, 0.0]) == "vanishing"


class TestLimitClassification:
    def test_square_root_diverges(self):
        assert classify_limit(lambda n: math.sqrt(n), GRID) == "diverging"

    def test_constant_is_positive(self):
        assert classify_limit(lambda n: 3.0, GRID) == "positive"

    def test_zero_sequence_is_zero(self):
        assert classify_limit(lambda n: 0.0, GRID) == "zero"

    def test_reciprocal_is_zero(self):
        assert classify_limit(lambda n: 1.0 / n, GRID) == "zero"

    def test_oscillation_is_unknown(self):
        def osc(n):
            return 2.0 if int(round(math.log(n / 100, 4))) % 2 else 0.5

        assert classify_limit(osc, (100,)) == "unknown"

    def test_profile_extends_geometrically_to_eight_points(self):
        ns, values = limit_profile(lambda n: float(n), GRID)
        assert ns == [200, 800, 3200, 12800, 51200, 204800, 819200, 3276800]
        assert values == [float(n) for n in ns]

    def test_profile_rejects_empty_grid(self):
        with pytest.raises(ValueError, match="empty n grid"):
            limit_profile(lambda n: 1.0, ())


class TestVerdicts:
    def test_regime_kind_names(self):
        assert regime_kind(FixedG(rule="n")) == "fixed"
        assert regime_kind(EmpiricalBayesG()) == "eb"
        assert regime_kind(HyperG(c=3.0)) == "hyper_g"
        assert regime_kind(ZellnerSiowG()) == "zs"
        with pytest.raises(ValueError, match="unknown regime"):
            regime_kind(object())

    def test_fixed_growing_g_is_consistent(self):
        v = predict_verdict(make_scenario(regime=FixedG(rule="n")), GRID)
        assert v.display() == "Consistent (Theorem 1)"
        assert (v.theorem, v.predicted, v.sufficient_only) == ("T1", "consistent", False)
        assert v.evidence["center_condition"]["class"] == "zero"
        assert v.evidence["spread_condition"]["class"] == "zero"

    def test_fixed_unit_g_with_constant_offset_is_inconsistent(self):
        sc = make_scenario(
            regime=FixedG(rule=1.0),
            alpha=0.0,
            p_rule=FixedDimension(3),
            gamma_rule=ConstantRule(2.0),
        )
        v = predict_verdict(sc, GRID)
        assert v.display() == "Inconsistent (Theorem 1)"
        assert v.evidence["center_condition"]["class"] == "positive"

    def test_fixed_g_with_matching_location_is_consistent(self):
        sc = make_scenario(regime=FixedG(rule="n"), gamma_rule=FirstMRule(1.0, 3))
        assert predict_verdict(sc, GRID).display() == "Consistent (Theorem 1)"

    def test_eb_with_settling_offset_is_inconsistent(self):
        v = predict_verdict(make_scenario(), GRID)
        assert v.display() == "Inconsistent (Theorem 2)"
        assert v.evidence["alpha"] == 0.5
        assert v.evidence["offset_sq"]["class"] == "positive"
        assert v.evidence["offset_sup"]["class"] == "positive"

    def test_hyper_g_with_settling_offset_is_inconsistent(self):
        v = predict_verdict(make_scenario(regime=HyperG(c=3.0)), GRID)
        assert v.display() == "Inconsistent (Theorem 3)"

    def test_eb_with_diverging_offset_norm_is_consistent(self):
        sc = make_scenario(beta0_rule=ScaledNormRule("sqrt_n"))
        v = predict_verdict(sc, GRID)
        assert v.display() == "Consistent (Theorem 2)"
        assert v.evidence["offset_sq"]["class"] == "diverging"

    def test_eb_with_vanishing_dimension_ratio_is_consistent(self):
        sc = make_scenario(alpha=0.0, p_rule=SqrtDimension())
        assert predict_verdict(sc, GRID).display() == "Consistent (Theorem 2)"

    def test_zs_failing_condition_is_unknown(self):
        v = predict_verdict(make_scenario(regime=ZellnerSiowG()), GRID)
        assert v.display() == "Unknown (Theorem 4 sufficient only)"
        assert (v.predicted, v.sufficient_only) == ("unknown", True)

    def test_zs_holding_condition_is_consistent_but_flagged_sufficient(self):
        sc = make_scenario(regime=ZellnerSiowG(), alpha=0.0, p_rule=SqrtDimension())
        v = predict_verdict(sc, GRID)
        assert v.display() == "Consistent (Theorem 4)"
        assert (v.predicted, v.sufficient_only) == ("consistent", True)

    def test_theorem1_evaluator_rejects_other_regimes(self):
        with pytest.raises(ValueError, match="fixed-g regime"):
            evaluate_theorem1(make_scenario(), GRID)

    def test_subsequence_condition_zero_alpha_short_circuits(self):
        holds, ev = evaluate_theorem_subsequence_condition(
            make_scenario(alpha=0.0, p_rule=SqrtDimension()), GRID
        )
        assert holds is True
        assert ev["alpha"] == 0.0


class TestShrinkageSpread:
    def test_point_mass_closed_form(self):
        stats = axis_stats(50, [2.0, 1.0, 0.0], 30.0)
        quad_form = float(np.sum(stats.gram.eigenvalues * stats.beta_hat**2))
        post = build_g_posterior(FixedG(rule=3.0), stats, quad_form, PRIOR)
        expected = quad_form**2 * (3.0 / 16.0) ** 2 / 50.0**3
        assert shrinkage_spread_stat(post) == pytest.approx(expected, rel=1e-12)

    def test_nonnegative_and_bounded_by_envelope(self):
        # g^2 (g+1)^{-4} <= 1/16 pointwise, so the stat is capped
        stats = axis_stats(50, [2.0, 1.0, 0.0], 30.0)
        quad_form = float(np.sum(stats.gram.eigenvalues * stats.beta_hat**2))
        post = build_g_posterior(HyperG(c=3.0), stats, quad_form, PRIOR)
        val = shrinkage_spread_stat(post)
        assert 0.0 <= val <= quad_form**2 / 16.0 / 50.0**3


@pytest.fixture(scope="module")
def report_pair():
    sc = make_scenario(name="smoke")
    kw = dict(reps=3, master_seed=7)
    r1 = run_experiment(sc, (50, 100), (0.25, 0.5), threads=1, **kw)
    r8 = run_experiment(sc, (50, 100), (0.25, 0.5), threads=8, **kw)
    return r1, r8


class TestRunExperiment:

    def test_thread_count_does_not_change_payload(self, report_pair):
        r1, r8 = report_pair
        assert r1.canonical_json() == r8.canonical_json()

    def test_canonical_json_excludes_wall_time(self, report_pair):
        r1, _ = report_pair
        assert "wall_time_s" not in r1.canonical_json()
        assert r1.to_dict()["wall_time_s"] > 0
        assert r1.to_dict()["schema_version"] == 1

    def test_cells_are_sorted_and_traceable(self, report_pair):
        r1, _ = report_pair
        assert len(r1.cells) == 2 * 3 * 2
        keys = [(c["n"], c["rep"], c["eps"]) for c in r1.cells]
        assert keys == sorted(keys)
        for c in r1.cells:
            assert c["seed"] == 7
            assert c["path"] == ["smoke", c["n"], c["rep"]]
            assert c["method"] == "exact" and c["se"] is None
            assert 0.0 <= c["prob"] <= 1.0

    def test_probability_nonincreasing_in_eps_within_cell(self, report_pair):
        r1, _ = report_pair
        by_cell = {}
        for c in r1.cells:
            by_cell.setdefault((c["n"], c["rep"]), {})[c["eps"]] = c["prob"]
        for probs in by_cell.values():
            assert probs[0.5] <= probs[0.25] + 1e-12

    def test_aggregates_shape(self, report_pair):
        r1, _ = report_pair
        assert [a["eps"] for a in r1.aggregates] == [0.25, 0.5]
        for agg in r1.aggregates:
            assert agg["n_grid"] == [50, 100]
            assert len(agg["prob_median"]) == 2
            assert all(
                q25 <= med <= q75
                for q25, med, q75 in zip(
                    agg["prob_q25"], agg["prob_median"], agg["prob_q75"]
                )
            )
            assert agg["trend"] in ("vanishing", "bounded_away", "indeterminate")

    def test_csv_layout(self, report_pair):
        r1, _ = report_pair
        lines = r1.to_csv().strip().split("\n")
        assert lines[0] == "scenario,regime,n,p,rep,eps,prob,se,seed"
        assert len(lines) == 1 + len(r1.cells)
        first = lines[1].split(",")
        assert first[0] == "smoke" and first[1] == "eb"
        assert int(first[2]) == 50 and first[7] == "" and int(first[8]) == 7

    def test_single_point_grid_is_indeterminate(self):
        sc = make_scenario(name="one")
        rep = run_experiment(sc, (60,), (0.5,), reps=1, master_seed=1)
        assert rep.aggregates[0]["trend"] == "indeterminate"
        # predicted inconsistent + indeterminate observation: no call either way
        assert rep.verdict.predicted == "inconsistent"
        assert rep.agreement is None

    def test_lemmas_embedded_on_request(self):
        sc = make_scenario(name="withlem")
        rep = run_experiment(
            sc, (50, 100), (0.5,), reps=2, master_seed=3, include_lemmas=True
        )
        doc = rep.to_dict()
        assert len(doc["lemmas"]) == 8
        for entry in doc["lemmas"]:
            assert set(entry) == {"name", "passed", "skipped", "reason", "details"}
        json.dumps(doc)  # report with lemmas stays serializable

    def test_grid_validation(self):
        sc = make_scenario(name="bad")
        with pytest.raises(ValueError, match="empty eps grid"):
            run_experiment(sc, (50,), (), reps=1)
        with pytest.raises(ValueError, match="eps values must be > 0"):
            run_experiment(sc, (50,), (0.0, 0.5), reps=1)
        with pytest.raises(ValueError, match="duplicate eps"):
            run_experiment(sc, (50,), (0.5, 0.5), reps=1)
        with pytest.raises(ValueError, match="reps must be >= 1"):
            run_experiment(sc, (50,), (0.5,), reps=0)
        with pytest.raises(ValueError, match="threads must be >= 1"):
            run_experiment(sc, (50,), (0.5,), reps=1, threads=0)

    def test_matching_prior_location_vanishes(self):
        # prior located exactly at the truth with g = 1: the posterior sits
        # on top of beta0 and the exceedance dies along the grid
        sc = make_scenario(
            name="match_center",
            regime=FixedG(rule=1.0),
            gamma_rule=FirstMRule(1.0, 3),
        )
        rep = run_experiment(
            sc, GRID, (0.5,), reps=10, master_seed=20260815,
            threads=2, ball_options=CAPPED,
        )
        assert rep.verdict.display() == "Consistent (Theorem 1)"
        assert rep.aggregates[0]["trend"] == "vanishing"
        assert rep.agreement is True
        small_n = [c["prob"] for c in rep.cells if c["n"] == 200]
        assert small_n and all(p < 0.5 for p in small_n)


LEMMA_NAMES = {
    "mle_sup_error_vanishes",
    "resid_ratio_concentrates",
    "quad_form_ratio_concentrates",
    "scale_total_ratio_concentrates",
    "sigma2_interval_mass",
    "eb_ghat_stays_positive",
    "u_floor_bounded",
    "u_floor_and_cutoff_vanish",
}


class TestVerifyLemmas:
    def test_every_check_reports_once(self):
        sc = make_scenario(name="lemstruct")
        outs = verify_lemmas(sc, (100, 200), reps=3, master_seed=5)
        assert {o.name for o in outs} == LEMMA_NAMES
        for o in outs:
            if o.skipped:
                assert o.passed is None and o.reason
            else:
                assert isinstance(o.passed, bool) and o.details

    def test_fixed_regime_checks_pass_at_modest_scale(self):
        sc = make_scenario(name="lemfix", regime=FixedG(rule="n"))
        outs = verify_lemmas(sc, (250, 1000), reps=20, master_seed=20260815)
        by_name = {o.name: o for o in outs}
        for name in (
            "mle_sup_error_vanishes",
            "resid_ratio_concentrates",
            "quad_form_ratio_concentrates",
            "scale_total_ratio_concentrates",
            "sigma2_interval_mass",
            "eb_ghat_stays_positive",
            "u_floor_bounded",
        ):
            assert by_name[name].passed is True, (name, by_name[name].details)
        assert by_name["u_floor_and_cutoff_vanish"].skipped

    def test_non_fixed_regime_skips_scale_checks(self):
        sc = make_scenario(name="lemeb")
        outs = verify_lemmas(sc, (100, 200), reps=3, master_seed=5)
        by_name = {o.name: o for o in outs}
        for name in ("scale_total_ratio_concentrates", "sigma2_interval_mass"):
            assert by_name[name].skipped
            assert "fixed-g" in by_name[name].reason

    def test_matching_location_at_zero_alpha_gates_offset_checks(self):
        sc = make_scenario(
            name="lemmatch",
            alpha=0.0,
            p_rule=FixedDimension(3),
            regime=FixedG(rule=1.0),
            gamma_rule=FirstMRule(1.0, 3),
        )
        outs = verify_lemmas(sc, (50, 100), reps=3, master_seed=5)
        by_name = {o.name: o for o in outs}
        gated = by_name["quad_form_ratio_concentrates"]
        assert gated.skipped and "alpha > 0" in gated.reason
        assert by_name["eb_ghat_stays_positive"].skipped
        assert by_name["u_floor_bounded"].skipped
        assert by_name["u_floor_and_cutoff_vanish"].skipped
        assert not by_name["scale_total_ratio_concentrates"].skipped

    def test_reps_validation(self):
        with pytest.raises(ValueError, match="reps must be >= 1"):
            verify_lemmas(make_scenario(), (100,), reps=0)
