"""Designs, scenario rules, simulation, diagnostics, and JSON round trips."""

import json
import math

import numpy as np
import pytest
import scipy.stats as st
from hypothesis import given
from hypothesis import strategies as hst

from gprior_lab.model_core import (
    ConstantRule,
    DecayingRule,
    DesignSpec,
    Diagnostics,
    FirstMRule,
    FixedDimension,
    LinearDimension,
    PriorConstants,
    Scenario,
    ScenarioError,
    ScaledNormRule,
    SqrtDimension,
    ZerosRule,
    build_design,
    diagnostics,
    load_scenario,
    mle_sup_error,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    simulate_stats,
)
from gprior_lab.model_core import EmpiricalBayesG, FixedG, HyperG, ZellnerSiowG
from gprior_lab.numerics import RngStream

from conftest import axis_stats, make_scenario, simulate_scenario_stats

PRIOR = PriorConstants()


# ---------------------------------------------------------------------------
# prior constants and design specs


class TestPriorConstants:
    def test_defaults_allowed(self):
        pr = PriorConstants()
        assert pr.a == 0.0 and pr.b == 0.0

    def test_a_floor(self):
        PriorConstants(a=-2.0)  # boundary allowed
        with pytest.raises(ScenarioError):
            PriorConstants(a=-2.1)

    def test_b_nonnegative(self):
        with pytest.raises(ScenarioError):
            PriorConstants(b=-0.5)


class TestDesignSpec:
    def test_orthogonal_eigenvalues(self):
        gram = build_design(DesignSpec.orthogonal(), 10, 3, RngStream(0, ("d",)))
        assert gram.q is None
        assert np.array_equal(gram.eigenvalues, np.full(3, 10.0))

    def test_diagonal_eigenvalues_tile(self):
        spec = DesignSpec.diagonal((0.5, 1.0), lambda_min=0.5, lambda_max=2.0)
        gram = build_design(spec, 4, 2, RngStream(0, ("d",)))
        assert np.allclose(sorted(gram.eigenvalues), [2.0, 4.0])
        assert gram.q is not None and gram.q.shape == (2, 2)

    def test_diagonal_spectrum_outside_band(self):
        with pytest.raises(ScenarioError):
            DesignSpec.diagonal((2.0,), lambda_min=1.0, lambda_max=1.0)

    def test_unknown_kind(self):
        with pytest.raises(ScenarioError):
            DesignSpec(kind="sparse")

    def test_band_ordering(self):
        with pytest.raises(ScenarioError):
            DesignSpec.diagonal((1.0,), lambda_min=2.0, lambda_max=1.0)

    def test_p_must_be_below_n(self):
        with pytest.raises(ScenarioError, match="p < n"):
            build_design(DesignSpec.orthogonal(), 5, 5, RngStream(0, ("d",)))

    def test_rotation_is_orthonormal(self):
        spec = DesignSpec.diagonal((0.5, 0.8, 1.0), lambda_min=0.5, lambda_max=2.0)
        gram = build_design(spec, 30, 6, RngStream(3, ("d",)))
        assert np.allclose(gram.q @ gram.q.T, np.eye(6), atol=1e-12)

    def test_rotation_deterministic_in_stream(self):
        spec = DesignSpec.diagonal((0.5, 1.0), lambda_min=0.5, lambda_max=2.0)
        g1 = build_design(spec, 8, 4, RngStream(9, ("d",)))
        g2 = build_design(spec, 8, 4, RngStream(9, ("d",)))
        assert np.array_equal(g1.q, g2.q)


# ---------------------------------------------------------------------------
# coefficient and dimension rules


class TestRules:
    def test_first_m(self):
        vals = FirstMRule(2.0, 2).values(10, 5)
        assert np.array_equal(vals, [2.0, 2.0, 0.0, 0.0, 0.0])

    def test_first_m_exceeding_p(self):
        with pytest.raises(ScenarioError):
            FirstMRule(1.0, 5).values(10, 3)

    def test_scaled_norm_fixed_target(self):
        vals = ScaledNormRule(9.0).values(100, 4)
        assert float(vals @ vals) == pytest.approx(9.0, rel=1e-12)

    def test_scaled_norm_sqrt_n(self):
        vals = ScaledNormRule("sqrt_n").values(400, 10)
        assert float(vals @ vals) == pytest.approx(20.0, rel=1e-12)

    def test_decaying_rule(self):
        vals = DecayingRule(2.0, 0.5).values(50, 3)
        assert np.allclose(vals, [2.0, 2.0 / math.sqrt(2.0), 2.0 / math.sqrt(3.0)])

    def test_zeros_and_constant(self):
        assert np.array_equal(ZerosRule().values(10, 3), np.zeros(3))
        assert np.array_equal(ConstantRule(1.5).values(10, 3), np.full(3, 1.5))

    def test_linear_dimension(self):
        rule = LinearDimension()
        assert rule.p_at(200, 0.5) == 100
        assert rule.p_at(200, 0.0) == 1  # floor, at least one covariate
        assert rule.p_at(3, 0.9) == 2  # capped at n - 1

    def test_sqrt_dimension(self):
        assert SqrtDimension().p_at(400, 0.0) == 20
        assert SqrtDimension().p_at(401, 0.0) == 21

    def test_fixed_dimension(self):
        assert FixedDimension(7).p_at(1000, 0.0) == 7
        with pytest.raises(ScenarioError):
            FixedDimension(0)


# ---------------------------------------------------------------------------
# scenario validation


class TestScenario:
    def test_alpha_domain_message(self):
        with pytest.raises(ScenarioError, match=r"\(A2\)"):
            make_scenario(alpha=1.0)

    def test_sigma0_positive(self):
        with pytest.raises(ScenarioError):
            make_scenario(sigma0_sq=0.0)

    def test_name_nonempty(self):
        with pytest.raises(ScenarioError):
            make_scenario(name="")

    def test_p_at_small_n(self):
        sc = make_scenario()
        with pytest.raises(ScenarioError):
            sc.p_at(1)

    def test_validate_grid_ordering(self):
        sc = make_scenario()
        with pytest.raises(ScenarioError):
            sc.validate_grid((400, 200))

    def test_validate_grid_empty(self):
        sc = make_scenario()
        with pytest.raises(ScenarioError):
            sc.validate_grid(())

    def test_validate_grid_eb_needs_spare_df(self):
        # n - p + a - 2 <= 0 at n = 2, p = 1, a = 0
        sc = make_scenario(regime=EmpiricalBayesG(), p_rule=FixedDimension(1))
        with pytest.raises(ScenarioError):
            sc.validate_grid((2,))

    def test_fixed_negative_g_rejected_at_construction(self):
        with pytest.raises(ValueError):
            FixedG(rule=-1.0)

    def test_hyper_g_needs_c_above_2(self):
        with pytest.raises(ValueError, match="proper"):
            HyperG(c=2.0)


# ---------------------------------------------------------------------------
# simulation


class TestSimulateStats:
    def test_shapes_and_dimension(self):
        sc = make_scenario()
        stats = simulate_scenario_stats(sc, 200, 5)
        assert stats.n == 200 and stats.p == 100
        assert stats.beta_hat.shape == (100,)
        assert stats.gram.eigenvalues.shape == (100,)
        assert stats.resid_ss >= 0.0

    def test_deterministic_given_stream(self):
        sc = make_scenario()
        s1 = simulate_scenario_stats(sc, 100, 7)
        s2 = simulate_scenario_stats(sc, 100, 7)
        assert np.array_equal(s1.beta_hat, s2.beta_hat)
        assert s1.resid_ss == s2.resid_ss

    def test_unknown_mode(self):
        sc = make_scenario()
        with pytest.raises(ScenarioError):
            simulate_stats(sc, 100, RngStream(0, ("x",)), mode="bootstrap")

    def test_resid_scale(self):
        # S / ((n - p) sigma0^2) concentrates at 1
        sc = make_scenario(sigma0_sq=2.0)
        n, p = 2000, 1000
        ratios = [
            simulate_scenario_stats(sc, n, 11, rep=r).resid_ss / ((n - p) * 2.0)
            for r in range(200)
        ]
        assert 0.9 < float(np.mean(ratios)) < 1.1

    def test_beta_hat_distribution(self):
        # orthogonal design: beta_hat_i ~ N(beta0_i, sigma0^2 / n)
        sc = make_scenario(sigma0_sq=1.5)
        n = 400
        draws = np.array([simulate_scenario_stats(sc, n, 13, rep=r).beta_hat[0] for r in range(2000)])
        ks = st.kstest(draws, st.norm(loc=1.0, scale=math.sqrt(1.5 / n)).cdf).statistic
        assert ks < 0.05

    def test_direct_and_full_modes_agree_in_law(self):
        sc = make_scenario(alpha=0.25, sigma0_sq=1.5)
        b1d, b1f, sd, sf = [], [], [], []
        for r in range(2000):
            std = simulate_stats(sc, 40, RngStream(31, (sc.name, 40, r)).child("sim"), mode="direct")
            stf = simulate_stats(sc, 40, RngStream(32, (sc.name, 40, r)).child("sim"), mode="full")
            b1d.append(std.beta_hat[0])
            b1f.append(stf.beta_hat[0])
            sd.append(std.resid_ss)
            sf.append(stf.resid_ss)
        assert st.ks_2samp(b1d, b1f).statistic < 0.05
        assert st.ks_2samp(sd, sf).statistic < 0.05

    def test_full_mode_rotated_design(self):
        spec = DesignSpec.diagonal((0.5, 1.0), lambda_min=0.5, lambda_max=2.0)
        sc = make_scenario(design=spec, alpha=0.25)
        stats = simulate_scenario_stats(sc, 16, 3, mode="full")
        assert stats.gram.q is not None
        assert stats.resid_ss >= 0.0


# ---------------------------------------------------------------------------
# mle sup error


class TestMleSupError:
    def test_literal(self):
        stats = axis_stats(10, [0.1, -0.3], 1.0)
        assert mle_sup_error(stats, np.zeros(2)) == pytest.approx(0.3)

    def test_zero_at_truth(self):
        stats = axis_stats(10, [0.4, -0.2], 1.0)
        assert mle_sup_error(stats, np.array([0.4, -0.2])) == 0.0

    def test_median_shrinks_at_scale(self):
        sc = make_scenario()
        n = 4000
        beta0 = sc.beta0_at(n)
        errs = [
            mle_sup_error(simulate_scenario_stats(sc, n, 17, rep=r), beta0)
            for r in range(100)
        ]
        assert float(np.median(errs)) < 0.12


# ---------------------------------------------------------------------------
# diagnostics


class TestDiagnostics:
    def test_u_floor_literal(self):
        # resid_plus_b = 3 and quad_form = 1 gives u_floor = 0.75
        stats = axis_stats(4, [1.0], 3.0, eigenvalues=[1.0])
        diag = diagnostics(stats, np.zeros(1), PRIOR)
        assert diag.quad_form == pytest.approx(1.0)
        assert diag.u_floor == pytest.approx(0.75)

    def test_scale_total_at_zero(self):
        stats = axis_stats(4, [1.0], 3.0, eigenvalues=[1.0])
        diag = diagnostics(stats, np.zeros(1), PRIOR)
        assert diag.scale_total(0.0) == pytest.approx(4.0)

    def test_gamma_match_pins_u_floor(self):
        stats = axis_stats(10, [0.5, -0.5], 2.0)
        diag = diagnostics(stats, np.array([0.5, -0.5]), PRIOR)
        assert diag.quad_form == 0.0
        assert diag.u_floor == 1.0

    def test_gamma_shape_checked(self):
        stats = axis_stats(10, [0.5, -0.5], 2.0)
        with pytest.raises(ScenarioError):
            diagnostics(stats, np.zeros(3), PRIOR)

    def test_orthogonal_quad_form_identity(self):
        # with all eigenvalues n: quad_form = n ||beta_hat - gamma||^2
        sc = make_scenario()
        stats = simulate_scenario_stats(sc, 200, 23)
        gamma = sc.gamma_at(200)
        diag = diagnostics(stats, gamma, PRIOR, truth=sc.truth_at(200))
        d = stats.beta_hat - gamma
        assert diag.quad_form == pytest.approx(200.0 * float(d @ d), rel=1e-10)
        assert diag.offset_eigenvalue == pytest.approx(1.0, rel=1e-10)

    def test_offset_fields_need_truth(self):
        sc = make_scenario()
        stats = simulate_scenario_stats(sc, 200, 23)
        diag = diagnostics(stats, sc.gamma_at(200), PRIOR)
        assert diag.offset_sup is None and diag.offset_eigenvalue is None

    def test_quad_form_mean_matches_expectation(self):
        sc = make_scenario(sigma0_sq=2.0)
        n = 500
        gamma = sc.gamma_at(n)
        truth = sc.truth_at(n)
        vals, expected = [], None
        for r in range(500):
            stats = simulate_scenario_stats(sc, n, 29, rep=r)
            diag = diagnostics(stats, gamma, PRIOR, truth=truth)
            vals.append(diag.quad_form)
            expected = diag.expected_quadform
        # quad_form / sigma0^2 is noncentral chi-square; use its exact sd
        p = sc.p_at(n)
        nc = expected / 2.0 - p  # noncentrality in the mean = p + 2 nc convention
        sd = 2.0 * math.sqrt(2.0 * p + 8.0 * nc)
        assert abs(float(np.mean(vals)) - expected) <= 4.0 * sd / math.sqrt(500)

    def test_threshold_and_cutoff_need_truth(self):
        stats = axis_stats(10, [0.5, -0.5], 2.0)
        diag = diagnostics(stats, np.zeros(2), PRIOR)
        with pytest.raises(ValueError, match="truth"):
            diag.g_threshold(0.1)
        with pytest.raises(ValueError, match="truth"):
            diag.u_cutoff(0.1)

    def test_cutoff_at_least_floor_and_monotone(self):
        sc = make_scenario(sigma0_sq=2.0)
        stats = simulate_scenario_stats(sc, 200, 31)
        diag = diagnostics(stats, sc.gamma_at(200), PRIOR, truth=sc.truth_at(200))
        cutoffs = [diag.u_cutoff(eps) for eps in (0.05, 0.1, 0.5, 1.0)]
        assert all(c >= diag.u_floor for c in cutoffs)
        # larger eps demands less shrinkage: cutoff nonincreasing in eps
        assert all(cutoffs[i + 1] <= cutoffs[i] + 1e-15 for i in range(len(cutoffs) - 1))

    @given(hst.integers(min_value=0, max_value=2**31 - 1))
    def test_invariants_on_random_draws(self, seed):
        sc = make_scenario(sigma0_sq=2.0)
        stats = simulate_scenario_stats(sc, 50, seed)
        diag = diagnostics(stats, sc.gamma_at(50), PRIOR, truth=sc.truth_at(50))
        assert diag.quad_form >= 0.0
        assert 0.0 < diag.u_floor <= 1.0
        assert diag.g_threshold(0.3) >= 0.0
        assert diag.u_floor <= diag.u_cutoff(0.3) <= 1.0


# ---------------------------------------------------------------------------
# scenario (de)serialization


class TestScenarioJson:
    def test_round_trip(self, tmp_path):
        sc = make_scenario(
            name="roundtrip",
            regime=HyperG(c=3.0),
            beta0_rule=ScaledNormRule("sqrt_n"),
            p_rule=SqrtDimension(),
            alpha=0.0,
        )
        path = tmp_path / "scenario.json"
        save_scenario(sc, path)
        back = load_scenario(path)
        assert back == sc

    def test_round_trip_all_regimes(self, tmp_path):
        for k, regime in enumerate((FixedG(rule="n"), FixedG(rule=2.5), EmpiricalBayesG(), HyperG(c=4.0), ZellnerSiowG())):
            sc = make_scenario(name=f"r{k}", regime=regime)
            path = tmp_path / f"r{k}.json"
            save_scenario(sc, path)
            assert load_scenario(path) == sc

    def test_unknown_key_rejected(self):
        doc = scenario_to_dict(make_scenario())
        doc["extra_knob"] = 1
        with pytest.raises(ScenarioError):
            scenario_from_dict(doc)

    def test_wrong_schema_version(self):
        doc = scenario_to_dict(make_scenario())
        doc["schema_version"] = 2
        with pytest.raises(ScenarioError):
            scenario_from_dict(doc)

    def test_missing_required_key(self):
        doc = scenario_to_dict(make_scenario())
        del doc["regime"]
        with pytest.raises(ScenarioError):
            scenario_from_dict(doc)

    def test_malformed_json_reports_position(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"schema_version": 1,\n  "alpha": }')
        with pytest.raises(ScenarioError, match=r"line \d+, column \d+"):
            load_scenario(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError, match="cannot read"):
            load_scenario(tmp_path / "absent.json")

    def test_unknown_rule_kind_rejected(self):
        doc = scenario_to_dict(make_scenario())
        doc["beta0_rule"] = {"kind": "mystery"}
        with pytest.raises(ScenarioError):
            scenario_from_dict(doc)

    def test_dict_is_json_serializable(self):
        doc = scenario_to_dict(make_scenario(regime=ZellnerSiowG()))
        json.dumps(doc)  # must not raise
        assert doc["schema_version"] == 1
