import math

import numpy as np
import pytest

from fdual.errors import InfiniteRisk, MismatchedPair
from fdual.losses import catalog_generator, catalog_loss
from fdual.measures import (JointMeasure, Priors, bayes_risk, f_divergence,
                            named_divergence, random_measure)
from fdual.risk import (RiskReport, closed_form_discriminant,
                        optimal_phi_risk, phi_risk, verify_correspondence,
                        zero_one_risk)

CONVEX_NAMES = ("hinge", "exponential", "logistic", "least_squares", "sym_kl")


class TestPhiRisk:
    def test_hinge_worked_example(self, m_standard):
        val = phi_risk(catalog_loss("hinge"), np.array([1.0, -1.0]), m_standard)
        assert val == pytest.approx(0.6, abs=1e-12)

    def test_constant_zero_discriminant(self, m_standard, rng):
        for name in CONVEX_NAMES:
            phi = catalog_loss(name)
            val = phi_risk(phi, np.zeros(2), m_standard)
            assert val == pytest.approx(phi(0.0), abs=1e-12)

    def test_exponential_at_its_optimum(self, m_standard):
        gamma = np.array([0.5 * math.log(3.0), 0.5 * math.log(0.5)])
        val = phi_risk(catalog_loss("exponential"), gamma, m_standard)
        assert val == pytest.approx(0.9120955864630135, abs=1e-6)

    def test_infinite_term_raises(self, m_standard):
        with pytest.raises(InfiniteRisk):
            phi_risk(catalog_loss("sym_kl"), np.array([math.inf, 0.0]),
                     m_standard)

    def test_length_mismatch(self, m_standard):
        with pytest.raises(ValueError):
            phi_risk(catalog_loss("hinge"), np.zeros(3), m_standard)


class TestOptimalPhiRisk:
    def test_hinge_equals_one_minus_variational(self, m_standard):
        val, gamma = optimal_phi_risk(catalog_loss("hinge"), m_standard)
        assert val == pytest.approx(0.6, abs=1e-9)
        np.testing.assert_allclose(gamma, [1.0, -1.0], atol=1e-6)

    def test_logistic_matches_capacity_route(self, m_standard):
        val, _ = optimal_phi_risk(catalog_loss("logistic"), m_standard)
        want = math.log(2.0) - named_divergence("capacitory", m_standard)
        assert val == pytest.approx(want, abs=1e-8)

    def test_least_squares_on_equal_measures(self):
        m = JointMeasure([0.25, 0.25], [0.25, 0.25], Priors(0.5, 0.5))
        val, _ = optimal_phi_risk(catalog_loss("least_squares"), m)
        assert val == pytest.approx(1.0, abs=1e-9)

    def test_smallest_minimizer_reported_on_plateau(self):
        # equal masses leave the whole interval [-1, 1] optimal for the
        # hinge; the documented tie rule picks the left end
        m = JointMeasure([0.25, 0.25], [0.25, 0.25], Priors(0.5, 0.5))
        _, gamma = optimal_phi_risk(catalog_loss("hinge"), m)
        np.testing.assert_allclose(gamma, [-1.0, -1.0], atol=1e-6)

    def test_shuffling_bins_leaves_value_unchanged(self, rng):
        for name in CONVEX_NAMES:
            phi = catalog_loss(name)
            m = random_measure(rng, 6)
            perm = rng.permutation(6)
            m2 = JointMeasure(m.mu[perm], m.pi[perm], m.priors)
            v1, _ = optimal_phi_risk(phi, m)
            v2, _ = optimal_phi_risk(phi, m2)
            assert v1 == pytest.approx(v2, abs=1e-10)

    def test_concave_in_the_measure(self, rng):
        phi = catalog_loss("logistic")
        pr = Priors(0.5, 0.5)
        for _ in range(10):
            m1 = random_measure(rng, 4, pr)
            m2 = random_measure(rng, 4, pr)
            lam = float(rng.uniform(0.2, 0.8))
            mix = JointMeasure(lam * m1.mu + (1 - lam) * m2.mu,
                               lam * m1.pi + (1 - lam) * m2.pi, pr)
            v_mix, _ = optimal_phi_risk(phi, mix)
            v1, _ = optimal_phi_risk(phi, m1)
            v2, _ = optimal_phi_risk(phi, m2)
            assert v_mix >= lam * v1 + (1 - lam) * v2 - 1e-10


class TestClosedFormDiscriminants:
    def test_exponential_half_log_ratio(self, m_standard):
        gamma = closed_form_discriminant("exponential", m_standard)
        np.testing.assert_allclose(gamma, [0.5493061443340549,
                                           -0.34657359027997264], atol=1e-12)

    def test_least_squares_vanishes_on_equal_measures(self):
        m = JointMeasure([0.2, 0.3], [0.2, 0.3], Priors(0.5, 0.5))
        np.testing.assert_allclose(
            closed_form_discriminant("least_squares", m), [0.0, 0.0],
            atol=1e-15)

    def test_sign_rule_with_tie_to_minus_one(self, m_standard):
        np.testing.assert_allclose(
            closed_form_discriminant("hinge", m_standard), [1.0, -1.0])
        m = JointMeasure([0.2, 0.3], [0.2, 0.3], Priors(0.5, 0.5))
        np.testing.assert_allclose(closed_form_discriminant("hinge", m),
                                   [-1.0, -1.0])

    @pytest.mark.parametrize("name", ["hinge", "exponential", "logistic",
                                      "least_squares"])
    def test_closed_forms_attain_the_optimum(self, name, rng):
        phi = catalog_loss(name)
        for _ in range(15):
            m = random_measure(rng, int(rng.integers(2, 8)))
            gamma = closed_form_discriminant(name, m)
            opt, _ = optimal_phi_risk(phi, m)
            assert phi_risk(phi, gamma, m) == pytest.approx(opt, abs=1e-8)


class TestCorrespondence:
    @pytest.mark.parametrize("name", CONVEX_NAMES)
    def test_optimal_risk_is_negative_divergence(self, name, rng):
        phi = catalog_loss(name)
        f = catalog_generator(name)
        for _ in range(20):
            m = random_measure(rng, int(rng.integers(2, 9)))
            opt, _ = optimal_phi_risk(phi, m)
            assert abs(opt + f_divergence(f, m)) <= 1e-6

    def test_report_contents(self, m_standard):
        rep = verify_correspondence(catalog_loss("hinge"),
                                    catalog_generator("hinge"), m_standard)
        assert rep.passed
        assert rep.correspondence_residual <= 1e-6
        assert rep.bayes_risk_of_q == pytest.approx(bayes_risk(m_standard))
        assert rep.bayes_risk_of_pair >= rep.bayes_risk_of_q - 1e-12
        assert rep.phi_risk >= rep.optimal_phi_risk - 1e-9

    def test_mismatched_pair_rejected(self, m_standard):
        with pytest.raises(MismatchedPair):
            verify_correspondence(catalog_loss("hinge"),
                                  catalog_generator("exponential"), m_standard)

    def test_csv_row_schema(self, m_standard):
        rep = verify_correspondence(catalog_loss("hinge"),
                                    catalog_generator("hinge"), m_standard)
        assert RiskReport.csv_header() == "loss,divergence,R_phi_opt,I_f,residual,pass"
        row = rep.to_csv_row().split(",")
        assert row[0] == "hinge" and row[-1] == "true"


class TestZeroOneRisk:
    def test_sign_convention_counts_zero_as_negative(self, m_standard):
        # gamma = 0 predicts the negative class, erring on the positive mass
        assert zero_one_risk(np.zeros(2), m_standard) == pytest.approx(0.5)
        assert zero_one_risk(np.array([1.0, -1.0]), m_standard) == \
            pytest.approx(0.3)
