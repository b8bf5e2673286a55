import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from neutral_spectra.errors import HypothesisError, StructureError, TieToleranceWarning, ValidationError
from neutral_spectra.kernel_spec import random_birth_death
from neutral_spectra.neutral_lift import TriIndex, lift_full
from neutral_spectra.qsd import (
    CASE_CONDITIONS,
    compare_roots,
    conditional_law_exact,
    enumerate_qsd,
    extract_blocks,
    from_blocks,
    perturb_experiment,
    random_a2dmc,
    rn_asymptotics_check,
    rn_power,
    total_variation,
    yaglom_limit,
)

Q_AXIS = [[0.2, 0.1], [0.1, 0.2]]


def worked(q3=0.6):
    return from_blocks(2, Q_AXIS, Q_AXIS, [[q3]], [[0.15, 0.05]], [[0.05, 0.15]])


def qsd_residual(spec, nu, theta):
    order = spec.survival_order
    x = nu[order]
    return np.abs(x @ spec.substochastic() - theta * x).max()


class TestExtract:
    def test_neutral_axes_equal_base(self):
        spec = random_birth_death(2, 4)
        a = extract_blocks(lift_full(spec).pi)
        np.testing.assert_array_equal(a.Q1, spec.interior)
        np.testing.assert_array_equal(a.Q2, spec.interior)

    def test_worked_interior_block(self):
        a = worked()
        np.testing.assert_array_equal(a.Q3, [[0.6]])
        np.testing.assert_allclose(a.r, [0.0], atol=1e-16)

    def test_axis_leak_rejected(self):
        pi = worked().pi.copy()
        idx = TriIndex(2)
        a, b = idx.index(1, 0), idx.index(1, 1)
        pi[a, b] = 0.1
        pi[a, idx.index(0, 0)] -= 0.1
        with pytest.raises(StructureError):
            extract_blocks(pi, idx)

    def test_round_trip(self):
        a = random_a2dmc(4, 4)
        np.testing.assert_allclose(a.assemble(), a.pi, atol=1e-15)

    def test_overfull_row(self):
        with pytest.raises(ValidationError):
            from_blocks(2, Q_AXIS, Q_AXIS, [[0.9]], [[0.15, 0.05]], [[0.05, 0.15]])


class TestYaglomWorkedExample:
    def test_exact_values(self):
        rep = yaglom_limit(worked(), (1, 1))
        assert rep.case == "Coexistence"
        assert rep.condition == CASE_CONDITIONS["Coexistence"]
        np.testing.assert_allclose(rep.theta, (0.3, 0.3, 0.6), atol=1e-14)
        np.testing.assert_allclose(rep.eigen_data["w1"], [13 / 30, 7 / 30], atol=1e-14)
        np.testing.assert_allclose(rep.eigen_data["w2"], [7 / 30, 13 / 30], atol=1e-14)
        idx = rep.index
        d = rep.distribution
        assert d[idx.index(1, 1)] == pytest.approx(3 / 7, abs=1e-14)
        assert d[idx.index(1, 0)] == pytest.approx(float(Fraction(3, 7) * Fraction(13, 30)), abs=1e-14)
        assert d[idx.index(2, 0)] == pytest.approx(float(Fraction(3, 7) * Fraction(7, 30)), abs=1e-14)
        assert d.sum() == pytest.approx(1.0, abs=1e-12)

    def test_conditional_law_agrees(self):
        a = worked()
        law = conditional_law_exact(a, (1, 1), 200)
        assert total_variation(law.distribution, yaglom_limit(a, (1, 1)).distribution) < 1e-10

    def test_axis_start(self):
        rep = yaglom_limit(worked(), (2, 0))
        assert rep.case == "Axis1"
        assert rep.mass("axis1") == pytest.approx(1.0)


class TestCases:
    def test_strong_type1(self):
        a = from_blocks(2, [[0.3, 0.2], [0.2, 0.3]], Q_AXIS, [[0.4]], [[0.1, 0.1]], [[0.1, 0.1]])
        rep = yaglom_limit(a, (1, 1))
        assert rep.case == "StrongType1"
        assert rep.mass("axis1") == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(rep.distribution[a.index.axis1], [0.5, 0.5], atol=1e-12)

    def test_strong_type2_mirror(self):
        a = from_blocks(2, Q_AXIS, [[0.3, 0.2], [0.2, 0.3]], [[0.4]], [[0.1, 0.1]], [[0.1, 0.1]])
        assert yaglom_limit(a, (1, 1)).case == "StrongType2"

    def test_strong_type1_with_equal_interior_root(self):
        a = from_blocks(2, [[0.3, 0.2], [0.2, 0.3]], Q_AXIS, [[0.5]], [[0.1, 0.1]], [[0.1, 0.1]])
        assert yaglom_limit(a, (1, 1)).case == "StrongType1"

    @pytest.mark.parametrize("state", [(1, 1), (2, 3), (1, 4), (3, 1)])
    def test_neutral_split_is_fixation_probability(self, state):
        spec = random_birth_death(9, 5)
        a = extract_blocks(lift_full(spec).pi)
        rep = yaglom_limit(a, state)
        assert rep.case == "TieAboveQ3"
        i, j = state
        assert rep.p == pytest.approx(i / (i + j), abs=1e-10)
        assert rep.mass("interior") == 0.0

    def test_tie_equals_interior(self):
        rep = yaglom_limit(worked(0.3), (1, 1))
        assert rep.case == "TieEqualsQ3"
        # v3 R1 u1 = v3 R2 u2 here, so q = 1/2
        assert rep.q == pytest.approx(0.5, abs=1e-12)

    def test_tie_band_warns_and_lists_alternatives(self):
        Q2 = np.array(Q_AXIS) * (1 + 2e-8)
        a = from_blocks(2, Q_AXIS, Q2, [[0.1]], [[0.15, 0.05]], [[0.05, 0.15]])
        with pytest.warns(TieToleranceWarning):
            rep = yaglom_limit(a, (1, 1))
        assert rep.case == "TieAboveQ3"
        assert rep.alternatives == ("StrongType2",)
        assert "StrongType2" in rep.alternative_distributions

    def test_no_warning_outside_band(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            yaglom_limit(worked(), (1, 1))

    def test_periodic_block_refused(self):
        a = from_blocks(2, [[0.0, 0.5], [0.5, 0.0]], Q_AXIS, [[0.6]], [[0.15, 0.05]], [[0.05, 0.15]])
        with pytest.raises(HypothesisError, match="periodic"):
            yaglom_limit(a, (1, 1))

    def test_zero_exit_refused(self):
        a = from_blocks(2, Q_AXIS, Q_AXIS, [[0.6]], [[0.15, 0.05]], [[0.0, 0.0]])
        with pytest.raises(HypothesisError):
            yaglom_limit(a, (1, 1))

    def test_reducible_block_refused(self):
        a = from_blocks(2, [[0.2, 0.1], [0.0, 0.2]], Q_AXIS, [[0.6]], [[0.15, 0.05]], [[0.05, 0.15]])
        with pytest.raises(HypothesisError, match="irreducible"):
            yaglom_limit(a, (1, 1))

    def test_origin_rejected(self):
        with pytest.raises(ValidationError):
            yaglom_limit(worked(), (0, 0))

    def test_compare_roots(self):
        assert compare_roots(1.0, 1.0 + 1e-10) == "eq"
        assert compare_roots(1.0, 1.0 + 1e-6) == "lt"
        assert compare_roots(1.0, 1.0 + 1e-8) == "ind"


class TestQSD:
    def test_worked_enumeration(self):
        a = worked()
        e = enumerate_qsd(a)
        assert e.family and e.interior is not None
        assert e.interior.measure[a.index.index(1, 1)] == pytest.approx(3 / 7, abs=1e-14)
        for q in e.measures() + [e.mixture(0.3)]:
            assert qsd_residual(a, q.measure, q.theta) < 1e-10
            assert q.measure.sum() == pytest.approx(1.0, abs=1e-12)
            assert np.all(q.measure >= 0)

    def test_neutral_has_no_interior_qsd(self):
        a = extract_blocks(lift_full(random_birth_death(4, 5)).pi)
        e = enumerate_qsd(a)
        assert e.family and e.interior is None

    def test_mixture_requires_equal_roots(self):
        a = from_blocks(2, [[0.3, 0.2], [0.2, 0.3]], Q_AXIS, [[0.4]], [[0.1, 0.1]], [[0.1, 0.1]])
        e = enumerate_qsd(a)
        assert not e.family
        with pytest.raises(ValueError):
            e.mixture(0.5)
        # a mixture of eigenvectors with different roots is not a QSD
        nu = 0.5 * e.axis1.measure + 0.5 * e.axis2.measure
        assert qsd_residual(a, nu, e.axis1.theta) > 1e-3

    @given(st.integers(0, 2**32), st.integers(2, 4))
    def test_every_measure_is_quasi_stationary(self, seed, N):
        a = random_a2dmc(seed, N)
        e = enumerate_qsd(a)
        for q in e.measures():
            assert qsd_residual(a, q.measure, q.theta) < 1e-10
            assert np.all(q.measure >= -1e-15)
        t1, t2, t3 = e.theta
        assert (e.interior is not None) == (t3 > max(t1, t2))


class TestConditionalLaw:
    def test_zero_steps(self):
        a = worked()
        law = conditional_law_exact(a, (1, 1), 0)
        assert law.distribution[a.index.index(1, 1)] == 1.0 and law.log_mass == 0.0

    def test_one_step(self):
        a = worked()
        law = conditional_law_exact(a, (1, 1), 1)
        row = a.pi[a.index.index(1, 1)].copy()
        row[0] = 0.0
        np.testing.assert_allclose(law.distribution, row / row.sum(), atol=1e-15)

    def test_log_mass_tracks_survival(self):
        a = worked()
        law = conditional_law_exact(a, (1, 1), 50)
        Q = a.substochastic()
        x = np.zeros(len(Q))
        x[a.survival_order.index(a.index.index(1, 1))] = 1
        direct = (x @ np.linalg.matrix_power(Q, 50)).sum()
        assert law.log_mass == pytest.approx(np.log(direct), rel=1e-12)

    def test_long_horizon_does_not_underflow(self):
        law = conditional_law_exact(worked(), (1, 1), 5000)
        assert np.isfinite(law.log_mass) and law.log_mass < -2000


class TestRn:
    def test_single_term(self):
        a = worked()
        np.testing.assert_array_equal(rn_power(a, 1), a.R1)

    def test_matches_direct_sum(self):
        a = random_a2dmc(3, 3)
        n = 7
        direct = sum(np.linalg.matrix_power(a.Q3, k) @ a.R1 @ np.linalg.matrix_power(a.Q1, n - 1 - k)
                     for k in range(n))
        np.testing.assert_allclose(rn_power(a, n), direct, rtol=1e-12)

    def test_interior_regime(self):
        rep = rn_asymptotics_check(worked(), [10, 30, 60])
        assert rep.regime == "interior"
        assert rep.max_deviation[-1] < 0.02
        assert rep.max_deviation[-1] < rep.max_deviation[0]

    def test_tie_regime(self):
        rep = rn_asymptotics_check(worked(0.3), [20, 200, 2000])
        assert rep.regime == "tie"
        assert rep.max_deviation[-1] < rep.max_deviation[1] < rep.max_deviation[0]
        assert rep.max_deviation[-1] < 0.01

    def test_axis_regime(self):
        rep = rn_asymptotics_check(worked(0.1), [10, 40])
        assert rep.regime == "axis"
        assert rep.max_deviation[-1] < 1e-6


class TestPerturb:
    def test_zero_noise_is_neutral(self):
        v = perturb_experiment(random_birth_death(2, 6), 0.0, 1)
        assert v.case == "TieAboveQ3"
        assert v.theta[0] == v.theta[1]
        assert v.no_coexistence and v.margin > 0

    def test_small_noise(self):
        v = perturb_experiment(random_birth_death(2, 6), 1e-3, 5)
        assert v.no_coexistence

    def test_large_noise_runs(self):
        v = perturb_experiment(random_birth_death(2, 6), 0.5, 5)
        assert v.case in CASE_CONDITIONS

    def test_deterministic(self):
        spec = random_birth_death(2, 6)
        assert perturb_experiment(spec, 1e-2, 3) == perturb_experiment(spec, 1e-2, 3)
