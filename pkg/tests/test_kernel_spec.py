import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from neutral_spectra.errors import NotReversible, ValidationError
from neutral_spectra.kernel_spec import (
    birth_death,
    from_rows,
    random_birth_death,
    random_kernel,
    reversible_measure,
)


class TestFromRows:
    def test_identity_is_valid(self):
        spec = from_rows(np.eye(3))
        assert spec.N == 2

    def test_state_zero_must_absorb(self):
        rows = [[0.9, 0.1, 0], [0, 1, 0], [0, 0, 1]]
        with pytest.raises(ValidationError, match="state 0 not absorbing"):
            from_rows(rows)

    def test_row_sum_reported(self):
        rows = [[1, 0, 0], [0, 1, 0], [0, 0.5, 0.48]]
        with pytest.raises(ValidationError, match="row 2 sums to 0.98"):
            from_rows(rows)

    def test_non_square(self):
        with pytest.raises(ValidationError):
            from_rows([[1, 0], [0, 1], [0, 1]])

    def test_negative_entry(self):
        with pytest.raises(ValidationError, match="not a probability"):
            from_rows([[1, 0], [1.1, -0.1]])

    def test_immutable(self):
        spec = from_rows(np.eye(3))
        with pytest.raises(ValueError):
            spec.rows[1, 1] = 0.5


class TestBirthDeath:
    def test_example(self):
        spec = birth_death([0.3, 0], [0.2, 0.4], 2)
        np.testing.assert_allclose(spec.rows, [[1, 0, 0], [0.2, 0.5, 0.3], [0, 0.4, 0.6]], atol=1e-15)

    def test_zero_rates_give_identity(self):
        spec = birth_death([0, 0, 0], [0, 0, 0], 3)
        assert np.array_equal(spec.rows, np.eye(4))

    def test_super_unit(self):
        with pytest.raises(ValidationError):
            birth_death([0.6, 0], [0.5, 0.2], 2)

    def test_top_birth_must_vanish(self):
        with pytest.raises(ValidationError):
            birth_death([0.1, 0.1], [0.1, 0.1], 2)


class TestReversibleMeasure:
    def test_birth_death_example(self):
        mu = reversible_measure(birth_death([0.3, 0], [0.2, 0.4], 2))
        np.testing.assert_allclose(mu.mu, [1.0, 0.75], rtol=1e-15)
        assert mu[2] == pytest.approx(0.75)

    def test_identity_gives_ones(self):
        mu = reversible_measure(from_rows(np.eye(4)))
        assert np.array_equal(mu.mu, np.ones(3))

    def test_cycle_violating_kolmogorov(self):
        rows = np.array([
            [1, 0, 0, 0],
            [0.1, 0.3, 0.4, 0.2],
            [0, 0.1, 0.4, 0.5],
            [0, 0.5, 0.1, 0.4],
        ])
        # p12 p23 p31 = 0.4*0.5*0.5 != p13 p32 p21 = 0.2*0.1*0.1
        with pytest.raises(NotReversible):
            reversible_measure(from_rows(rows))

    @given(st.integers(0, 2**32), st.integers(1, 12))
    def test_birth_death_always_reversible(self, seed, N):
        spec = random_birth_death(seed, N)
        mu = reversible_measure(spec)
        P = spec.interior
        flow = mu.mu[:, None] * P
        np.testing.assert_allclose(flow, flow.T, rtol=1e-10, atol=0)
        assert np.all(mu.mu > 0)


class TestRandomKernel:
    def test_deterministic(self):
        assert random_kernel(1, 4) == random_kernel(1, 4)

    def test_rows_sum_to_one(self):
        spec = random_kernel(1, 4)
        np.testing.assert_allclose(spec.rows.sum(axis=1), 1.0, atol=1e-12)

    def test_seeds_differ(self):
        assert random_kernel(1, 4) != random_kernel(2, 4)

    @given(st.integers(0, 2**32), st.integers(2, 10))
    def test_absorption_and_band(self, seed, N):
        spec = random_kernel(seed, N, 0.2)
        assert spec.rows[1:, 0].max() >= 0.2 / N
        assert all(spec.rows[n, n - 1] > 0 for n in range(2, N + 1))
