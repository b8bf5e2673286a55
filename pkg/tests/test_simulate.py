import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import chisquare

from neutral_spectra.errors import NoSurvivors, ValidationError
from neutral_spectra.kernel_spec import random_birth_death, random_kernel
from neutral_spectra.neutral_lift import lift_full
from neutral_spectra.qsd import conditional_law_exact, from_blocks, total_variation
from neutral_spectra.rng import GOLDEN, Stream, mix64, stream_key, stream_keys, uniform, uniform_block
from neutral_spectra.simulate import (
    SimConfig,
    cdf_rows,
    run_paths,
    sample_conditional,
    step_general,
    step_neutral,
    worker_count,
)

Q_AXIS = [[0.2, 0.1], [0.1, 0.2]]


def worked():
    return from_blocks(2, Q_AXIS, Q_AXIS, [[0.6]], [[0.15, 0.05]], [[0.05, 0.15]])


class TestRng:
    def test_reference_vectors(self):
        # SplitMix64 reference outputs (state incremented by GOLDEN before mixing)
        assert mix64(GOLDEN) == 0xE220A8397B1DCDAF
        assert mix64(1234567 + GOLDEN) == 6457827717110365317
        assert mix64(1234567 + 2 * GOLDEN) == 3203168211198807973

    @given(st.integers(0, 2**64 - 1), st.integers(0, 10**6), st.integers(0, 10**6))
    def test_vector_matches_scalar(self, seed, stream, counter):
        keys = stream_keys(seed, np.array([stream]))
        assert int(keys[0]) == stream_key(seed, stream)
        assert uniform_block(keys, counter, 3)[0, 0] == uniform(seed, stream, counter)

    def test_stream_sequence(self):
        s = Stream(9, 4)
        a = s.next_block(5)
        assert a == [uniform(9, 4, c) for c in range(5)]
        assert s.counter == 5

    def test_range(self):
        u = uniform_block(stream_keys(1, np.arange(1000)), 0, 50)
        assert u.min() >= 0.0 and u.max() < 1.0
        assert abs(u.mean() - 0.5) < 0.005


class TestSteps:
    def test_axis_stays_on_axis(self):
        spec = random_kernel(4, 6)
        cdf = cdf_rows(spec.rows)
        rng = Stream(1)
        state = (3, 0)
        for _ in range(200):
            state = step_neutral(spec, state, rng, cdf)
            assert state[1] == 0

    def test_origin_absorbs(self):
        spec = random_kernel(4, 6)
        rng = Stream(1)
        assert step_neutral(spec, (0, 0), rng) == (0, 0)
        assert step_general(worked(), (0, 0), rng) == (0, 0)

    def test_deterministic_row(self):
        a = from_blocks(2, [[0.0, 1.0], [1.0, 0.0]], Q_AXIS, [[0.6]], [[0.15, 0.05]], [[0.05, 0.15]])
        assert step_general(a, (1, 0), Stream(3)) == (2, 0)

    def test_cdf_pinned(self):
        C = cdf_rows(np.array([[0.1, 0.2, 0.7, 0.0]]))
        assert C[0, 2] == 1.0 and C[0, 3] == 1.0

    @pytest.mark.parametrize("kind", ["neutral", "general"])
    def test_scalar_and_batch_paths_agree(self, kind):
        if kind == "neutral":
            spec = random_kernel(8, 5)
            cdf = cdf_rows(spec.rows)
            step, init = step_neutral, (2, 2)
            index = lift_full(spec).index
        else:
            spec = worked()
            cdf = cdf_rows(spec.pi)
            step, init = step_general, (1, 1)
            index = spec.index
        cfg = SimConfig(seed=17, trials=300, horizon=12, initial=init)
        batch = run_paths(spec, cfg, 0, 300)
        for t in range(300):
            rng = Stream(17, t)
            s = init
            for _ in range(12):
                s = step(spec, s, rng, cdf)
            assert index.index(*s) == batch[t]


class TestOneStepLaw:
    def test_neutral_row_total_variation(self):
        spec = random_kernel(6, 5)
        chain = lift_full(spec)
        res = _one_step_counts(spec, (2, 1), 10**6)
        emp = res / res.sum()
        assert total_variation(emp, chain.pi[chain.index.index(2, 1)]) < 3e-3

    def test_general_row_total_variation(self):
        a = worked()
        cfg = SimConfig(5, 10**6, 1, (1, 1))
        counts = np.bincount(run_paths(a, cfg, 0, 10**6), minlength=a.index.size)
        assert total_variation(counts / 10**6, a.pi[a.index.index(1, 1)]) < 3e-3

    def test_chi_square_every_state(self):
        spec = random_birth_death(10, 5)
        chain = lift_full(spec)
        n = 10**6
        for a, state in enumerate(chain.index.states):
            counts = _one_step_counts(spec, state, n)
            row = chain.pi[a]
            support = row > 0
            assert counts[~support].sum() == 0
            if support.sum() < 2:
                continue
            exp = row[support] * n
            p = chisquare(counts[support], exp * counts[support].sum() / exp.sum()).pvalue
            assert p > 1e-4, (state, p)


def _one_step_counts(spec, state, n):
    cfg = SimConfig(seed=hash(state) & 0xFFFF, trials=n, horizon=1, initial=state)
    size = lift_full(spec).index.size
    parts = [np.bincount(run_paths(spec, cfg, s, min(1 << 17, n - s)), minlength=size)
             for s in range(0, n, 1 << 17)]
    return np.sum(parts, axis=0)


class TestSampleConditional:
    def test_horizon_zero(self):
        res = sample_conditional(worked(), SimConfig(1, 100, 0, (1, 1)))
        assert res.distribution[res.index.index(1, 1)] == 1.0
        assert res.survivors == 100

    def test_no_survivors(self):
        with pytest.raises(NoSurvivors):
            sample_conditional(worked(), SimConfig(1, 1000, 60, (1, 1)))

    def test_bad_initial(self):
        with pytest.raises(ValidationError):
            sample_conditional(worked(), SimConfig(1, 10, 1, (3, 0)))

    def test_worker_independence(self):
        spec = random_birth_death(3, 5)
        cfg = SimConfig(11, 150_000, 15, (2, 2))
        a = sample_conditional(spec, cfg, workers=1)
        b = sample_conditional(spec, cfg, workers=4)
        assert np.array_equal(a.counts, b.counts)
        assert a.to_dict() == b.to_dict()

    def test_matches_exact_conditional_law(self):
        a = worked()
        n = 4
        res = sample_conditional(a, SimConfig(2, 10**6, n, (1, 1)))
        law = conditional_law_exact(a, (1, 1), n)
        assert total_variation(res.distribution, law.distribution) < 5e-3
        # survivor fraction against the exact survival probability, 5 sigma
        p = np.exp(law.log_mass)
        sd = np.sqrt(p * (1 - p) / 10**6)
        assert abs(res.survivors / 10**6 - p) < 5 * sd

    def test_thread_env(self, monkeypatch):
        monkeypatch.setenv("NEUTRAL_SPECTRA_THREADS", "3")
        assert worker_count() == 3
        monkeypatch.setenv("NEUTRAL_SPECTRA_THREADS", "x")
        with pytest.raises(ValidationError):
            worker_count()

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            SimConfig(1, 0, 1, (1, 1))
        with pytest.raises(ValidationError):
            SimConfig(1, 1, -1, (1, 1))
