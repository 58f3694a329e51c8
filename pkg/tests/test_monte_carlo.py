import math

import numpy as np
import pytest

from asvlab.asv_core import ALPHA_ONE, alpha_complex
from asvlab.errors import DomainError
from asvlab.monte_carlo import (
    DEFAULT_SEED,
    Field,
    McConfig,
    Statistic,
    chi_square_density_test,
    eigenvalue_sample,
    estimate,
    estimate_all,
    ratio_check,
    real_case_bound_check,
    sample_matrix,
    singular_values,
    trial_singular_values,
)


def entries(field, trials=100_000, seed=11):
    cfg = McConfig(d=1, trials=trials, seed=seed, field=field)
    return np.array([sample_matrix(cfg, i)[0, 0] for i in range(trials)])


class TestSampling:
    def test_complex_moments(self):
        z = entries(Field.COMPLEX)
        sq = np.abs(z) ** 2
        assert abs(sq.mean() - 1) <= 3 * sq.std(ddof=1) / math.sqrt(z.size)
        for part in (z.real, z.imag):
            assert abs(part.mean()) <= 3 * part.std(ddof=1) / math.sqrt(z.size)
            assert part.var() == pytest.approx(0.5, rel=0.02)
        mod = np.abs(z)
        assert abs(mod.mean() - ALPHA_ONE) <= 3 * mod.std(ddof=1) / math.sqrt(z.size)

    def test_real_moments(self):
        x = entries(Field.REAL).real
        assert abs(x.mean()) <= 3 * x.std(ddof=1) / math.sqrt(x.size)
        assert x.var() == pytest.approx(1.0, rel=0.02)

    def test_deterministic_per_trial(self):
        cfg = McConfig(d=5, trials=200, seed=99)
        a = sample_matrix(cfg, 17)
        b = sample_matrix(McConfig(d=5, trials=10_000, seed=99), 17)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, sample_matrix(cfg, 18))

    def test_trial_index_range(self):
        with pytest.raises(DomainError):
            sample_matrix(McConfig(d=2, trials=100), 100)


class TestSingularValues:
    def test_identity(self):
        np.testing.assert_allclose(singular_values(math.sqrt(6) * np.eye(6)), np.ones(6), rtol=1e-14)

    def test_scalar(self):
        assert singular_values(np.array([[3 + 4j]]))[0] == pytest.approx(5.0, rel=1e-15)

    def test_trace_identity_and_order(self):
        cfg = McConfig(d=4, trials=100, seed=3)
        for i in range(20):
            X = sample_matrix(cfg, i)
            sv = singular_values(X)
            assert np.all(np.diff(sv) >= 0) and np.all(sv >= 0)
            assert math.fsum(sv**2) == pytest.approx(np.linalg.norm(X) ** 2 / 4, rel=1e-10)
            np.testing.assert_allclose(sv, np.sort(np.linalg.svd(X / 2, compute_uv=False)), rtol=1e-10, atol=1e-12)

    def test_shape_error(self):
        with pytest.raises(DomainError):
            singular_values(np.zeros((3, 3)), d=2)

    def test_pathwise_order(self):
        sv = trial_singular_values(McConfig(d=6, trials=500, seed=5))
        avg = sv.mean(axis=1)
        assert np.all(sv[:, 0] <= avg + 1e-15) and np.all(avg <= sv[:, -1] + 1e-15)


class TestEstimates:
    def test_small_run_agrees_with_exact(self):
        est = estimate(McConfig(d=3, trials=20_000, seed=1))
        assert abs(est.z_score(alpha_complex(3))) <= 4
        assert est.std_error > 0 and est.trials == 20_000 and est.seed == 1

    def test_estimate_all_consistent(self):
        cfg = McConfig(d=4, trials=3000, seed=2)
        out = estimate_all(cfg)
        assert out[Statistic.MIN_SV].mean <= out[Statistic.AVG_SV].mean <= out[Statistic.MAX_SV].mean
        assert out[Statistic.AVG_SV] == estimate(cfg, "avg_sv")

    def test_reproducible_across_threads(self, monkeypatch):
        cfg = McConfig(d=4, trials=5000, seed=DEFAULT_SEED)
        monkeypatch.setenv("ASV_THREADS", "1")
        a = estimate(cfg)
        monkeypatch.setenv("ASV_THREADS", "4")
        b = estimate(cfg)
        assert a == b

    def test_ratio_d1_is_one(self):
        r = ratio_check(McConfig(d=1, trials=200))
        assert r.ratio == 1.0 and r.within_bound

    def test_ratio_below_one(self):
        r = ratio_check(McConfig(d=4, trials=5000, seed=4))
        assert r.ratio < 1 and r.within_bound and r.std_error > 0

    def test_real_bound_trivial_at_d2(self):
        chk = real_case_bound_check(2)
        assert chk.bound < 0 and chk.passed

    def test_eigenvalue_sample_scale(self):
        cfg = McConfig(d=5, trials=4000, seed=8)
        lam = eigenvalue_sample(cfg)
        # E[lambda] = int x p(x) dx = d for eigenvalues of X X^H
        assert abs(lam.mean() - 5) <= 4 * lam.std(ddof=1) / math.sqrt(lam.size)

    def test_chi_square_small(self):
        res = chi_square_density_test(McConfig(d=3, trials=5000, seed=12), bins=10)
        assert res.p_value > 0.001 and sum(res.counts) == 5000


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [dict(d=0, trials=100), dict(d=257, trials=100), dict(d=2, trials=99), dict(d=2, trials=100, seed=-1)],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(DomainError):
            McConfig(**kwargs)

    def test_wrong_field(self):
        with pytest.raises(DomainError):
            ratio_check(McConfig(d=2, trials=100, field="real"))
        with pytest.raises(DomainError):
            real_case_bound_check(5, trials=100)
