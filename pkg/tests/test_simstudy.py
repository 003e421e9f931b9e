import math

import numpy as np
import pytest

from extquant.distributions import GenPareto, Normal01, Frechet3
from extquant.rng import substream
from extquant.simstudy import (
    AggregationError,
    SimSummary,
    StudyConfig,
    aggregate,
    default_tau_grid,
    estimate_expected_max,
    run_replicate,
    run_study,
)


class PointMass:
    """Test-only degenerate distribution at a constant."""

    def __init__(self, c):
        self.c = c

    def sample(self, n, rng):
        rng.random(n)  # consume the stream like a real sampler
        return np.full(n, self.c)

    def quantile(self, tau):
        return self.c

    def cdf(self, y):
        return 1.0 if y >= self.c else 0.0


class TestConfig:
    def test_default_grid(self):
        g = default_tau_grid()
        assert g.size == 50
        assert g[0] == pytest.approx(0.99)
        assert g[-1] == pytest.approx(0.99999)
        exps = np.log10(1.0 - g)
        steps = np.diff(exps)
        assert np.allclose(steps, steps[0])

    def test_validation(self):
        d = Normal01()
        with pytest.raises(ValueError):
            StudyConfig(dist=d, n=50)
        with pytest.raises(ValueError):
            StudyConfig(dist=d, reps=1)
        with pytest.raises(ValueError):
            StudyConfig(dist=d, tau_grid=[0.999, 0.99])
        with pytest.raises(ValueError):
            StudyConfig(dist=d, tau_grid=[0.5, 0.999])  # below threshold
        with pytest.raises(ValueError):
            StudyConfig(dist=d, threshold_level=1.5)


class TestRunReplicate:
    def test_determinism(self):
        cfg = StudyConfig(dist=Frechet3(), reps=10)
        a = run_replicate(cfg, 3)
        b = run_replicate(cfg, 3)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])
        assert a[2] == b[2] and a[3] == b[3]

    def test_empirical_plateau_is_sample_max(self):
        cfg = StudyConfig(dist=Normal01(), reps=10)
        flat = cfg.tau_grid > 1.0 - 1.0 / cfg.n
        assert flat.any()
        for rep in range(10):
            emp, _, _, s_max = run_replicate(cfg, rep)
            assert np.all(emp[flat] == s_max)

    def test_gp_estimate_tracks_exponential_tail(self):
        # well-specified model: gp_est(tau) ~ ln(1/(1-tau)) up to MLE noise
        cfg = StudyConfig(dist=GenPareto(1.0, 0.0), reps=10)
        _, gp, _, _ = run_replicate(cfg, 0)
        for tau, est in zip(cfg.tau_grid, gp):
            assert est == pytest.approx(math.log(1.0 / (1.0 - tau)), rel=0.35)

    def test_index_out_of_range(self):
        cfg = StudyConfig(dist=Normal01(), reps=5)
        with pytest.raises(ValueError):
            run_replicate(cfg, 5)


class TestAggregate:
    def test_two_point_envelope(self):
        cfg = StudyConfig(dist=Normal01(), reps=2, tau_grid=[0.999])
        a, b = 1.0, 3.0
        results = [
            (np.array([a]), np.array([a]), False, a),
            (np.array([b]), np.array([b]), False, b),
        ]
        s = aggregate(cfg, results, e_max=0.0, e_max_se=0.0)
        assert s.emp_mean[0] == 2.0
        assert s.emp_lo[0] == a and s.emp_hi[0] == b
        assert s.gp_lo[0] == a and s.gp_hi[0] == b

    def test_all_gp_failed(self):
        cfg = StudyConfig(dist=Normal01(), reps=2, tau_grid=[0.999])
        results = [
            (np.array([1.0]), None, False, 1.0),
            (np.array([2.0]), None, False, 2.0),
        ]
        with pytest.raises(AggregationError):
            aggregate(cfg, results, 0.0, 0.0)

    def test_envelope_ordering_invariant(self):
        cfg = StudyConfig(dist=Frechet3(), reps=100, e_max_reps=1000)
        s = run_study(cfg)
        assert np.all(s.emp_lo <= s.emp_mean) and np.all(s.emp_mean <= s.emp_hi)
        assert np.all(s.gp_lo <= s.gp_mean) and np.all(s.gp_mean <= s.gp_hi)

    def test_emp_mean_flat_beyond_saturation(self):
        cfg = StudyConfig(dist=Normal01(), reps=50, e_max_reps=1000)
        s = run_study(cfg)
        flat = cfg.tau_grid > 1.0 - 1.0 / cfg.n
        vals = s.emp_mean[flat]
        assert np.all(vals == vals[0])
        assert vals[0] == s.mean_sample_max


class TestExpectedMax:
    def test_point_mass_exact(self):
        val, se = estimate_expected_max(PointMass(3.5), 100, 1000, substream(1))
        assert val == 3.5
        assert se == 0.0

    def test_frechet_self_consistency(self):
        d = Frechet3()
        v1, se1 = estimate_expected_max(d, 1000, 20_000, substream(5, 100))
        v2, se2 = estimate_expected_max(d, 1000, 20_000, substream(6, 200))
        assert abs(v1 - v2) < 4.0 * math.hypot(se1, se2)

    def test_mc_reps_floor(self):
        with pytest.raises(ValueError):
            estimate_expected_max(Normal01(), 100, 10, substream(0))


class TestRunStudy:
    def test_full_determinism(self):
        cfg = StudyConfig(dist=Frechet3(), reps=60, e_max_reps=1000)
        s1 = run_study(cfg)
        s2 = run_study(cfg)
        for f in ("true_q", "emp_mean", "emp_lo", "emp_hi", "gp_mean", "gp_lo",
                  "gp_hi"):
            np.testing.assert_array_equal(getattr(s1, f), getattr(s2, f))
        assert s1.e_max == s2.e_max

    def test_parallel_invariance(self):
        cfg = StudyConfig(dist=Normal01(), reps=60, e_max_reps=1000)
        s1 = run_study(cfg, threads=1)
        s4 = run_study(cfg, threads=4)
        for f in ("emp_mean", "emp_lo", "emp_hi", "gp_mean", "gp_lo", "gp_hi"):
            np.testing.assert_array_equal(getattr(s1, f), getattr(s4, f))

    def test_gp_failure_rate_low(self):
        for dist in (Normal01(), Frechet3()):
            cfg = StudyConfig(dist=dist, reps=500, e_max_reps=1000)
            s = run_study(cfg)
            assert s.gp_fail_count / s.reps < 0.01

    def test_envelope_coverage_well_specified(self):
        # model is exactly GP above any threshold: the 95% envelope should
        # cover the truth at nearly every grid point
        cfg = StudyConfig(dist=GenPareto(1.0, 0.2), reps=10_000, e_max_reps=1000)
        s = run_study(cfg, threads=4)
        covered = (s.gp_lo <= s.true_q) & (s.true_q <= s.gp_hi)
        assert covered.mean() >= 0.90
