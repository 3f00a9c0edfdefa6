import math

import numpy as np
import pytest

from hopflab import _engine, flow, noise
from hopflab.lyapunov import (FtleSample, LyapunovEstimate, dichotomy_sup_estimate,
                              directional_growth, ftle, ftle_distribution,
                              lambda_sum_estimate, top_lyapunov, top_lyapunov_ensemble)
from hopflab.model import Params, lambda_minus, lambda_plus, lambda_sum_closed_form

P11 = Params(alpha=1.0, beta=1.0, a=1.0, b=1.0, sigma=1.0)


class TestDirectionalGrowth:
    def test_diagonal_point_exact(self):
        p = Params(alpha=1.0, beta=1.0, a=1.0, b=5.0, sigma=1.0)
        w = math.sqrt(10.0 / 3.0)   # 2(b-2a)w^2 = 20
        assert directional_growth(p, (w, w), (0.0, 1.0)) == pytest.approx(21.0, abs=1e-12)

    def test_origin_gives_alpha(self):
        p = Params(alpha=-0.3, beta=2.0, a=1.0, b=4.0, sigma=1.0)
        for v in ((1.0, 0.0), (0.0, 1.0), (math.sqrt(0.5), math.sqrt(0.5))):
            assert directional_growth(p, (0.0, 0.0), v) == pytest.approx(-0.3, abs=1e-12)

    def test_within_symmetric_part_range(self):
        rng = np.random.Generator(np.random.Philox(3))
        for _ in range(300):
            p = Params(alpha=float(rng.uniform(-2, 2)), beta=float(rng.uniform(-2, 2)),
                       a=float(rng.uniform(0.2, 2)), b=float(rng.uniform(-3, 3)), sigma=1.0)
            z = rng.uniform(-2, 2, 2)
            th = rng.uniform(0, 2 * math.pi)
            v = (math.cos(th), math.sin(th))
            g = directional_growth(p, z, v)
            assert lambda_minus(p, z) - 1e-10 <= g <= lambda_plus(p, z) + 1e-10

    def test_rejects_non_unit(self):
        with pytest.raises(ValueError):
            directional_growth(P11, (0.0, 0.0), (1.0, 1.0))


class TestPairRepresentation:
    def test_diag_matrix_singular_values(self):
        P, Q = _engine.matrix_to_pq(np.diag([2.0, 0.5]))
        smax, smin = _engine.svd2_from_pq(P, Q)
        assert math.log(smax) == pytest.approx(math.log(2.0), abs=1e-14)
        assert math.log(smin) == pytest.approx(-math.log(2.0), abs=1e-14)

    def test_random_matrices_match_numpy_svd(self):
        rng = np.random.Generator(np.random.Philox(5))
        for _ in range(200):
            m = rng.standard_normal((2, 2))
            P, Q = _engine.matrix_to_pq(m)
            smax, smin = _engine.svd2_from_pq(P, Q)
            sv = np.linalg.svd(m, compute_uv=False)
            assert smax == pytest.approx(sv[0], rel=1e-12, abs=1e-12)
            assert smin == pytest.approx(sv[1], rel=1e-9, abs=1e-12)
            back = _engine.pq_to_matrix(P, Q)
            assert np.abs(back - m).max() < 1e-14


class TestFtle:
    def test_matches_dense_tangent_svd(self):
        seed, z0, T = 21, (0.5, 0.2), 1.0
        sample = ftle(P11, seed, z0, T)
        path = noise.sample_path(noise.mix64(seed, 0x7061), 0.0, T, 1e-3)
        tf = flow.integrate_variational(P11, flow.integrate_sde(P11, path, z0))
        sv = np.linalg.svd(tf.matrices[-1], compute_uv=False)
        assert sample.sup_value == pytest.approx(math.log(sv[0]) / T, abs=1e-9)
        assert sample.inf_value == pytest.approx(math.log(sv[1]) / T, abs=1e-9)

    def test_sup_vs_direction_oracle(self):
        seed, z0, T = 33, (0.3, -0.4), 1.0
        sample = ftle(P11, seed, z0, T)
        path = noise.sample_path(noise.mix64(seed, 0x7061), 0.0, T, 1e-3)
        tf = flow.integrate_variational(P11, flow.integrate_sde(P11, path, z0))
        m = tf.matrices[-1]
        phis = np.linspace(0, 2 * math.pi, 720, endpoint=False)
        dirs = np.column_stack([np.cos(phis), np.sin(phis)])
        grid_max = np.log(np.linalg.norm(dirs @ m.T, axis=1)).max() / T
        assert grid_max <= sample.sup_value + 1e-12
        assert sample.sup_value - grid_max < 1e-4

    def test_svd_identity(self):
        # sup + inf = (1/T) ln det Phi(T), by construction and against the
        # dense determinant
        seed, z0, T = 4, (0.7, 0.0), 2.0
        sample = ftle(P11, seed, z0, T)
        path = noise.sample_path(noise.mix64(seed, 0x7061), 0.0, T, 1e-3)
        tf = flow.integrate_variational(P11, flow.integrate_sde(P11, path, z0))
        det = np.linalg.det(tf.matrices[-1])
        assert sample.sup_value + sample.inf_value == pytest.approx(math.log(det) / T, abs=1e-8)
        assert sample.sup_value >= sample.inf_value

    def test_long_window_inf_stays_finite(self):
        sample = ftle(P11, 6, (0.5, 0.1), 50.0)
        assert math.isfinite(sample.inf_value)
        assert sample.inf_value < sample.sup_value < 1.0

    def test_horizon_off_renorm_grid(self):
        # horizons need not align with the renormalization cadence
        seed, z0, T = 91, (0.4, 0.1), 1.005
        sample = ftle(P11, seed, z0, T)
        path = noise.sample_path(noise.mix64(seed, 0x7061), 0.0, T, 1e-3)
        tf = flow.integrate_variational(P11, flow.integrate_sde(P11, path, z0))
        sv = np.linalg.svd(tf.matrices[-1], compute_uv=False)
        assert sample.sup_value == pytest.approx(math.log(sv[0]) / T, abs=1e-9)
        assert sample.inf_value == pytest.approx(math.log(sv[1]) / T, abs=1e-9)


class TestTopLyapunov:
    def test_frozen_linear_flow(self):
        p = Params(alpha=-1.0, beta=1.0, a=1.0, b=1.0, sigma=0.0)
        est = top_lyapunov(p, 0, 50.0, burn_in=0.0, z0=(0.0, 0.0))
        assert est.value == pytest.approx(-1.0, abs=1e-6)

    def test_horizon_consistency(self):
        e1 = top_lyapunov(P11, 42, 600.0)
        e2 = top_lyapunov(P11, 43, 1200.0)
        assert abs(e1.value - e2.value) < e1.ci_halfwidth + e2.ci_halfwidth

    def test_ensemble_engine_agrees_with_scalar(self):
        ests = top_lyapunov_ensemble([P11], [42], 600.0)
        est = top_lyapunov(P11, 42, 600.0)
        assert ests[0].value == pytest.approx(est.value, abs=1e-9)

    def test_estimate_fields(self):
        est = top_lyapunov(P11, 1, 300.0)
        assert isinstance(est, LyapunovEstimate)
        assert est.ci_halfwidth >= 0
        assert est.horizon == 300.0
        assert est.kind == "top"


class TestLambdaSum:
    def test_frozen_origin(self):
        p = Params(alpha=-0.7, beta=1.0, a=1.0, b=1.0, sigma=0.0)
        est = lambda_sum_estimate(p, 0, 50.0, burn_in=0.0, z0=(0.0, 0.0))
        assert est.value == pytest.approx(2 * p.alpha, abs=1e-5)

    def test_matches_closed_form(self):
        p = Params(alpha=0.0, beta=1.0, a=1.0, b=1.0, sigma=1.0)
        est = lambda_sum_estimate(p, 9, 2000.0)
        assert abs(est.value - lambda_sum_closed_form(p)) < max(3 * est.ci_halfwidth, 0.05)


class TestFtleDistribution:
    def test_dichotomy_of_signs_small_sample(self):
        n, T = 400, 5.0
        neg = ftle_distribution(Params(alpha=-1.0, beta=1.0, a=1.0, b=0.5, sigma=1.0),
                                n, T, 100)
        assert neg.failures == 0
        assert neg.sup_values().max() <= -1.0
        pos = ftle_distribution(Params(alpha=1.0, beta=1.0, a=1.0, b=1.0, sigma=1.0),
                                n, T, 100)
        sups = pos.sup_values()
        assert (sups > 0).mean() > 0
        assert sups.mean() < 0

    def test_sample_invariants(self):
        dist = ftle_distribution(P11, 50, 2.0, 7)
        for s in dist.samples:
            assert isinstance(s, FtleSample)
            assert s.sup_value >= s.inf_value
            assert s.horizon == 2.0
        assert len({s.seed for s in dist.samples}) == 50


class TestDichotomyProxy:
    def test_single_sample_degenerate(self):
        maxima, sup = dichotomy_sup_estimate(P11, 1, [2.0], 5, pullback_time=5.0)
        assert len(maxima) == 1
        assert maxima[0][0] == 2.0
        assert maxima[0][1] == pytest.approx(sup[0, 0])

    def test_small_shear_bound(self):
        # alpha=-1, |b|=0.5 < a: every sup FTLE <= alpha
        p = Params(alpha=-1.0, beta=1.0, a=1.0, b=0.5, sigma=1.0)
        maxima, _ = dichotomy_sup_estimate(p, 200, [2.0, 5.0], 9, pullback_time=10.0)
        for _, m in maxima:
            assert m <= -1.0
