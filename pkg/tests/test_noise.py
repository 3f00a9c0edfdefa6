import io
import math

import numpy as np
import pytest

from hopflab import noise
from hopflab.model import Params, drift
from hopflab.noise import (ControlPath, WienerPath, dump_path, load_path, mix64,
                           ou_process, sample_path, shift, steering_path_hold,
                           steering_path_line)


def zero_path(t0, t1, dt):
    n = int(round((t1 - t0) / dt))
    return WienerPath(t0=t0, t1=t1, dt=dt, seed=0, increments=np.zeros((n, 2)))


class TestSampling:
    def test_deterministic_in_seed(self):
        p1 = sample_path(42, 0.0, 5.0, 1e-3)
        p2 = sample_path(42, 0.0, 5.0, 1e-3)
        assert np.array_equal(p1.increments, p2.increments)

    def test_different_seeds_differ(self):
        p1 = sample_path(1, 0.0, 1.0, 1e-3)
        p2 = sample_path(2, 0.0, 1.0, 1e-3)
        assert not np.array_equal(p1.increments, p2.increments)

    def test_increment_moments(self):
        # CLT: mean within 4 sqrt(dt/n); variance within 1%
        dt = 1e-3
        path = sample_path(7, 0.0, 1000.0, dt)
        inc = path.increments
        assert inc.shape == (10 ** 6, 2)
        for c in range(2):
            assert abs(inc[:, c].mean()) < 4 * math.sqrt(dt / 1e6)
            assert abs(inc[:, c].var() - dt) < 0.01 * dt

    def test_rejects_bad_grid(self):
        with pytest.raises(ValueError):
            sample_path(0, 0.0, 1.0005, 1e-3)
        with pytest.raises(ValueError):
            sample_path(0, 1.0, 0.0, 1e-3)
        with pytest.raises(ValueError):
            sample_path(0, 0.0, 1.0, -1e-3)

    def test_negative_start_is_ordinary(self):
        path = sample_path(3, -2.0, 0.0, 1e-3)
        assert path.n_steps == 2000
        assert path.times()[0] == -2.0

    def test_values_anchor_at_zero(self):
        path = sample_path(3, 0.0, 1.0, 1e-3)
        vals = path.values()
        assert np.all(vals[0] == 0.0)
        assert np.allclose(vals[-1], path.increments.sum(axis=0))


class TestShift:
    def test_identity(self):
        path = sample_path(5, 0.0, 2.0, 1e-3)
        sh = shift(path, 0.0)
        assert sh.t0 == path.t0 and sh.t1 == path.t1
        assert np.array_equal(sh.increments, path.increments)

    def test_semigroup(self):
        path = sample_path(5, 0.0, 4.0, 1e-3)
        rng = np.random.Generator(np.random.Philox(0))
        for _ in range(100):
            s = round(float(rng.integers(0, 1000)) * 1e-3, 6)
            t = round(float(rng.integers(0, 1000)) * 1e-3, 6)
            one = shift(shift(path, s), t)
            two = shift(path, s + t)
            assert one.t0 == pytest.approx(two.t0, abs=1e-12)
            assert np.array_equal(one.increments, two.increments)

    def test_increments_preserved_verbatim(self):
        path = sample_path(5, 0.0, 2.0, 1e-3)
        sh = shift(path, 0.5)
        assert np.array_equal(sh.increments, path.increments[500:])
        back = shift(path, -0.5)
        assert np.array_equal(back.increments, path.increments[:-500])

    def test_rejects_off_grid(self):
        path = sample_path(5, 0.0, 2.0, 1e-3)
        with pytest.raises(ValueError):
            shift(path, 0.00037)

    def test_rejects_empty_overlap(self):
        path = sample_path(5, 0.0, 2.0, 1e-3)
        with pytest.raises(ValueError):
            shift(path, 2.0)


class TestOuProcess:
    def test_zero_path_decays_exponentially(self):
        path = zero_path(0.0, 5.0, 1e-3)
        times, zs = ou_process(path, 1.3, (2.0, -1.0))
        expect = np.exp(-1.3 * times)
        assert np.allclose(zs[:, 0], 2.0 * expect, rtol=1e-12, atol=1e-12)
        assert np.allclose(zs[:, 1], -1.0 * expect, rtol=1e-12, atol=1e-12)

    def test_large_c_contracts(self):
        path = sample_path(9, 0.0, 5.0, 1e-3)
        _, zs = ou_process(path, 50.0, (3.0, 3.0))
        assert np.abs(zs[2000:]).max() < 0.5

    def test_stationary_variance(self):
        # long-run variance per component ~ 1/(2c) within 5%
        c = 1.0
        path = sample_path(11, 0.0, 1e4, 1e-2)
        _, zs = ou_process(path, c, (0.0, 0.0))
        var = zs[1000:].var(axis=0)
        assert np.all(np.abs(var - 1 / (2 * c)) < 0.05 / (2 * c))

    def test_integral_equation_residual_order_dt(self):
        # Z(t) - Z(0) + c int Z - omega(t) -> 0 at rate O(dt)
        base = sample_path(13, 0.0, 10.0, 1e-3)
        resids = []
        for sub in (1, 4):
            dt = base.dt * sub
            inc = base.increments.reshape(-1, sub, 2).sum(axis=1) if sub > 1 else base.increments
            path = WienerPath(t0=0.0, t1=10.0, dt=dt, seed=13, increments=inc)
            _, zs = ou_process(path, 1.0, (0.4, -0.2))
            om = path.values()
            integral = np.zeros_like(zs)
            integral[1:] = np.cumsum(0.5 * dt * (zs[:-1] + zs[1:]), axis=0)
            resid = zs - zs[0] + 1.0 * integral - om
            resids.append(float(np.abs(resid).max()))
        assert resids[0] < 0.08
        assert resids[0] < 0.5 * resids[1]  # halves (at least) when dt quarters

    def test_rejects_bad_c(self):
        path = zero_path(0.0, 1.0, 1e-3)
        with pytest.raises(ValueError):
            ou_process(path, 0.0)


class TestSteering:
    def test_hold_zero_at_equilibrium(self):
        p = Params(alpha=1.0, beta=0.5, a=1.0, b=2.0, sigma=1.0)
        h = steering_path_hold(p, (0.0, 0.0), 1.0, 1e-3)
        assert np.all(h.samples == 0.0)

    def test_hold_is_linear_in_t(self):
        p = Params(alpha=1.0, beta=0.5, a=1.0, b=2.0, sigma=2.0)
        z = (0.7, -0.3)
        h = steering_path_hold(p, z, 1.0, 1e-3)
        slope = -drift(p, z) / p.sigma
        t = 1e-3 * np.arange(h.samples.shape[0])
        assert np.allclose(h.samples, np.outer(t, slope), atol=1e-14)

    def test_hold_requires_noise(self):
        p = Params(alpha=1.0, beta=0.5, a=1.0, b=2.0, sigma=0.0)
        with pytest.raises(ValueError):
            steering_path_hold(p, (0.1, 0.1), 1.0, 1e-3)

    def test_line_trivial_when_endpoints_coincide_at_rest(self):
        p = Params(alpha=1.0, beta=0.0, a=1.0, b=0.0, sigma=1.0)
        h = steering_path_line(p, (0.0, 0.0), (0.0, 0.0), 1.0, 1e-3)
        assert np.abs(h.samples).max() < 1e-15

    def test_line_starts_at_zero(self):
        p = Params(alpha=0.5, beta=1.0, a=1.0, b=1.0, sigma=1.0)
        h = steering_path_line(p, (0.1, 0.0), (0.8, 0.6), 1.0, 1e-3)
        assert np.all(h.samples[0] == 0.0)

    def test_control_value_interpolates(self):
        samples = np.array([[0.0, 0.0], [1.0, 2.0], [2.0, 4.0]])
        g = ControlPath(t0=0.0, dt=0.5, samples=samples)
        assert np.allclose(g.value(0.25), [0.5, 1.0])
        assert g.t1 == 1.0


class TestCsvRoundTrip:
    def test_17_digit_roundtrip(self):
        path = sample_path(17, -1.0, 1.0, 1e-3)
        buf = io.StringIO()
        dump_path(path, buf, comment="config=deadbeef")
        buf.seek(0)
        loaded = load_path(buf, seed=17)
        assert loaded.t0 == pytest.approx(path.t0, abs=1e-12)
        assert loaded.dt == pytest.approx(path.dt, rel=1e-12)
        assert np.array_equal(loaded.increments, path.increments)


class TestMix64:
    def test_deterministic_and_spread(self):
        assert mix64(1, 2, 3) == mix64(1, 2, 3)
        seen = {mix64(0, i, j) for i in range(50) for j in range(50)}
        assert len(seen) == 2500

    def test_order_sensitive(self):
        assert mix64(1, 2) != mix64(2, 1)
