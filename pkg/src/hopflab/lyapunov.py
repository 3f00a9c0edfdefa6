"""Estimators for asymptotic and finite-time Lyapunov exponents.

Asymptotic estimators (`top_lyapunov`, `lambda_sum_estimate`) run one long
joint integration per seed, seeded from a stationary-density sample, discard
a burn-in, and average QR log norms; confidence intervals are 95% batch
means over 20 batches.  Finite-time estimators compute the exact singular
values of the tangent over a window, with the small singular value recovered
from the exactly accumulated log determinant so that long windows do not
lose it to cancellation.

Stream layout: an estimator with argument ``seed`` derives its noise stream
from mix64(seed, tag) so the path and the initial-condition draw never share
randomness; ensemble members use consecutive seeds seed0 .. seed0+n-1.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _engine
from .model import jacobian
from .noise import generator, mix64

_PATH_TAG = 0x7061
_INIT_TAG = 0x696E

# two-sided 97.5% Student-t quantiles, indexed by degrees of freedom
_T975 = {1: 12.706, 2: 4.303, 3: 3.182, 4: 2.776, 5: 2.571, 6: 2.447, 7: 2.365,
         8: 2.306, 9: 2.262, 10: 2.228, 11: 2.201, 12: 2.179, 13: 2.160,
         14: 2.145, 15: 2.131, 16: 2.120, 17: 2.110, 18: 2.101, 19: 2.093,
         20: 2.086, 24: 2.064, 29: 2.045, 39: 2.023, 59: 2.001, 99: 1.984}


def t_quantile_975(dof):
    if dof in _T975:
        return _T975[dof]
    for k in sorted(_T975):
        if dof <= k:
            return _T975[k]
    return 1.96


@dataclass(frozen=True)
class LyapunovEstimate:
    """A scalar exponent estimate with its 95% batch-means half-width."""

    value: float
    horizon: float
    sample_count: int
    ci_halfwidth: float
    kind: str

    def excludes_zero(self):
        return abs(self.value) > self.ci_halfwidth


@dataclass(frozen=True)
class FtleSample:
    """Finite-time exponents of one tangent window.

    sup_value + inf_value equals (1/T) ln det Phi(T) by the 2x2 SVD
    identity; ``ok`` is False when the underlying integration blew up.
    """

    seed: int
    z0: tuple
    horizon: float
    sup_value: float
    inf_value: float
    ok: bool = True


def _stationary_init(p, seed):
    rng = generator(mix64(seed, _INIT_TAG))
    return _engine.sample_states(p, 1, rng)[0]


def _batch_ci(batch_sums, t_eff, n_batches):
    means = batch_sums * (n_batches / t_eff)
    sd = float(np.std(means, ddof=1))
    return t_quantile_975(n_batches - 1) * sd / math.sqrt(n_batches)


def top_lyapunov(p, seed, T, burn_in=100.0, renorm_every=10, dt=1e-3, n_batches=20,
                 z0=None):
    """Estimate the top Lyapunov exponent from one seeded run.

    The initial condition defaults to a stationary-density sample
    (ergodicity of the invariant measure justifies this; the random
    equilibrium itself is only reachable by pullback); pass ``z0`` to
    override, e.g. for the noise-free frozen flow.  Runs the scalar engine.
    """
    init = _stationary_init(p, seed) if z0 is None else complex(z0[0], z0[1])
    s1, s2, b1, b12, t_eff = _engine.run_lyapunov_scalar(
        p, mix64(seed, _PATH_TAG), init, T, dt, burn_in, renorm_every, n_batches)
    return LyapunovEstimate(value=s1 / t_eff, horizon=T, sample_count=1,
                            ci_halfwidth=_batch_ci(b1, t_eff, n_batches), kind="top")


def lambda_sum_estimate(p, seed, T, burn_in=100.0, renorm_every=10, dt=1e-3, n_batches=20,
                        z0=None):
    """Estimate the Lyapunov sum from both QR diagonals of one seeded run."""
    init = _stationary_init(p, seed) if z0 is None else complex(z0[0], z0[1])
    s1, s2, b1, b12, t_eff = _engine.run_lyapunov_scalar(
        p, mix64(seed, _PATH_TAG), init, T, dt, burn_in, renorm_every, n_batches)
    return LyapunovEstimate(value=(s1 + s2) / t_eff, horizon=T, sample_count=1,
                            ci_halfwidth=_batch_ci(b12, t_eff, n_batches), kind="sum")


def top_lyapunov_ensemble(params_list, seeds, T, burn_in=100.0, renorm_every=10,
                          dt=1e-3, n_batches=20):
    """Batched top-exponent estimates for many (Params, seed) pairs.

    Returns a list of LyapunovEstimate in input order.  Uses the batch
    engine; one entry per pair, initial conditions drawn exactly as in
    `top_lyapunov`.
    """
    A = np.array([complex(p.alpha, p.beta) for p in params_list])
    B = np.array([complex(p.a, -p.b) for p in params_list])
    sig = np.array([p.sigma for p in params_list])
    inits = np.array([_stationary_init(p, s) for p, s in zip(params_list, seeds)])
    path_seeds = [mix64(s, _PATH_TAG) for s in seeds]
    res = _engine.run_lyapunov_batch(A, B, sig, path_seeds, inits, T, dt,
                                     burn_in, renorm_every, n_batches)
    out = []
    for i in range(len(seeds)):
        val = res["sum1"][i] / res["t_eff"]
        ci = _batch_ci(res["batch1"][i], res["t_eff"], n_batches)
        if res["failed"][i]:
            val, ci = math.nan, math.inf
        out.append(LyapunovEstimate(value=val, horizon=T, sample_count=1,
                                    ci_halfwidth=ci, kind="top"))
    return out


def ftle(p, seed, z0, T, dt=1e-3, renorm_every=10):
    """One finite-time Lyapunov sample: (1/T) ln of the extreme singular values."""
    n = int(round(T / dt))
    res = _engine.run_ftle_batch(complex(p.alpha, p.beta), complex(p.a, -p.b),
                                 p.sigma, [mix64(seed, _PATH_TAG)],
                                 [complex(z0[0], z0[1])], [n], dt, renorm_every)
    if res["failed"][0]:
        raise _engine.BlowUpError("blow-up during FTLE window")
    return FtleSample(seed=seed, z0=(float(z0[0]), float(z0[1])), horizon=T,
                      sup_value=float(res["lnsup"][0, 0]) / T,
                      inf_value=float(res["lninf"][0, 0]) / T)


@dataclass(frozen=True)
class FtleDistribution:
    """Ensemble of FTLE samples at a common horizon."""

    samples: list
    horizon: float
    failures: int

    def sup_values(self):
        return np.array([s.sup_value for s in self.samples])

    def inf_values(self):
        return np.array([s.inf_value for s in self.samples])


def ftle_distribution(p, n, T, seed0, dt=1e-3, renorm_every=10):
    """n independent FTLE samples, seeds seed0..seed0+n-1.

    Initial states are stationary-density samples (drawn from the ensemble
    seed, independent of the path streams).  Per-sample blow-ups are dropped
    from the sample list and counted in ``failures``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = generator(mix64(seed0, _INIT_TAG))
    inits_all = _engine.sample_states(p, n, rng)
    steps = int(round(T / dt))
    A, B = complex(p.alpha, p.beta), complex(p.a, -p.b)
    samples = []
    failures = 0
    for k0 in range(0, n, _engine.WIDTH_CHUNK):
        k1 = min(n, k0 + _engine.WIDTH_CHUNK)
        seeds = [mix64(seed0 + i, _PATH_TAG) for i in range(k0, k1)]
        res = _engine.run_ftle_batch(A, B, p.sigma, seeds, inits_all[k0:k1],
                                     [steps], dt, renorm_every)
        for i in range(k1 - k0):
            if res["failed"][i]:
                failures += 1
                continue
            z = inits_all[k0 + i]
            samples.append(FtleSample(seed=seed0 + k0 + i, z0=(z.real, z.imag),
                                      horizon=T,
                                      sup_value=float(res["lnsup"][i, 0]) / T,
                                      inf_value=float(res["lninf"][i, 0]) / T))
    return FtleDistribution(samples=samples, horizon=T, failures=failures)


def dichotomy_sup_estimate(p, n, T_list, seed0, pullback_time=50.0, dt=1e-3,
                           renorm_every=10):
    """Per-horizon maxima of sup FTLE along pullback-equilibrated trajectories.

    Each sample flows a stationary draw for ``pullback_time`` before starting
    the FTLE clock, approximating linearization along the random equilibrium;
    the per-T ensemble maxima estimate the essential supremum of the FTLE,
    whose T -> infinity limit is the top of the dichotomy spectrum.

    Returns (maxima, values): a list of (T, max_sup) pairs in ascending T and
    the (n, len(T_list)) matrix of per-sample sup values (NaN for failures).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    T_list = sorted(T_list)
    steps = [int(round(T / dt)) for T in T_list]
    pull_steps = int(round(pullback_time / dt))
    rng = generator(mix64(seed0, _INIT_TAG))
    inits_all = _engine.sample_states(p, n, rng)
    A, B = complex(p.alpha, p.beta), complex(p.a, -p.b)
    sup = np.full((n, len(T_list)), np.nan)
    for k0 in range(0, n, _engine.WIDTH_CHUNK):
        k1 = min(n, k0 + _engine.WIDTH_CHUNK)
        seeds = [mix64(seed0 + i, _PATH_TAG) for i in range(k0, k1)]
        res = _engine.run_ftle_batch(A, B, p.sigma, seeds, inits_all[k0:k1],
                                     steps, dt, renorm_every,
                                     pullback_steps=pull_steps)
        ok = ~res["failed"]
        sup[k0:k1][ok] = res["lnsup"][ok] / np.array(T_list)
    maxima = [(T, float(np.nanmax(sup[:, j]))) for j, T in enumerate(T_list)]
    return maxima, sup


def directional_growth(p, z, v):
    """Instantaneous growth rate <Df(z) v, v> along a unit direction v.

    At z = (w, w) and v = (0, 1) this equals alpha + 2(b - 2a) w^2 exactly.
    """
    v = np.asarray(v, dtype=float)
    if abs(float(v @ v) - 1.0) > 1e-12:
        raise ValueError("v must be a unit vector (within 1e-12)")
    return float(v @ (jacobian(p, z) @ v))
