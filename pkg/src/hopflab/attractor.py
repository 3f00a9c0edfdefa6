"""Pullback clouds, synchronisation diagnostics, random-equilibrium
approximation, stationary sampling and empirical density checks.

Pullback runs sample one noise path ending at t = 0 and flow a cloud of
initial conditions from several look-back depths under that common path, so
deeper checkpoints see the same noise future; the collapse (or not) of the
cloud diameter at t = 0 as the depth grows is the pullback-attractor
diagnostic.  The true pullback limit is approximated at finite depth and
every result records the depth and the collapse threshold used.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _engine
from .model import expected_squared_radius
from .noise import generator, mix64

SYNC_EPSILON = 1e-3

_PATH_TAG = 0x7061
_CLOUD_TAG = 0x636C
_PAIR_TAG = 0x7072


class NoDecayError(RuntimeError):
    """Two-point distance never decayed below half its initial value."""


@dataclass(frozen=True)
class Cloud:
    """A finite set of planar states evolved under one common path."""

    states: np.ndarray          # (n, 2)
    time_label: float
    seed: int

    @property
    def n(self):
        return self.states.shape[0]

    def diameter(self):
        """Max pairwise distance; exact O(n^2) pass (order-independent)."""
        z = self.states[:, 0] + 1j * self.states[:, 1]
        d = np.abs(z[:, None] - z[None, :])
        return float(d.max())


@dataclass(frozen=True)
class PullbackResult:
    """Diameter at t=0 per pullback depth, plus the deepest final cloud."""

    initial: Cloud
    final: Cloud
    diameters: list            # [(depth, diameter at t=0)]
    synchronised: bool
    sync_epsilon: float
    depth: float
    seed: int
    failed_points: int = 0


def sample_stationary(p, n, seed):
    """Cloud of n stationary-density samples (inverse-CDF radius, uniform angle)."""
    if p.sigma <= 0:
        raise ValueError("sampling the stationary density requires sigma > 0")
    rng = generator(mix64(seed, _CLOUD_TAG))
    z = _engine.sample_states(p, n, rng)
    return Cloud(states=np.column_stack([z.real, z.imag]), time_label=0.0, seed=seed)


def pullback_cloud(p, seed, T, n=1000, checkpoints=None, dt=1e-3, cloud_seed=None):
    """Flow a stationary cloud to t = 0 from several pullback depths.

    One path on [-T, 0] is sampled from the seed; for each depth tau in
    ``checkpoints`` (default: just T) the SAME initial cloud is released at
    t = -tau and flowed to 0 under the corresponding window of that path.
    The synchronised flag reports whether the deepest-run diameter fell
    below SYNC_EPSILON.  ``cloud_seed`` lets different clouds share a path
    (defaults to the path seed).
    """
    if T <= 0 or n < 1:
        raise ValueError("need T > 0 and n >= 1")
    checkpoints = sorted(set(checkpoints or [T]))
    if checkpoints[-1] > T + 1e-12:
        raise ValueError("checkpoints cannot exceed the pullback depth T")
    cloud0 = sample_stationary(p, n, seed if cloud_seed is None else cloud_seed)
    z0 = cloud0.states[:, 0] + 1j * cloud0.states[:, 1]
    n_total = int(round(T / dt))
    A, B = complex(p.alpha, p.beta), complex(p.a, -p.b)
    path_seed = mix64(seed, _PATH_TAG)

    # increments for [-T, 0] come from one stream; a depth tau uses the last
    # round(tau/dt) steps of that stream, so all depths share the noise
    # ending at t = 0.  Flow each depth separately (few checkpoints).
    rng = generator(path_seed)
    inc = rng.standard_normal((n_total, 2))
    incc = inc[:, 0] + 1j * inc[:, 1]
    sq = p.sigma * math.sqrt(dt)
    diameters = []
    final_states = None
    failed_total = 0
    for tau in checkpoints:
        k = int(round(tau / dt))
        z = z0.copy()
        with np.errstate(all="ignore"):
            for j in range(n_total - k, n_total):
                s = z.real ** 2 + z.imag ** 2
                z = z + dt * (A * z - B * s * z) + sq * incc[j]
        bad = ~np.isfinite(z.real) | ((z.real ** 2 + z.imag ** 2) > _engine.BLOWUP_NORM2)
        failed_total += int(bad.sum())
        good = z[~bad]
        d = np.abs(good[:, None] - good[None, :])
        diameters.append((float(tau), float(d.max()) if good.size else math.nan))
        if tau == checkpoints[-1]:
            final_states = np.column_stack([good.real, good.imag])
    final = Cloud(states=final_states, time_label=0.0, seed=seed)
    sync = bool(diameters[-1][1] < SYNC_EPSILON)
    return PullbackResult(initial=cloud0, final=final, diameters=diameters,
                          synchronised=sync, sync_epsilon=SYNC_EPSILON,
                          depth=float(T), seed=seed, failed_points=failed_total)


@dataclass(frozen=True)
class EquilibriumEstimate:
    """Centroid of a collapsed pullback cloud, usable as A(omega)."""

    point: np.ndarray
    diameter: float
    collapsed: bool
    depth: float
    seed: int


def random_equilibrium_point(p, seed, T, n=32, dt=1e-3, cloud_seed=None):
    """Approximate the random equilibrium by a small pullback cloud centroid.

    Flags ``collapsed=False`` when the final diameter exceeds SYNC_EPSILON
    (parameters outside the synchronisation regime).
    """
    res = pullback_cloud(p, seed, T, n=n, dt=dt, cloud_seed=cloud_seed)
    diam = res.diameters[-1][1]
    centroid = res.final.states.mean(axis=0)
    return EquilibriumEstimate(point=centroid, diameter=float(diam),
                               collapsed=bool(diam < SYNC_EPSILON),
                               depth=float(T), seed=seed)


def synchronisation_rate(p, seed, u, v, T, dt=1e-3):
    """Least-squares slope of ln d(t) for one pair under one path.

    The fit window runs from t = 0 until d(t) leaves [1e-12, d(0)]; raises
    NoDecayError when d never drops below d(0)/2 (no decay to certify).
    """
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    if np.allclose(u, v):
        raise ValueError("u and v must differ")
    from .noise import sample_path
    from .flow import two_point_distance

    path = sample_path(mix64(seed, _PATH_TAG), 0.0, T, dt)
    times, d = two_point_distance(p, path, u, v, (0.0, T))
    d0 = d[0]
    if d.min() > 0.5 * d0:
        raise NoDecayError("distance never dropped below half its initial value")
    mask = (d >= 1e-12) & (d <= d0)
    below = np.nonzero(d < 1e-12)[0]
    if below.size:
        mask[below[0]:] = False
    t = times[mask]
    y = np.log(d[mask])
    tbar = t.mean()
    slope = float(((t - tbar) * (y - y.mean())).sum() / ((t - tbar) ** 2).sum())
    return slope


@dataclass(frozen=True)
class ContractionReport:
    trials: int
    violations: int
    worst_margin: float
    tolerance: float


def uniform_contraction_check(p, trials, T, seed0=0, dt=1e-3, tolerance=1e-6):
    """Check d(t) <= exp(alpha t) d(0) (1 + tolerance) over random pairs.

    Intended for alpha < 0, |b| <= a where the contraction holds pathwise;
    runs outside that regime simply report the violations.  Initial pairs
    are stationary-density draws, each trial on its own stream.
    """
    rng = generator(mix64(seed0, _CLOUD_TAG))
    z = _engine.sample_states(p, 2 * trials, rng)
    u0, v0 = z[:trials], z[trials:]
    # nudge any coincident pair apart deterministically
    same = np.abs(u0 - v0) == 0
    if same.any():
        v0 = v0 + same * 1e-8
    seeds = [mix64(seed0, _PAIR_TAG, i) for i in range(trials)]
    n = int(round(T / dt))
    margins = _engine.run_pair_margins(complex(p.alpha, p.beta), complex(p.a, -p.b),
                                       p.sigma, seeds, u0, v0, n, dt, p.alpha)
    violations = int((margins > tolerance).sum())
    return ContractionReport(trials=trials, violations=violations,
                             worst_margin=float(margins.max()), tolerance=tolerance)


@dataclass(frozen=True)
class RadialHistogram:
    """Empirical distribution of s = x^2+y^2 along one long trajectory."""

    edges: np.ndarray
    mass: np.ndarray            # empirical bin masses, sums to ~1
    analytic_mass: np.ndarray   # analytic bin masses from the radial density
    samples: int

    def l1_analytic(self):
        return float(np.abs(self.mass - self.analytic_mass).sum())

    def l1_to(self, other):
        if not np.array_equal(self.edges, other.edges):
            raise ValueError("histograms use different bins")
        return float(np.abs(self.mass - other.mass).sum())


def empirical_radial_density(p, seed, T, bins=50, burn_in=100.0, dt=1e-3, s_max=None):
    """Histogram of s along one trajectory vs the analytic radial density.

    The trajectory starts from a stationary sample and discards ``burn_in``
    time units; bins cover [0, s_max] with s_max from the sampler table so
    out-of-range mass is negligible (< 1e-12).
    """
    if T < burn_in:
        raise ValueError("T must exceed burn_in")
    if s_max is None:
        s_nodes, _ = _engine.radial_cdf_table(p)
        s_max = float(s_nodes[-1])
    edges = np.linspace(0.0, s_max, bins + 1)
    init = _engine.sample_states(p, 1, generator(mix64(seed, _CLOUD_TAG)))[0]
    n = int(round(T / dt))
    nb = int(round(burn_in / dt))
    counts, kept = _engine.run_radial_histogram(p, mix64(seed, _PATH_TAG), init,
                                                n, dt, nb, edges)
    mass = counts / kept
    # analytic bin masses from the tabulated radial CDF (exact for any bin width)
    nodes, cdf = _engine.radial_cdf_table(p)
    analytic = np.diff(np.interp(edges, nodes, cdf))
    return RadialHistogram(edges=edges, mass=mass, analytic_mass=analytic,
                           samples=int(kept))


def cloud_moment_check(p, n, seed):
    """Sample mean of s for a stationary cloud with its standard error."""
    cloud = sample_stationary(p, n, seed)
    s = (cloud.states ** 2).sum(axis=1)
    return float(s.mean()), float(s.std(ddof=1) / math.sqrt(n)), expected_squared_radius(p)
