"""Seed-reproducible Brownian paths, the time shift, OU processes and
steering controls.

Every random object in the package is derived from 64-bit seeds through
`mix64` (a splitmix64 combiner) feeding counter-based Philox generators, so
ensembles parallelize embarrassingly: trajectory k of an ensemble draws from
the stream mix64(seed, k) regardless of scheduling or worker count.

Paths are stored as per-step Gaussian increments, not cumulative values;
shifting a path permutes the window and never resamples, and long windows do
not suffer cancellation.
"""

import math
from dataclasses import dataclass

import numpy as np

from .model import drift

_MASK64 = (1 << 64) - 1
_GRID_TOL = 1e-9


def mix64(*values):
    """Combine integers into one well-mixed 64-bit seed (splitmix64 chain)."""
    x = 0x9E3779B97F4A7C15
    for v in values:
        x = (x + (int(v) & _MASK64)) & _MASK64
        x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
        x ^= x >> 31
    return x


def generator(seed):
    """Philox generator keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed & _MASK64)))


def steps_on_grid(span, dt, what="span"):
    """Number of dt-steps in ``span``, rejecting non-commensurate values."""
    n = int(round(span / dt))
    if n < 0 or abs(n * dt - span) > _GRID_TOL * max(1.0, abs(span)):
        raise ValueError(f"{what}={span} is not a multiple of dt={dt}")
    return n


@dataclass(frozen=True)
class WienerPath:
    """A two-component Brownian path sampled on a uniform grid.

    ``increments`` has shape (n, 2) with rows ~ Normal(0, dt) I_2; the path
    value is the zero-anchored cumulative sum, omega(t) - omega(t0).
    Regenerating with the same (seed, t0, t1, dt) is bit-identical.
    """

    t0: float
    t1: float
    dt: float
    seed: int
    increments: np.ndarray

    def __post_init__(self):
        self.increments.setflags(write=False)

    @property
    def n_steps(self):
        return self.increments.shape[0]

    def times(self):
        return self.t0 + self.dt * np.arange(self.n_steps + 1)

    def values(self):
        """Path values omega(t) - omega(t0) on the grid, shape (n+1, 2)."""
        out = np.empty((self.n_steps + 1, 2))
        out[0] = 0.0
        np.cumsum(self.increments, axis=0, out=out[1:])
        return out

    def slice_steps(self, ta, tb):
        """Increment rows covering [ta, tb] (both on the grid)."""
        k0 = steps_on_grid(ta - self.t0, self.dt, "t_span start offset")
        k1 = steps_on_grid(tb - self.t0, self.dt, "t_span end offset")
        if k0 > k1 or k1 > self.n_steps:
            raise ValueError(f"window [{ta}, {tb}] outside path range [{self.t0}, {self.t1}]")
        return self.increments[k0:k1]


def sample_path(seed, t0, t1, dt):
    """Sample a WienerPath on [t0, t1] with step dt, deterministic in seed."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if t1 <= t0:
        raise ValueError("t1 must be > t0")
    n = steps_on_grid(t1 - t0, dt)
    rng = generator(seed)
    inc = rng.standard_normal((n, 2)) * math.sqrt(dt)
    return WienerPath(t0=float(t0), t1=float(t1), dt=float(dt), seed=int(seed), increments=inc)


def shift(path, s):
    """The shifted path theta_s omega on the overlapping window.

    (theta_s omega)(u) = omega(u + s) - omega(s): increments are reused
    verbatim with times relabeled by -s, and the window is trimmed to the
    part where the original path provides data, i.e. [t0, t1-s] for s >= 0
    and [t0-s, t1] for s < 0.  s must lie on the grid.
    """
    k = steps_on_grid(abs(s), path.dt, "shift")
    k = k if s >= 0 else -k
    n = path.n_steps
    lo = max(0, k)
    hi = min(n, n + k)
    if lo >= hi:
        raise ValueError("shift leaves an empty overlap window")
    inc = path.increments[lo:hi].copy()
    new_t0 = path.t0 + lo * path.dt - k * path.dt
    return WienerPath(t0=new_t0, t1=new_t0 + (hi - lo) * path.dt, dt=path.dt,
                      seed=path.seed, increments=inc)


def ou_innovation_scale(c, dt):
    """Scale mapping a Brownian increment to the exact-variance OU innovation."""
    return math.sqrt((1 - math.exp(-2 * c * dt)) / (2 * c * dt))


def ou_process(path, c, z_init=(0.0, 0.0)):
    """Ornstein-Uhlenbeck series dZ = -c Z dt + dW on the path grid.

    Exact-update discretization Z_{k+1} = exp(-c dt) Z_k + xi_k, where the
    innovation xi_k is the path's own increment scaled to the exact
    conditional variance (1 - exp(-2 c dt))/(2c).  Keeping the OU series and
    the raw path on one stream is what lets the conjugated integrator
    cross-check against the direct one with the same randomness.

    Returns (times, states) with states of shape (n+1, 2).
    """
    if c <= 0:
        raise ValueError("c must be > 0")
    dt = path.dt
    decay = math.exp(-c * dt)
    scale = ou_innovation_scale(c, dt)
    inc = path.increments
    n = inc.shape[0]
    out = np.empty((n + 1, 2))
    out[0] = np.asarray(z_init, dtype=float)
    # blocked exponential-weighted cumulative sums; block-local weights keep
    # exp() arguments small
    block = 1024
    z = out[0].copy()
    for k0 in range(0, n, block):
        m = min(block, n - k0)
        j = np.arange(1, m + 1)
        up = np.exp(c * dt * j)[:, None]
        down = np.exp(-c * dt * j)[:, None]
        acc = np.cumsum(up * inc[k0:k0 + m], axis=0)
        out[k0 + 1:k0 + m + 1] = down * (z + scale * acc)
        z = out[k0 + m]
    return path.times(), out


@dataclass(frozen=True)
class ControlPath:
    """Deterministic control path in C_0, sampled on a uniform grid.

    Evaluation between nodes is linear interpolation; the time derivative
    used by the controlled integrator is the forward difference on the grid.
    """

    t0: float
    dt: float
    samples: np.ndarray

    def __post_init__(self):
        self.samples.setflags(write=False)

    @property
    def t1(self):
        return self.t0 + self.dt * (self.samples.shape[0] - 1)

    def value(self, t):
        u = (t - self.t0) / self.dt
        k = min(int(u), self.samples.shape[0] - 2)
        w = u - k
        return (1 - w) * self.samples[k] + w * self.samples[k + 1]

    def step_derivatives(self):
        """Forward differences (g_{k+1} - g_k)/dt, shape (n, 2)."""
        return np.diff(self.samples, axis=0) / self.dt


def steering_path_hold(p, z, T, dt):
    """Control h(t) = -t f(z)/sigma that pins the controlled flow at z."""
    if p.sigma == 0:
        raise ValueError("steering paths require sigma > 0")
    n = steps_on_grid(T, dt)
    t = dt * np.arange(n + 1)
    f = drift(p, z)
    samples = -np.outer(t, f) / p.sigma
    return ControlPath(t0=0.0, dt=float(dt), samples=samples)


def steering_path_line(p, x, y, t0, dt):
    """Control driving the state from x to y along the straight line in time t0.

    With psi(t) = x + (t/t0)(y - x), returns
    h(t) = (psi(t) - x - int_0^t f(psi(s)) ds)/sigma, the integral computed
    by the trapezoid rule on the grid.
    """
    if p.sigma == 0:
        raise ValueError("steering paths require sigma > 0")
    if t0 <= 0:
        raise ValueError("t0 must be > 0")
    n = steps_on_grid(t0, dt)
    t = dt * np.arange(n + 1)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    psi = x[None, :] + np.outer(t / t0, y - x)
    f = np.array([drift(p, q) for q in psi])
    integral = np.zeros_like(psi)
    integral[1:] = np.cumsum(0.5 * dt * (f[:-1] + f[1:]), axis=0)
    samples = (psi - x[None, :] - integral) / p.sigma
    return ControlPath(t0=0.0, dt=float(dt), samples=samples)


def dump_path(path, stream, comment=None):
    """Write a path as CSV `t,dW1,dW2`, 17 significant digits per value."""
    if comment:
        stream.write(f"# {comment}\n")
    stream.write("t,dW1,dW2\n")
    t = path.t0
    for dw1, dw2 in path.increments:
        stream.write(f"{t:.17g},{dw1:.17g},{dw2:.17g}\n")
        t += path.dt


def load_path(stream, seed=0):
    """Read a path dumped by `dump_path`. The dt is inferred from the t column."""
    rows = []
    for line in stream:
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("t,"):
            continue
        rows.append([float(v) for v in line.split(",")])
    data = np.array(rows)
    if data.shape[0] < 2:
        raise ValueError("path file must contain at least two increments")
    dt = data[1, 0] - data[0, 0]
    t0 = data[0, 0]
    return WienerPath(t0=t0, t1=t0 + dt * data.shape[0], dt=dt, seed=seed,
                      increments=data[:, 1:3].copy())
