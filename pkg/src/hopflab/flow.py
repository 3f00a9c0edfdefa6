"""Time integration of the SDE, the tangent (variational) flow, the
OU-conjugated random ODE, and deterministic controlled systems.

Schemes follow one fixed recipe: Euler-Maruyama with dt = 1e-3 for the
state, an explicit second-order Runge-Kutta (Heun) step for everything
propagated along stored states.  The Heun stages for the tangent use the
Jacobian at consecutive grid states, so the tangent flow over a window is a
fixed product of per-step 2x2 factors and block-splitting it (cocycle
property) is exact on the grid.
"""

from dataclasses import dataclass

import numpy as np

from . import _engine
from ._engine import BlowUpError, TangentBlowUpError  # re-exported  # noqa: F401
from .noise import steps_on_grid


@dataclass(frozen=True)
class Trajectory:
    """Time-indexed solution states along one noise path."""

    times: np.ndarray
    states: np.ndarray          # (n+1, 2)
    params: object
    seed: int | None = None
    scheme: str = "euler-maruyama"

    @property
    def dt(self):
        return float(self.times[1] - self.times[0])

    def states_complex(self):
        return self.states[:, 0] + 1j * self.states[:, 1]


@dataclass(frozen=True)
class TangentFlow:
    """2x2 tangent matrices Phi(t) along a base trajectory, Phi(0) = Id."""

    times: np.ndarray
    matrices: np.ndarray        # (n+1, 2, 2)
    base: Trajectory


@dataclass(frozen=True)
class LogNormSeries:
    """Per-renormalization log norms from a joint run.

    ``log_r1`` accumulates the leading QR diagonal (top-direction growth),
    ``log_r2`` the second; their sums over any window give the exact log
    column norm and log determinant of the tangent over that window.
    """

    times: np.ndarray
    log_r1: np.ndarray
    log_r2: np.ndarray

    @property
    def total_r1(self):
        return float(self.log_r1.sum())

    @property
    def total_r2(self):
        return float(self.log_r2.sum())


def _window(path, t_span):
    if t_span is None:
        t_span = (path.t0, path.t1)
    ta, tb = float(t_span[0]), float(t_span[1])
    if tb <= ta:
        raise ValueError("empty integration window")
    return ta, tb, path.slice_steps(ta, tb)


def _complex_to_xy(z):
    return np.column_stack([z.real, z.imag])


def integrate_sde(p, path, z0, t_span=None):
    """Euler-Maruyama trajectory z_{k+1} = z_k + f(z_k) dt + sigma dW_k.

    Raises BlowUpError if the state norm exceeds 1e8 (the cubic dissipation
    precludes true blow-up; treat an occurrence as a step-size failure).
    """
    ta, tb, inc = _window(path, t_span)
    states = _engine.em_states(p, inc, z0, path.dt)
    times = ta + path.dt * np.arange(states.shape[0])
    return Trajectory(times=times, states=_complex_to_xy(states), params=p, seed=path.seed)


def integrate_variational(p, traj):
    """Tangent flow by Heun along the stored trajectory states."""
    z = traj.states_complex()
    P, Q = _engine.heun_tangent_along(p, z, traj.dt)
    n = len(P)
    mats = np.empty((n, 2, 2))
    mats[:, 0, 0] = P.real + Q.real
    mats[:, 0, 1] = -P.imag + Q.imag
    mats[:, 1, 0] = P.imag + Q.imag
    mats[:, 1, 1] = P.real - Q.real
    return TangentFlow(times=traj.times, matrices=mats, base=traj)


def integrate_joint(p, path, z0, t_span=None, renorm_every=10):
    """Fused trajectory + tangent run with periodic QR renormalization.

    Returns (Trajectory, LogNormSeries).  The running sums of log r feed the
    Lyapunov estimators; block products reproduce `integrate_variational`
    exactly because the per-step factors are identical.
    """
    if renorm_every < 1:
        raise ValueError("renorm_every must be >= 1")
    ta, tb, inc = _window(path, t_span)
    states, steps, l1, l2 = _engine.joint_with_records(p, inc, z0, path.dt, renorm_every)
    times = ta + path.dt * np.arange(states.shape[0])
    traj = Trajectory(times=times, states=_complex_to_xy(states), params=p, seed=path.seed)
    return traj, LogNormSeries(times=ta + path.dt * steps, log_r1=l1, log_r2=l2)


def integrate_rde_ou(p, path, c, z0, t_span=None):
    """Integrate via the OU-conjugated random ODE; cross-check route.

    Solves dPsi/dt = f(Psi + sigma Z*) + c sigma Z* by Heun with the OU
    state held per step and returns phi = Psi + sigma Z*; any c > 0 must
    agree with `integrate_sde` up to discretization error.
    """
    if c <= 0:
        raise ValueError("c must be > 0")
    ta, tb, inc = _window(path, t_span)
    states = _engine.heun_rde_ou(p, inc, c, z0, path.dt)
    times = ta + path.dt * np.arange(states.shape[0])
    return Trajectory(times=times, states=_complex_to_xy(states), params=p,
                      seed=path.seed, scheme="rde-ou-heun")


def integrate_controlled(p, control, z0, t_span=None):
    """Deterministic flow of dz/dt = f(z) + sigma g'(t) plus its tangent.

    g' is the forward difference of the stored control samples, held
    constant within each step; steering paths are generated on the same grid
    so no interpolation error enters.
    """
    if t_span is None:
        t_span = (control.t0, control.t1)
    ta, tb = float(t_span[0]), float(t_span[1])
    n = steps_on_grid(tb - ta, control.dt)
    states = _engine.heun_controlled(p, control, z0, n, control.dt)
    times = ta + control.dt * np.arange(n + 1)
    traj = Trajectory(times=times, states=_complex_to_xy(states), params=p,
                      scheme="controlled-heun")
    return traj, integrate_variational(p, traj)


def two_point_distance(p, path, u, v, t_span=None):
    """Distance series between two solutions under the SAME path."""
    ta, tb, inc = _window(path, t_span)
    zu = _engine.em_states(p, inc, u, path.dt)
    zv = _engine.em_states(p, inc, v, path.dt)
    times = ta + path.dt * np.arange(zu.shape[0])
    return times, np.abs(zu - zv)


def dump_trajectory(traj, stream, comment=None):
    """CSV dump `t,x,y` with 17 significant digits."""
    if comment:
        stream.write(f"# {comment}\n")
    stream.write("t,x,y\n")
    for t, (x, y) in zip(traj.times, traj.states):
        stream.write(f"{t:.17g},{x:.17g},{y:.17g}\n")


def dump_tangent(tf, stream, comment=None):
    """CSV dump `t,phi11,phi12,phi21,phi22`."""
    if comment:
        stream.write(f"# {comment}\n")
    stream.write("t,phi11,phi12,phi21,phi22\n")
    for t, m in zip(tf.times, tf.matrices):
        stream.write(f"{t:.17g},{m[0, 0]:.17g},{m[0, 1]:.17g},{m[1, 0]:.17g},{m[1, 1]:.17g}\n")


def liouville_residual(p, tf):
    """Max |ln det Phi(t) - int_0^t tr Df| over the grid (O(dt^2) check)."""
    from .model import jacobian

    dets = np.linalg.det(tf.matrices)
    z = tf.base.states
    traces = np.array([np.trace(jacobian(p, q)) for q in z])
    dt = tf.base.dt
    itr = np.zeros(len(traces))
    itr[1:] = np.cumsum(0.5 * dt * (traces[:-1] + traces[1:]))
    return float(np.max(np.abs(np.log(dets) - itr)))
