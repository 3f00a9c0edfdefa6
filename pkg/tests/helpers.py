"""Shared test oracles: quadrature twins of the closed forms and a
brute-force direction oracle for the symmetric-part eigenvalues.

Kept independent of the implementation paths they check: the quadrature
twins integrate the radial law directly (adaptive Simpson on s = r^2,
truncated where the integrand underflows), and the direction oracle samples
the quadratic form on unit vectors.  Quadrature results are cached per
parameter point; several test modules hit the same grid.
"""

import math
from functools import lru_cache

import numpy as np

from hopflab import model


def adaptive_simpson(f, lo, hi, tol=1e-13, depth=40):
    def simp(a, b, fa, fm, fb):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        flm, frm = f(0.5 * (a + m)), f(0.5 * (m + b))
        left = simp(a, m, fa, flm, fm)
        right = simp(m, b, fm, frm, fb)
        err = abs(left + right - whole)
        # the floor keeps the recursion from chasing noise below machine
        # precision (exponential blowup on boundary-layer integrands)
        if depth <= 0 or err < 15 * tol or err < 1e-15 * (abs(left) + abs(right)) + 1e-300:
            return left + right + (left + right - whole) / 15.0
        return (rec(a, m, fa, flm, fm, left, tol / 2, depth - 1)
                + rec(m, b, fm, frm, fb, right, tol / 2, depth - 1))

    m = 0.5 * (lo + hi)
    fa, fm, fb = f(lo), f(m), f(hi)
    return rec(lo, hi, fa, fm, fb, simp(lo, hi, fa, fm, fb), tol, depth)


def radial_tail(p):
    """s beyond which exp((2 alpha s - a s^2)/(2 sigma^2)) < 1e-300."""
    s_peak = max(p.alpha / p.a, 0.0)
    return s_peak + math.sqrt(1400.0 * p.sigma ** 2 / p.a) + 1.0


def radial_integrand(p):
    al, a, sig = p.alpha, p.a, p.sigma

    def g(s):
        return math.exp((2 * al * s - a * s * s) / (2 * sig * sig))

    return g


def adaptive_simpson_panels(f, breakpoints, tol=1e-12):
    """Adaptive Simpson over explicit panels.

    Panel boundaries must resolve the integrand's structure; a single span
    can terminate on spuriously-zero estimates when every initial sample
    lands beyond a boundary layer.
    """
    return sum(adaptive_simpson(f, a, b, tol=tol)
               for a, b in zip(breakpoints[:-1], breakpoints[1:]))


def radial_panels(p):
    """Panel boundaries on [0, tail] spaced by the Gaussian width sigma/sqrt(a)."""
    hi = radial_tail(p)
    h = p.sigma / math.sqrt(p.a)
    pts = list(np.arange(0.0, hi, h)) + [hi]
    return pts


@lru_cache(maxsize=256)
def _radial_moments(p):
    """(integral of g, integral of s*g) over the radial law, cached."""
    g = radial_integrand(p)
    pts = radial_panels(p)
    return (adaptive_simpson_panels(g, pts, tol=1e-13),
            adaptive_simpson_panels(lambda s: s * g(s), pts, tol=1e-13))


def quad_density_mass(p):
    """Quadrature twin of the normalization: should be exactly 1."""
    return math.pi * model.normalization_K(p) * _radial_moments(p)[0]


def quad_normalization_K(p):
    """K forced by quadrature alone (no closed form involved)."""
    return 1.0 / (math.pi * _radial_moments(p)[0])


def quad_mean_s(p):
    m0, m1 = _radial_moments(p)
    return m1 / m0


def quad_lambda_sum(p):
    return 2 * p.alpha - 4 * p.a * quad_mean_s(p)


def quad_kappa(p):
    j = p.a * quad_mean_s(p) - p.alpha     # pi K sigma^2 via the moment identity
    q = j / (p.alpha + j)
    return p.a * math.sqrt(q * (q + 2))


def brute_force_extreme(p, z, largest=True, n_dirs=720, refine=True):
    """Extreme of <Df(z) r, r> over unit directions by grid + parabolic refine."""
    m = model.jacobian(p, z)
    phis = np.linspace(0.0, 2 * math.pi, n_dirs, endpoint=False)
    c, s = np.cos(phis), np.sin(phis)
    vals = (m[0, 0] * c * c + (m[0, 1] + m[1, 0]) * c * s + m[1, 1] * s * s)
    k = int(vals.argmax() if largest else vals.argmin())
    best = float(vals[k])
    if not refine:
        return best
    f0, f1, f2 = vals[(k - 1) % n_dirs], vals[k], vals[(k + 1) % n_dirs]
    denom = f0 - 2 * f1 + f2
    if denom != 0:
        dphi = phis[1] - phis[0]
        t = phis[k] + 0.5 * dphi * (f0 - f2) / denom
        v = np.array([math.cos(t), math.sin(t)])
        cand = float(v @ (m @ v))
        best = max(best, cand) if largest else min(best, cand)
    return best


def random_params(rng, b_range=(-3.0, 3.0), sigma=1.0):
    return model.Params(alpha=float(rng.uniform(-2, 2)), beta=float(rng.uniform(-2, 2)),
                        a=float(rng.uniform(0.2, 2.0)), b=float(rng.uniform(*b_range)),
                        sigma=sigma)
