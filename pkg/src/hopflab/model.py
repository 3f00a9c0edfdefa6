"""Model definition and closed-form quantities for the noisy Hopf normal form.

The system integrated throughout this package is the planar SDE

    dx = (alpha*x - beta*y - (a*x + b*y)*(x^2 + y^2)) dt + sigma dW1
    dy = (alpha*y + beta*x - (a*y - b*x)*(x^2 + y^2)) dt + sigma dW2

or, in polar coordinates for the drift, r' = alpha*r - a*r^3 and
theta' = beta + b*r^2.  ``alpha`` is the linear stability of the origin,
``beta`` the base rotation rate, ``a > 0`` the radial nonlinearity,
``b`` the shear (amplitude-phase coupling) and ``sigma >= 0`` the noise
amplitude.  In complex notation z = x + i*y the drift is

    f(z) = A z - B |z|^2 z,   A = alpha + i beta,   B = a - i b.

The sign convention for b is fixed by the Jacobian below; the system with
the opposite convention is orthogonally conjugate (reflect one axis and
negate beta) and noise-isotropy makes every distributional quantity in this
package invariant under that reflection, so only the convention's internal
consistency matters.

The stationary one-point density of the process is known in closed form and
is independent of b and beta; this module provides it together with the
derived quantities used by the rest of the package: the normalization
constant, the mean squared radius, the Lyapunov-sum closed form, the
synchronisation shear bound kappa, and an upper bound for the top Lyapunov
exponent.
"""

import math
from dataclasses import dataclass

import numpy as np

_SQRT_PI = math.sqrt(math.pi)


class UndefinedBoundError(ValueError):
    """Raised when a closed-form bound is requested outside its domain."""


@dataclass(frozen=True)
class Params:
    """Model constants. Single source of truth for every formula.

    alpha : linear stability of the origin (1/time)
    beta  : rotation rate (1/time)
    a     : radial nonlinearity, must be > 0
    b     : shear strength
    sigma : noise amplitude, must be >= 0
    """

    alpha: float
    beta: float
    a: float
    b: float
    sigma: float

    def __post_init__(self):
        vals = (self.alpha, self.beta, self.a, self.b, self.sigma)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("all parameters must be finite")
        if self.a <= 0:
            raise ValueError("a must be > 0")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")

    @property
    def A(self):
        """Linear part as a complex multiplier alpha + i*beta."""
        return complex(self.alpha, self.beta)

    @property
    def B(self):
        """Cubic part as a complex multiplier a - i*b."""
        return complex(self.a, -self.b)


def _require_noise(p):
    if p.sigma == 0:
        raise UndefinedBoundError("sigma must be > 0 for stationary-density quantities")


def drift(p, z):
    """Deterministic vector field f(z) = A z - B (x^2+y^2) z.

    ``z`` is any length-2 sequence; returns an ndarray (fx, fy).
    """
    x, y = float(z[0]), float(z[1])
    s = x * x + y * y
    fx = p.alpha * x - p.beta * y - s * (p.a * x + p.b * y)
    fy = p.beta * x + p.alpha * y - s * (p.a * y - p.b * x)
    return np.array([fx, fy])


def jacobian(p, z):
    """Jacobian Df(z) of the drift, as a 2x2 ndarray.

    Entries (row-major): alpha - 3a x^2 - a y^2 - 2b x y,
    -beta - b x^2 - 3b y^2 - 2a x y, beta + 3b x^2 + b y^2 - 2a x y,
    alpha - a x^2 - 3a y^2 + 2b x y.  At z = (w, w) the (2,2) entry is
    alpha + 2(b - 2a) w^2, the diagonal growth rate that large shear makes
    arbitrarily large.
    """
    x, y = float(z[0]), float(z[1])
    al, be, a, b = p.alpha, p.beta, p.a, p.b
    return np.array([
        [al - 3 * a * x * x - a * y * y - 2 * b * x * y,
         -be - b * x * x - 3 * b * y * y - 2 * a * x * y],
        [be + 3 * b * x * x + b * y * y - 2 * a * x * y,
         al - a * x * x - 3 * a * y * y + 2 * b * x * y],
    ])


def _symmetric_part_extremes(p, z):
    m = jacobian(p, z)
    mean = 0.5 * (m[0, 0] + m[1, 1])
    d = 0.5 * (m[0, 0] - m[1, 1])
    e = 0.5 * (m[0, 1] + m[1, 0])
    r = math.hypot(d, e)
    return mean - r, mean + r


def lambda_plus(p, z):
    """Largest eigenvalue of the symmetric part of Df(z).

    Equals the maximum of <Df(z) r, r> over unit vectors r, and is bounded
    by alpha + (sqrt(a^2+b^2) - 2a)(x^2+y^2).
    """
    return _symmetric_part_extremes(p, z)[1]


def lambda_minus(p, z):
    """Smallest eigenvalue of the symmetric part of Df(z).

    Satisfies lambda_minus >= alpha - 4a(x^2+y^2) whenever |b| <= sqrt(3) a.
    """
    return _symmetric_part_extremes(p, z)[0]


def normalization_K(p):
    """Constant K making the stationary density integrate to exactly 1.

    K = sqrt(2a) exp(-alpha^2/(2 a sigma^2))
        / (pi^(3/2) sigma erfc(-alpha / (sigma sqrt(2a)))).

    Forcing the normalization fixes every downstream moment identity;
    pi*K*sigma^2 = a*E[x^2+y^2] - alpha always holds.
    """
    _require_noise(p)
    al, a, sig = p.alpha, p.a, p.sigma
    arg = -al / (sig * math.sqrt(2 * a))
    return (math.sqrt(2 * a) * math.exp(-al * al / (2 * a * sig * sig))
            / (math.pi * _SQRT_PI * sig * math.erfc(arg)))


def displayed_normalization_K(p):
    """The commonly displayed (non-normalizing) constant, kept for auditing.

    Exceeds `normalization_K` by the factor 2*pi*exp(alpha^2/(2 a sigma^2));
    a density built with it integrates to that factor instead of 1.  The
    `verify` CLI subcommand reports the discrepancy.
    """
    _require_noise(p)
    al, a, sig = p.alpha, p.a, p.sigma
    arg = -al / (sig * math.sqrt(2 * a))
    return 2 * math.sqrt(2 * a) / (_SQRT_PI * sig * math.erfc(arg))


def stationary_density(p, z):
    """Stationary density p(x, y); radially symmetric, independent of b, beta."""
    _require_noise(p)
    x, y = float(z[0]), float(z[1])
    s = x * x + y * y
    expo = (2 * p.alpha * s - p.a * s * s) / (2 * p.sigma * p.sigma)
    return normalization_K(p) * math.exp(expo)


def radial_density(p, s):
    """Density of s = x^2 + y^2 under the stationary law: pi*K*exp(...).

    Vectorized in ``s``.
    """
    _require_noise(p)
    s = np.asarray(s, dtype=float)
    expo = (2 * p.alpha * s - p.a * s * s) / (2 * p.sigma * p.sigma)
    return math.pi * normalization_K(p) * np.exp(expo)


def expected_squared_radius(p):
    """Stationary mean of x^2 + y^2: (alpha + pi K sigma^2) / a."""
    _require_noise(p)
    return (p.alpha + math.pi * normalization_K(p) * p.sigma ** 2) / p.a


def lambda_sum_closed_form(p):
    """Sum of both Lyapunov exponents: 2 alpha - 4 a E[x^2+y^2]; always < 0."""
    _require_noise(p)
    return 2 * p.alpha - 4 * p.a * expected_squared_radius(p)


def kappa(p):
    """Shear bound kappa = a sqrt(q(q+2)), q = pi K sigma^2/(alpha + pi K sigma^2).

    The top Lyapunov exponent is negative whenever |b| <= kappa.  At
    alpha = 0 the ratio q is exactly 1 and kappa = sqrt(3) a.
    """
    _require_noise(p)
    j = math.pi * normalization_K(p) * p.sigma ** 2
    denom = p.alpha + j
    if denom <= 0:
        raise UndefinedBoundError("bound undefined: alpha + pi K sigma^2 <= 0")
    q = j / denom
    return p.a * math.sqrt(q * (q + 2))


def lyapunov_upper_bound(p):
    """Strict upper bound for the top Lyapunov exponent.

    -pi K sigma^2 + (sqrt(1 + b^2/a^2) - 1)(alpha + pi K sigma^2).
    Vanishes exactly at |b| = kappa(p).
    """
    _require_noise(p)
    j = math.pi * normalization_K(p) * p.sigma ** 2
    return -j + (math.sqrt(1 + (p.b / p.a) ** 2) - 1) * (p.alpha + j)
