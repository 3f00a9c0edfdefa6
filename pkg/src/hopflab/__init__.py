"""hopflab: a numerical laboratory for the stochastically forced Hopf normal form.

Integrates the planar SDE and its tangent flow, estimates asymptotic and
finite-time Lyapunov exponents, simulates pullback attractors and
synchronisation, evaluates the closed-form stationary quantities, and sweeps
the (b, alpha) plane for the synchronisation/chaos boundary.
"""

from ._engine import BlowUpError, TangentBlowUpError
from .model import Params, UndefinedBoundError

__version__ = "0.1.0"

__all__ = ["Params", "BlowUpError", "TangentBlowUpError", "UndefinedBoundError",
           "__version__"]
