"""High-precision toolkit for the GUE average E_N(z, t) of
prod_j exp(-z^2/(2 x_j^2) + t/x_j): exact Hankel route, large-N
asymptotics, Riemann-Hilbert checks and Monte Carlo."""

from .precision import PrecisionContext

__version__ = "0.1.0"
__all__ = ["PrecisionContext"]
