"""Numerical verification lab for heat kernels of fractional and
polyharmonic Schrodinger operators with Kato-class potentials."""

from fracheat.quadrature import (
    QuadratureSpec,
    ErrorEstimate,
    RadialGrid,
    QuadratureError,
    integrate,
    bessel_j,
    oscillatory_bessel_integral,
    dft_1d,
)

__version__ = "0.1.0"
