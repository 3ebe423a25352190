"""Feynman-Vernon error-scaling toolkit.

Coherent-state spin propagators, harmonic-bath influence kernels, exact
small-system open dynamics, toric-code matrix elements and channel error
rates.  Units: hbar = k_B = 1, frequencies in rad/s.
"""

__version__ = "0.1.0"
