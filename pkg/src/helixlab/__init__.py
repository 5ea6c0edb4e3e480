"""Numerical laboratory for helicoidal minimal surfaces in S^2 x R.

Subpackages cover the ambient geometry, a minimal-graph solver, Killing-field
fluxes, harmonic barriers, Laurent and residue tools, the neck force model,
inequality checkers and a command-line driver.
"""

__version__ = "0.1.0"
