"""Numerical laboratory for interacting bosons in thin twisted waveguides.

Pipeline: framed curve geometry -> transverse Dirichlet modes -> interaction
scaling and effective coupling -> effective 1D nonlinear Schroedinger
dynamics, cross-checked against an exact few-boson simulator and the
projector/weight condensation calculus.
"""

__version__ = "0.1.0"

from . import condensation, geometry, manybody, nls, scaling, transverse
