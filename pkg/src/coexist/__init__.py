"""Certificates and localized solutions for coexistence fixed-point problems in cones.

Modules
-------
cones
    Cone sections, retraction and the min-functional.
expr
    Expression language for user nonlinearities.
boxopt
    Extrema of bivariate functions over rectangles.
hammerstein
    Systems of Hammerstein integral equations.
plaplacian
    Radial solutions of (p1, p2)-Laplacian systems.
miranda
    Poincare-Miranda face conditions and zero finding.
cli
    The ``coexist`` command.
"""

from .certificate import Certificate, SolutionRecord
from .cones import ConeBox, PhiSection, Regime, Tag
from .nonlinearity import Nonlinearity

__all__ = [
    "Certificate",
    "SolutionRecord",
    "ConeBox",
    "PhiSection",
    "Regime",
    "Tag",
    "Nonlinearity",
]

__version__ = "0.1.0"
