"""Generalized DMT of the two-user MIMO interference channel.

Submodules
----------
exponents
    Eigenvalue-exponent calculus (conditional density exponent, Wishart
    marginals, log-det exponents).
solver
    Grid-search oracle that re-derives outage exponents numerically.
closed_form
    Closed-form piecewise-linear DMT curves.
channel
    Rayleigh channel sampling, log-det capacity bounds and rate regions.
outage
    Monte-Carlo outage estimates and diversity-slope fitting.
cli
    Command-line front end (``icdmt``).
"""

from .closed_form import (
    BoundId,
    UnsupportedClosedForm,
    d_ic_alpha1,
    d_ic_nocsit_asym,
    d_ic_optimal,
    d_mac,
    d_o3,
    d_o5,
    d_o6,
    d_ptp,
    sample_curve,
)
from .curves import PiecewiseCurve
from .exponents import ExponentTriple, ExponentVector

__version__ = "0.1.0"

__all__ = [
    "BoundId",
    "ExponentTriple",
    "ExponentVector",
    "PiecewiseCurve",
    "UnsupportedClosedForm",
    "d_ic_alpha1",
    "d_ic_nocsit_asym",
    "d_ic_optimal",
    "d_mac",
    "d_o3",
    "d_o5",
    "d_o6",
    "d_ptp",
    "sample_curve",
]
