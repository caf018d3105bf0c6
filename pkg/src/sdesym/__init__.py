"""sdesym: symmetry analysis, reduction and Monte Carlo validation for
Ito stochastic differential equations."""

__version__ = "0.1.0"
