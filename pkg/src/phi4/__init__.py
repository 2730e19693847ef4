"""Module for the spectral / stochastic numerics backend"""

__version__ = "1.0.0"
