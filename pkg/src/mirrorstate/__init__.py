"""Quantum state of a suspended mirror under continuous measurement.

Modules
-------
config        parameter record and config loading
steady_state  classical steady state of cavity, beam and mirror
two_mode      coupling coefficients, normal modes, structural damping
spectra       frequency-domain responses and spectral densities
wiener        causal factorization and Wiener filters
covariance    conditional covariances (residues and quadrature)
one_mode      point-mirror model and its closed forms
analysis      purity, Wigner ellipses, negativity
cli           command-line front end
"""
from .config import PhysicalParams, load_params, load_params_file, table1

__all__ = ["PhysicalParams", "load_params", "load_params_file", "table1"]
__version__ = "0.1.0"
