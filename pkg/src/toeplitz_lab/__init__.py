"""Eigenvalues of randomly perturbed bidiagonal Toeplitz matrices.

Modules:
    symbol_geometry  symbol, confocal ellipses, characteristic roots
    density_core     kernels K_N, K_inf, the density xi and identity checks
    ensemble_sim     matrices, Gaussian perturbations, Monte Carlo counts
    regime           admissible (N, delta, r0) ranges
    cli              command-line interface
"""
__version__ = "0.1.0"

from .symbol_geometry import SymbolParams, normalize  # noqa: E402

__all__ = ["SymbolParams", "normalize", "__version__"]
