"""Pseudo-spectral MLL, MHD and Hall-MHD simulation with balance-law diagnostics."""

__version__ = "0.1.0"
