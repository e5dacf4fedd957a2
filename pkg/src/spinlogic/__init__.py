"""Simulator for a reconfigurable two-nanowire spin/pseudo-spin logic device."""

__version__ = "0.1.0"
