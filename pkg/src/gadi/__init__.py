"""GADI splitting solvers."""
__version__ = "0.1.0"
