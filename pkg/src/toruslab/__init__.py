"""Exact and Monte Carlo laboratory for ergodic automorphisms of the torus."""

__version__ = "0.1.0"
SCHEMA_VERSION = 1
