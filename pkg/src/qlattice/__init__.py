"""Verification lab for the geometry of 3D circular lattices and the three
known solutions of the quantum tetrahedron equation."""

__version__ = "0.1.0"
