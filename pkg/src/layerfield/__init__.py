"""Multi-layered field representation of many-particle quantum states on a 3D lattice."""

__version__ = "0.1.0"
