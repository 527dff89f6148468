"""Self-similar implosion profiles and degenerate-viscosity radial Navier-Stokes solver."""

__version__ = "0.1.0"
