"""Second-order ensemble time stepping for incompressible Navier-Stokes with
a POD-Galerkin reduced-order model."""

__version__ = "0.1.0"
