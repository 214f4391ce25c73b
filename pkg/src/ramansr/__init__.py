"""Mean-field simulation and stability analysis of weak-pump Raman superradiance."""

__version__ = "0.1.0"
