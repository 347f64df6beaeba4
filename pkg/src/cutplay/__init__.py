"""Cut-and-Play equilibrium computation for reciprocally-bilinear games."""
__version__ = "0.1.0"
