"""Dobrushin interfaces in the Potts, FK, six-vertex and Ashkin-Teller random-cluster models."""
from .params import ModelParams, check_selfdual, from_q

__all__ = ["ModelParams", "check_selfdual", "from_q"]
__version__ = "0.1.0"
