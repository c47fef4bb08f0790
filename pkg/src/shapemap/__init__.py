"""Shape operators and collapse prediction for congruences of PDE solutions."""

__version__ = "0.1.0"
