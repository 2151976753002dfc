"""Frame fields from constrained symmetric traceless 3-tensors."""

__version__ = "0.1.0"
