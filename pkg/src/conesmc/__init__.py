"""Sliding-mode control for affine systems with uncertain, indefinite gain matrices."""

__version__ = "0.1.0"
