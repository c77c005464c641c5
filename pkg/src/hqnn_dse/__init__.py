"""Hybrid quantum neural network design-space exploration toolkit."""

__version__ = "0.1.0"
