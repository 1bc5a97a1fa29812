"""Shallow quantum circuits vs. local classical samplers, at desk scale."""

__version__ = "0.1.0"
