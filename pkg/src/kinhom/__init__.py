"""Kinetic transport homogenization toolkit."""
__version__ = "0.1.0"
