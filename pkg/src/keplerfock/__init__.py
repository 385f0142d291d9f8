"""Hydrogen coherent states, the Moser and Fock maps, and their semiclassical limits."""

__version__ = "0.1.0"
