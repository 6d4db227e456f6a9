"""Simulation and training of multilayer spintronic radio-frequency neural networks."""

__version__ = "0.1.0"
