"""Tool-calling agent loop for simulated UAV swarms exposed as WoT Things."""

__version__ = "0.1.0"
