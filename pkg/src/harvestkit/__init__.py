"""Harvesting predictions from observed traffic dynamics with a linear readout."""

__version__ = "0.1.0"
