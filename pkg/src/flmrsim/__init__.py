"""Federated neurosymbolic CPU-load forecasting for virtual base stations."""

__version__ = "0.1.0"
