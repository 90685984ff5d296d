"""Configuration, record and result models."""
