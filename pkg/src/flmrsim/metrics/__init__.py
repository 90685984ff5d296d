"""Empty init to make the package importable."""
