"""High-frequency CLT diagnostics for Hermite-subordinated Gaussian fields on the torus."""
__version__ = "0.1.0"
