"""Reconstructed discontinuous approximation (RDA) for elliptic problems."""
__version__ = "0.1.0"
