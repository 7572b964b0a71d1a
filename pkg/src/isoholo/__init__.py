"""Holonomies of mixed states via iso-entangled purifications."""

__version__ = "0.1.0"
