"""Lepage equivalents of Lagrangians on jet bundles, computed exactly."""

__all__ = [
    "errors",
    "syntax",
    "synthesis",
    "lepage_methods",
    "suites",
]

__version__ = "0.1.0"
