"""Constructions of Lepage equivalents, chart changes, and the metric example."""
