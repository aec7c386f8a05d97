"""Jet coordinates, scalar expressions, exterior forms, and their text formats."""
