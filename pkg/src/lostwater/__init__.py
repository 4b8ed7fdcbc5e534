"""Georectification and waterway-change workbench for scanned historical maps."""

__version__ = "0.1.0"
