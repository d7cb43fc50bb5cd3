"""Property-based random testing workbench for a small relational engine."""

__version__ = "0.1.0"
