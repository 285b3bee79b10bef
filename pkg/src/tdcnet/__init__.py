"""Cross-layer importance analysis for interdependent T&D&C networks."""

__version__ = "0.1.0"
