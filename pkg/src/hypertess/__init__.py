"""Hyperbolic tessellations, Berezin-kernel point processes and expansion audits."""

__version__ = "0.1.0"
