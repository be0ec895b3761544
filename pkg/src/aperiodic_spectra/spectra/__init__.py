"""Spectral computations: tight-binding operators, band structures, continuum models."""

from . import bands, continuum, luck, tightbinding

__all__ = ["bands", "continuum", "luck", "tightbinding"]
