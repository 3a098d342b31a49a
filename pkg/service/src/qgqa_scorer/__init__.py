"""Referenceless graph-text consistency scoring service: question generation
over graph-derived answer candidates, extractive answering against the text
(and the reverse direction), aggregated per item."""

__version__ = "0.1.0"
