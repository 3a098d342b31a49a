"""Batch pipeline that synthesizes graph-to-text datasets from raw article
text: sentence collection, LLM triplet extraction, consistency filtering,
analytics, evaluation sheets and training-ready linearizations."""

__version__ = "0.1.0"
