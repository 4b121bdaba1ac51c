"""Fairness-aware ROC evaluation of clusterings."""

__version__ = "0.1.0"
