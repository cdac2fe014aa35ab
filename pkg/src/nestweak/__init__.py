"""Toolkit for weakly supervised nested NER data preparation, LLM prompting and evaluation."""

__version__ = "0.1.0"
