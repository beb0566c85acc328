"""Behavioral feature extraction from smartphone and wearable sensor streams."""

__version__ = "0.1.0"
