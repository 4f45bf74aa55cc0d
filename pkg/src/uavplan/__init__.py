"""Completion-time planning for a buffer-aided sensing UAV."""
__version__ = "0.1.0"
