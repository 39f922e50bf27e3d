"""Unsupervised floor separation from Wi-Fi fingerprint trajectories."""

__version__ = "0.1.0"
