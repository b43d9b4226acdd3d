"""Secure radionavigation protocols, attack simulation and meaconing-aware positioning."""

__version__ = "0.1.0"
