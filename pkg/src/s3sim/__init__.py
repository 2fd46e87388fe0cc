"""Exact simulation of the qubit/qutrit controlled charge-conjugation protocol through D(S3)."""

__version__ = "0.1.0"
