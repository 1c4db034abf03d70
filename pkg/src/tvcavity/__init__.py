"""Temporal mode shaping of spectrally compressed pulses in a time-varying
Fabry-Perot cavity."""

__version__ = "0.1.0"
