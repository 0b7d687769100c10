"""Receding-horizon EV fleet charging coordination under transformer thermal limits."""

__version__ = "0.1.0"
