"""Deployment planning and clock-error simulation for GPS-simulator indoor positioning."""

__version__ = "0.1.0"
