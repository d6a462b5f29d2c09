"""Polar-coded PPM for the photon-counting Poisson channel."""

from .channel import ChannelParams, ZeroNoiseError

__version__ = "0.1.0"

__all__ = ["ChannelParams", "ZeroNoiseError", "__version__"]
