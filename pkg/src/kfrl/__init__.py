"""Keyframe-guided stage rewards and human-in-the-loop actor-critic training."""

__version__ = "0.1.0"
