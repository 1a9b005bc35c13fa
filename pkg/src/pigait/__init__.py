"""Human-structure interaction toolkit: gait -> floor vibration, and back."""

__version__ = "0.1.0"
