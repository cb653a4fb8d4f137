"""Turn occurrence nets with confusion into confusion-free nets with persistent places."""

__version__ = "0.1.0"
