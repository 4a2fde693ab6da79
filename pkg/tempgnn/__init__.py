"""Session-based next-item recommendation over temporal session graphs."""

__version__ = "0.1.0"
