"""Send raw color video as its lightness plane plus a small colorization network."""

__version__ = "0.1.0"
