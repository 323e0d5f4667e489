"""VeraSel: verifiable weighted selection of mixnode active sets."""

__version__ = "0.1.0"
