"""Question answering over documents represented as open-IE triplet KBs."""

__version__ = "0.1.0"
