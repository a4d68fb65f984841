"""Secret-key-rate bounds from RSS observations over LoS multipath channels."""

__version__ = "0.1.0"
