"""Safe carrier-sensing ranges and incremental-power carrier sensing for CSMA networks."""

__version__ = "0.1.0"
