"""Classical and quantum chaos in the anisotropic XY spin chain in a tilted field."""

__version__ = "0.1.0"
