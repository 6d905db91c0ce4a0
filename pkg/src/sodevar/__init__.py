"""Symbolic and numeric tools for the inverse problem of the calculus of
variations for systems of second-order ODEs (semisprays)."""

__version__ = "0.1.0"
