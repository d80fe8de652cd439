"""Classical simulation toolkit for quantum fast-forwarding of lazy random walks."""

__version__ = "0.1.0"
