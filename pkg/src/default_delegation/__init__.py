"""Default delegation: regulated bargaining between a worker and a firm."""

__version__ = "0.1.0"
