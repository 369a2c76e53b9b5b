"""bacscan: replay-and-mutate scanner for broken access control in captured API traffic."""

__version__ = "0.1.0"
