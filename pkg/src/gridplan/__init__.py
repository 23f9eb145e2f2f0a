"""Power and gas expansion planning under weather uncertainty."""

__version__ = "0.1.0"
