"""Indoor NOMA visible-light-communication downlink simulator."""

__version__ = "0.1.0"
