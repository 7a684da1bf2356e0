"""Model-less deployment toolchain: interpret, compile, verify, sniff."""

__version__ = "0.1.0"
