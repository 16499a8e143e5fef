"""Relay selection and relay-side decoding for physical-layer network coding
in a single heterogeneous cell."""

__version__ = "0.1.0"
# bumped whenever CSV/JSON output columns or keys change
SCHEMA_VERSION = "1"
