"""Shared exception base for the library."""


class NablaError(Exception):
    """Base class for every error raised by nablatc."""
