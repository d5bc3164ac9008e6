"""Shared exception base for the cascadesum package."""


class CascadesumError(Exception):
    """Base class for all errors raised by cascadesum modules."""
