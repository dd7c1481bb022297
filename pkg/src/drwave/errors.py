"""Exception types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """A point lies outside the unit cube or an argument is out of range."""


class ConfigurationError(ValueError):
    """A model, estimator or experiment configuration is invalid."""
