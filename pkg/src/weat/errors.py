"""Shared exception base classes.

Every toolkit error derives from :class:`WeatError`. The ``exit_code``
attribute drives CLI exit statuses: 1 for validation-style failures,
2 for provider/IO failures.
"""

from __future__ import annotations


class WeatError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ProviderIOError(WeatError):
    """Base class for provider and IO failures (CLI exit code 2)."""

    exit_code = 2
