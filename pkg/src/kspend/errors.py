"""Exception types shared across the package."""

from __future__ import annotations


class KspendError(Exception):
    """Base class for all domain errors."""


class InvalidParameters(KspendError):
    """A closed-form or generator argument is out of its admissible range."""


class InvalidFaultySet(KspendError):
    """The faulty set is not a subset of any declared maximal faulty set."""


class InvalidQuorumMap(KspendError):
    """A quorum choice is missing or not drawn from that process's quorum system."""


class SizeLimitExceeded(KspendError):
    """An exact search outgrew its configured budget.

    ``partial_maximum`` carries the best value found before the budget ran
    out (None when the search could not start at all).
    """

    def __init__(self, message: str, partial_maximum: int | None = None):
        super().__init__(message)
        self.partial_maximum = partial_maximum


class UnresolvedInput(KspendError):
    """A transaction input reference does not resolve in the given history."""


class InvalidTransaction(KspendError):
    """A transfer request violates the issuing rules."""


class MalformedHistory(KspendError):
    """An operation requiring well-formed histories was handed a broken one."""


class NotVulnerable(KspendError):
    """No multi-spending attack exists for this trust model."""


class SchemaError(KspendError):
    """A model, scenario, or report file does not match its schema."""
