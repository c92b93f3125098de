"""Exception hierarchy shared across the toolkit.

Every error raised by library code derives from :class:`BBAuthError` so
callers (and the CLI) can catch toolkit failures without swallowing
programming errors.
"""

from __future__ import annotations


class BBAuthError(Exception):
    """Base class for all toolkit errors."""


# --- dataset parsing / validation ---

class MalformedDocument(BBAuthError):
    """The document is not syntactically valid JSON."""


class SchemaViolation(BBAuthError):
    """A required field is missing or has the wrong type."""


class InvariantViolation(BBAuthError):
    """A field parsed fine but violates a documented data invariant."""


# --- signal conditioning ---

class EmptySeries(BBAuthError):
    """An operation that needs at least one sample got none."""


class MissingModality(BBAuthError):
    """A required sensor stream is absent from the session."""


# --- keystroke matcher ---

class EmptyIntersection(BBAuthError):
    """Two n-gram orderings share no n-grams."""


class BothEmpty(BBAuthError):
    """Both n-gram tables are empty; no availability is defined."""


class NoKeystrokeData(BBAuthError):
    """No usable keystroke events were found in the given sessions."""


# --- touch matcher ---

class DegenerateStroke(BBAuthError):
    """A stroke spans fewer than two distinct timestamps."""


class NoStrokes(BBAuthError):
    """A template or score was requested over an empty stroke set."""


class InsufficientEvents(BBAuthError):
    """Too few events to compute the requested difference order."""


# --- wavelet transform ---

class SignalTooShort(BBAuthError):
    """The signal is shorter than the transform requires."""


class TooFewColumns(BBAuthError):
    """Column reduction needs at least three columns."""


class ShapeMismatch(BBAuthError):
    """Two arrays that must share a shape do not."""


# --- alignment distances ---

class EmptySequence(BBAuthError):
    """An alignment was requested over an empty sequence."""


class DimensionMismatch(BBAuthError):
    """Sequences carry feature vectors of different dimension."""


# --- siamese training ---

class DegeneratePairs(BBAuthError):
    """A pair set contains only one label class."""


# --- evaluation protocol ---

class IncompleteDevice(BBAuthError):
    """A device does not have the session counts the protocol requires."""


class EmptyDistribution(BBAuthError):
    """AUC needs at least one genuine and one impostor score."""


class MissingScore(BBAuthError):
    """A score file lacks entries for known comparison ids."""


class NonFiniteScore(BBAuthError):
    """A score file contains NaN or infinite values."""


# --- synthetic generator ---

class ConfigInvalid(BBAuthError):
    """A generator configuration violates its invariants."""
