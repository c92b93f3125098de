"""Keystroke matcher built on digram/trigram timing tables.

Typing patterns are captured as n-gram tables (n = 2, 3) holding how
often each n-gram occurs and its mean typing duration. Two sessions are
compared by (a) the degree of disorder between their duration-ordered
n-gram lists and (b) the fraction of sufficiently frequent shared
n-grams, averaged into one similarity score.
"""

from __future__ import annotations

from dataclasses import dataclass

from .data import KeystrokeEvent, ModalityKind, Session
from .errors import BothEmpty, EmptyIntersection, NoKeystrokeData

Ngram = tuple[int, ...]


@dataclass(frozen=True)
class NgramStats:
    occurrences: int
    mean_duration: float


@dataclass(frozen=True)
class NgramTable:
    n: int
    entries: dict[Ngram, NgramStats]


def extract_ngrams(events, n: int) -> NgramTable:
    """Aggregate every window of `n` consecutive keystrokes.

    Duration of a window is last timestamp minus first. A sequence
    shorter than `n` yields an empty table.
    """
    if n not in (2, 3):
        raise ValueError("n must be 2 or 3")
    sums: dict[Ngram, list] = {}
    events = list(events)
    for i in range(len(events) - n + 1):
        window = events[i : i + n]
        gram = tuple(e.ascii_code for e in window)
        duration = window[-1].timestamp - window[0].timestamp
        acc = sums.setdefault(gram, [0, 0.0])
        acc[0] += 1
        acc[1] += duration
    return NgramTable(
        n, {g: NgramStats(c, total / c) for g, (c, total) in sums.items()}
    )


def merge_tables(tables: list[NgramTable]) -> NgramTable:
    """Pool several tables: occurrences add, durations combine by weighted mean.

    Used to pool enrollment sessions; merging never forms n-grams that
    span session boundaries.
    """
    if not tables:
        raise ValueError("need at least one table")
    n = tables[0].n
    if any(t.n != n for t in tables):
        raise ValueError("tables must share n")
    sums: dict[Ngram, list] = {}
    for table in tables:
        for gram, stats in table.entries.items():
            acc = sums.setdefault(gram, [0, 0.0])
            acc[0] += stats.occurrences
            acc[1] += stats.mean_duration * stats.occurrences
    return NgramTable(n, {g: NgramStats(c, total / c) for g, (c, total) in sums.items()})


def order_ngrams(table: NgramTable) -> list[Ngram]:
    """Total ordering: ascending mean duration, then descending
    occurrences, then lexicographic n-gram codes."""
    return sorted(
        table.entries,
        key=lambda g: (table.entries[g].mean_duration, -table.entries[g].occurrences, g),
    )


def degree_of_disorder(list_a: list[Ngram], list_b: list[Ngram]) -> float:
    """Normalized total rank displacement between two orderings.

    Both lists must hold the same n-gram set (callers intersect first).
    The displacement sum is normalized by its maximum, V^2/2 for even V
    and (V^2 - 1)/2 for odd V; a single shared n-gram gives 0.
    """
    if len(list_a) != len(list_b) or set(list_a) != set(list_b):
        raise ValueError("lists must contain the same n-gram set")
    v = len(list_a)
    if v == 0:
        raise EmptyIntersection("no shared n-grams")
    if v == 1:
        return 0.0
    rank_b = {gram: i for i, gram in enumerate(list_b)}
    disorder = sum(abs(i - rank_b[gram]) for i, gram in enumerate(list_a))
    max_disorder = v * v / 2 if v % 2 == 0 else (v * v - 1) / 2
    return disorder / max_disorder


def availability(enroll: NgramTable, verify: NgramTable, min_occurrences: int = 3) -> float:
    """Fraction of shared, sufficiently frequent n-grams over all observed.

    An n-gram counts as available when it appears in both tables with a
    combined (enroll + verify) occurrence count of at least
    `min_occurrences`.
    """
    union = set(enroll.entries) | set(verify.entries)
    if not union:
        raise BothEmpty("both n-gram tables are empty")
    common = [
        g
        for g in enroll.entries
        if g in verify.entries
        and enroll.entries[g].occurrences + verify.entries[g].occurrences >= min_occurrences
    ]
    return len(common) / len(union)


def _restrict(table: NgramTable, grams: set[Ngram]) -> NgramTable:
    return NgramTable(table.n, {g: s for g, s in table.entries.items() if g in grams})


def _session_events(session: Session) -> tuple[KeystrokeEvent, ...]:
    return session.stream(ModalityKind.Keystroke)


def keystroke_score(
    enroll_sessions: list[Session],
    verify_session: Session,
    top_k: int | None = None,
) -> float:
    """Similarity in [0,1] between pooled enrollment typing and one verify session.

    For each n in {2, 3}: similarity = 1 - degree_of_disorder over the
    shared n-grams (0 when nothing is shared) and availability over all
    observed n-grams; the per-n score is their mean, and the final score
    the mean over n. `top_k` optionally restricts the disorder
    computation to the k most frequent shared n-grams (by combined
    occurrence count); the default uses all shared n-grams.
    """
    if not enroll_sessions:
        raise ValueError("need at least one enrollment session")
    enroll_events = [_session_events(s) for s in enroll_sessions]
    verify_events = _session_events(verify_session)
    if all(len(ev) < 2 for ev in enroll_events) or len(verify_events) < 2:
        raise NoKeystrokeData("sessions carry no usable keystroke events")

    per_n: list[float] = []
    for n in (2, 3):
        enroll_table = merge_tables([extract_ngrams(ev, n) for ev in enroll_events])
        verify_table = extract_ngrams(verify_events, n)
        if not enroll_table.entries and not verify_table.entries:
            per_n.append(0.0)
            continue
        avail = availability(enroll_table, verify_table)
        shared = set(enroll_table.entries) & set(verify_table.entries)
        if top_k is not None and len(shared) > top_k:
            shared = set(
                sorted(
                    shared,
                    key=lambda g: (
                        -(enroll_table.entries[g].occurrences + verify_table.entries[g].occurrences),
                        g,
                    ),
                )[:top_k]
            )
        if shared:
            sim = 1.0 - degree_of_disorder(
                order_ngrams(_restrict(enroll_table, shared)),
                order_ngrams(_restrict(verify_table, shared)),
            )
        else:
            sim = 0.0
        per_n.append((sim + avail) / 2)
    return sum(per_n) / len(per_n)
