"""Classify records by the database membership of the papers citing them.

A record cited mostly from within one database is taken to belong to that
database.  The classifier needs enough citations to be meaningful
(``min_citations``) and a high enough fraction of them from the database
in question (``ratio_threshold``).
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class CitationGraph:
    """Cited-id -> citing-ids mapping plus the citers' database memberships.

    Every citing id gets a membership entry (possibly empty: papers that
    cite corpus records without belonging to any database still count
    toward citation totals).  Instances are immutable after construction.
    """

    citers: dict[str, frozenset[str]]
    memberships: dict[str, frozenset[str]] = field(default_factory=dict)
    databases: tuple[str, ...] = ()

    def __post_init__(self):
        self.databases = tuple(self.databases)
        for cited, citing in self.citers.items():
            if cited in citing:
                raise ValueError(f"self-citation in graph: '{cited}'")
            for c in citing:
                self.memberships.setdefault(c, frozenset())


@dataclass(frozen=True)
class CitationClassifierConfig:
    """Decision parameters for the citation classifier."""

    min_citations: int = 4
    ratio_threshold: float = 0.5

    def __post_init__(self):
        if self.min_citations < 1:
            raise ValueError("min_citations must be >= 1")
        if not 0.0 < self.ratio_threshold <= 1.0:
            raise ValueError("ratio_threshold must be in (0, 1]")


def citation_ratio(graph: CitationGraph, record_id: str, db: str) -> tuple[int, float]:
    """Total citation count and the fraction of citers belonging to ``db``.

    Unknown or uncited records report (0, 0.0).  Citers with no database
    membership count in the total but never in the numerator.
    """
    citing = graph.citers.get(record_id, frozenset())
    total = len(citing)
    if total == 0:
        return 0, 0.0
    hits = sum(1 for c in citing if db in graph.memberships.get(c, frozenset()))
    return total, hits / total


def classify_citations(
    graph: CitationGraph, config: CitationClassifierConfig, record_id: str
) -> set[str]:
    """Databases whose citation ratio reaches the threshold, or the empty set.

    Records with fewer than ``min_citations`` citers are unclassifiable.
    A citer belonging to several databases counts toward each of them, so
    more than one database can clear the threshold.
    """
    total = len(graph.citers.get(record_id, frozenset()))
    if total < config.min_citations:
        return set()
    assigned = set()
    for db in graph.databases:
        _, ratio = citation_ratio(graph, record_id, db)
        if ratio >= config.ratio_threshold:
            assigned.add(db)
    return assigned
