"""Multinomial naive Bayes classification over per-database word frequencies.

A trained :class:`CategoryModel` holds, for every database, how often each
term occurred in that database's training records plus a document count
used as the class prior.  Scoring averages per-token log likelihoods so a
document's score does not grow with its length, then maps the result to a
probability distribution over the databases.  Database-specific trigger
keywords can add a post-hoc boost to individual scores.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable

from bibclass.errors import DataError
from bibclass.textpipe import TokenizerConfig, filter_tokens, tokenize

if TYPE_CHECKING:
    from bibclass.corpus import BibRecord

log = logging.getLogger(__name__)


@dataclass
class CategoryModel:
    """Per-database term counts and totals backing the text classifier.

    ``term_counts`` maps database -> term -> occurrence count; only
    positive counts are stored.  ``vocabulary_size`` is derived: the number
    of distinct terms seen in any database.  Instances are treated as
    immutable once built.
    """

    databases: tuple[str, ...]
    term_counts: dict[str, dict[str, int]]
    total_tokens: dict[str, int]
    doc_counts: dict[str, int]
    smoothing_alpha: float = 1.0
    vocabulary_size: int = field(init=False, default=0)

    def __post_init__(self):
        if self.smoothing_alpha <= 0:
            raise ValueError("smoothing_alpha must be positive")
        self.databases = tuple(self.databases)
        if len(set(self.databases)) != len(self.databases):
            raise ValueError("database names must be unique")
        known = set(self.databases)
        for mapping in (self.term_counts, self.total_tokens, self.doc_counts):
            unknown = set(mapping) - known
            if unknown:
                raise ValueError(f"counts reference unknown databases: {sorted(unknown)}")
        for db in self.databases:
            counts = {t: c for t, c in self.term_counts.get(db, {}).items() if c != 0}
            if any(c < 0 for c in counts.values()):
                raise ValueError(f"negative term count in database '{db}'")
            self.term_counts[db] = counts
            self.total_tokens.setdefault(db, 0)
            self.doc_counts.setdefault(db, 0)
            if self.total_tokens[db] < 0 or self.doc_counts[db] < 0:
                raise ValueError(f"negative totals for database '{db}'")
            if sum(counts.values()) != self.total_tokens[db]:
                raise ValueError(f"total_tokens['{db}'] does not match its term counts")
        vocab: set[str] = set()
        for db in self.databases:
            vocab.update(self.term_counts[db])
        self.vocabulary_size = len(vocab)

    @property
    def total_docs(self) -> int:
        return sum(self.doc_counts[db] for db in self.databases)

    def term_count(self, db: str, term: str) -> int:
        return self.term_counts[db].get(term, 0)


@dataclass(frozen=True)
class TextClassifierConfig:
    """Decision parameters for the text classifier.

    ``min_words`` gates how many filtered tokens a record needs before it
    is considered classifiable at all; ``score_threshold`` is the minimum
    (boosted) score for membership in a database.  Trigger terms must be
    lowercase so they can match filtered tokens.
    """

    min_words: int = 5
    score_threshold: float = 0.25
    triggers: dict[str, frozenset[str]] = field(default_factory=dict)
    trigger_boost: float = 0.25

    def __post_init__(self):
        if self.min_words < 0:
            raise ValueError("min_words must be >= 0")
        if not 0.0 <= self.score_threshold <= 1.0:
            raise ValueError("score_threshold must be in [0, 1]")
        if not 0.0 <= self.trigger_boost <= 1.0:
            raise ValueError("trigger_boost must be in [0, 1]")
        for db, terms in self.triggers.items():
            for term in terms:
                if term != term.lower():
                    raise ValueError(f"trigger term '{term}' for '{db}' is not lowercase")


@dataclass(frozen=True)
class TextScore:
    """Per-database scores for one document.

    Before boosting the scores form a probability distribution over the
    model's databases; boosting may push individual scores up to 1.
    """

    per_db_score: dict[str, float]
    token_count: int
    classifiable: bool
    triggered: dict[str, bool]


def record_text(record: BibRecord) -> str:
    return record.title + " " + (record.abstract or "")


def build_model(
    records: Iterable[BibRecord],
    databases: Iterable[str],
    tokenizer_config: TokenizerConfig,
    alpha: float = 1.0,
) -> CategoryModel:
    """Count title+abstract tokens of labeled records into each labeled database.

    Records without gold labels are ignored.  A record labeled with several
    databases contributes its full token counts to each of them.  A label
    outside the configured database set aborts the build, as does a corpus
    that yields no vocabulary at all.
    """
    databases = tuple(databases)
    term_counts: dict[str, Counter[str]] = {db: Counter() for db in databases}
    total_tokens = {db: 0 for db in databases}
    doc_counts = {db: 0 for db in databases}
    known = set(databases)
    used = 0
    for record in records:
        if not record.gold_labels:
            continue
        bad = set(record.gold_labels) - known
        if bad:
            raise DataError(
                f"record '{record.id}' is labeled with unknown database(s) {sorted(bad)}"
            )
        tokens = filter_tokens(tokenize(record_text(record)), tokenizer_config)
        counts = Counter(tokens)
        used += 1
        for db in databases:
            if db in record.gold_labels:
                term_counts[db].update(counts)
                total_tokens[db] += len(tokens)
                doc_counts[db] += 1
    for db in databases:
        if doc_counts[db] == 0:
            log.warning("no training records labeled '%s'; it keeps only smoothed mass", db)
    model = CategoryModel(
        databases=databases,
        term_counts={db: dict(term_counts[db]) for db in databases},
        total_tokens=total_tokens,
        doc_counts=doc_counts,
        smoothing_alpha=alpha,
    )
    if model.vocabulary_size == 0:
        raise DataError(f"training produced an empty vocabulary ({used} labeled records)")
    return model


def term_probability(model: CategoryModel, term: str, db: str) -> float:
    """Additively smoothed relative frequency of ``term`` in ``db``."""
    if db not in model.doc_counts:
        raise ValueError(f"unknown database '{db}'")
    if model.vocabulary_size == 0:
        raise ValueError("model has an empty vocabulary")
    alpha = model.smoothing_alpha
    return (model.term_count(db, term) + alpha) / (
        model.total_tokens[db] + alpha * model.vocabulary_size
    )


def score_text(model: CategoryModel, config: TextClassifierConfig, tokens: list[str]) -> TextScore:
    """Score a filtered token stream against every database.

    Each database gets log(prior) plus the mean per-token log likelihood;
    the averaged values are mapped through a softmax so scores sum to 1 and
    do not depend on document length.  With no tokens the scores reduce to
    the prior distribution.
    """
    total_docs = model.total_docs
    if total_docs == 0:
        raise ValueError("model has no training documents")
    n = len(tokens)
    log_likes = []
    for db in model.databases:
        prior = model.doc_counts[db] / total_docs
        if prior == 0.0:
            log_likes.append(float("-inf"))
            continue
        ll = math.log(prior)
        if n:
            ll += sum(math.log(term_probability(model, t, db)) for t in tokens) / n
        log_likes.append(ll)
    scores = _softmax(log_likes)
    return TextScore(
        per_db_score=dict(zip(model.databases, scores)),
        token_count=n,
        classifiable=n >= config.min_words,
        triggered={db: False for db in model.databases},
    )


def _softmax(values: list[float]) -> list[float]:
    top = max(values)
    if top == float("-inf"):
        raise ValueError("all scores are -inf; no database has a nonzero prior")
    exps = [math.exp(v - top) for v in values]
    total = sum(exps)
    return [e / total for e in exps]


def apply_triggers(
    score: TextScore, tokens: list[str], config: TextClassifierConfig
) -> TextScore:
    """Boost the score of any database whose trigger terms appear in ``tokens``."""
    present = set(tokens)
    per_db = dict(score.per_db_score)
    triggered = dict(score.triggered)
    for db, terms in config.triggers.items():
        if db in per_db and terms & present:
            per_db[db] = min(1.0, per_db[db] + config.trigger_boost)
            triggered[db] = True
    return TextScore(
        per_db_score=per_db,
        token_count=score.token_count,
        classifiable=score.classifiable,
        triggered=triggered,
    )


def classify_text(
    model: CategoryModel,
    config: TextClassifierConfig,
    tokenizer_config: TokenizerConfig,
    record: BibRecord,
) -> set[str]:
    """Databases whose boosted score reaches the threshold, or the empty set.

    Records with fewer than ``min_words`` surviving tokens are treated as
    unclassifiable and never assigned anywhere.
    """
    tokens = filter_tokens(tokenize(record_text(record)), tokenizer_config)
    if len(tokens) < config.min_words:
        return set()
    score = apply_triggers(score_text(model, config, tokens), tokens, config)
    return {db for db in model.databases if score.per_db_score[db] >= config.score_threshold}
