"""Ingest bibliographic records, citation edges and memberships; persist models.

File formats:

* records: one JSON object per line with keys ``id``, ``title``, ``year``
  and optional ``abstract``, ``journal``, ``labels``.
* citations: ``citing_id<TAB>cited_id`` edge list; ``#`` comments allowed.
* memberships: ``record_id<TAB>db1,db2,...`` naming the databases a citing
  paper already belongs to; ``#`` comments allowed.
* model: versioned text format, header line ``bibclass-model v1``.

Loaded corpora, graphs and models are immutable afterwards and safe to
read from any number of concurrent workers.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Mapping

from bibclass.bayes import CategoryModel
from bibclass.citegraph import CitationGraph
from bibclass.errors import DataError

log = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = "v1"
_MODEL_HEADER_PREFIX = "bibclass-model "


@dataclass(frozen=True)
class BibRecord:
    """One bibliographic item with its human-assigned database labels."""

    id: str
    title: str
    year: int
    abstract: str | None = None
    journal: str | None = None
    gold_labels: frozenset[str] = frozenset()


@dataclass
class Corpus:
    """Validated records in input order plus ingest bookkeeping."""

    records: list[BibRecord]
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[BibRecord]:
        return iter(self.records)

    def ids(self) -> set[str]:
        return {r.id for r in self.records}

    def gold(self) -> dict[str, set[str]]:
        """Gold label map for evaluation: record id -> set of databases."""
        return {r.id: set(r.gold_labels) for r in self.records}


@dataclass(frozen=True)
class CitationLoadStats:
    """What the citation loader kept and why it dropped the rest."""

    edges_kept: int = 0
    duplicates: int = 0
    self_citations: int = 0
    unknown_citers: int = 0


def load_records(path: str | Path) -> Corpus:
    """Read a line-delimited records file.

    Malformed lines are skipped with a warning and counted on the returned
    corpus, so len(corpus) + corpus.skipped equals the number of input
    lines.  A duplicate record id aborts the load.
    """
    records: list[BibRecord] = []
    seen: set[str] = set()
    skipped = 0
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read records file {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            record = _parse_record_line(line)
            if record is None:
                skipped += 1
                log.warning("%s:%d: skipping malformed record line", path, lineno)
                continue
            if record.id in seen:
                raise DataError(f"duplicate record id '{record.id}' at {path}:{lineno}")
            seen.add(record.id)
            records.append(record)
    if skipped:
        log.warning("%s: skipped %d malformed line(s)", path, skipped)
    return Corpus(records=records, skipped=skipped)


def _parse_record_line(line: str) -> BibRecord | None:
    line = line.strip()
    if not line:
        return None
    try:
        obj = json.loads(line)
    except json.JSONDecodeError:
        return None
    if not isinstance(obj, dict):
        return None
    rid = obj.get("id")
    title = obj.get("title")
    year = obj.get("year")
    if not isinstance(rid, str) or not rid:
        return None
    if not isinstance(title, str) or not title.strip():
        return None
    if not isinstance(year, int) or isinstance(year, bool):
        return None
    abstract = obj.get("abstract")
    journal = obj.get("journal")
    labels = obj.get("labels")
    if abstract is not None and not isinstance(abstract, str):
        return None
    if journal is not None and not isinstance(journal, str):
        return None
    if not isinstance(labels, list) or any(not isinstance(x, str) or not x for x in labels):
        return None
    return BibRecord(
        id=rid,
        title=title,
        year=year,
        abstract=abstract,
        journal=journal,
        gold_labels=frozenset(labels),
    )


def load_memberships(path: str | Path) -> dict[str, frozenset[str]]:
    """Read the ``record_id<TAB>db1,db2,...`` membership file.

    An id listed on several lines gets the union of its memberships; an
    empty database column is allowed and records an empty membership.
    """
    memberships: dict[str, set[str]] = {}
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read membership file {path}: {exc}") from exc
    for lineno, line in enumerate(raw.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 2 or not parts[0].strip():
            raise DataError(f"malformed membership line at {path}:{lineno}")
        rid = parts[0].strip()
        dbs = {d.strip() for d in parts[1].split(",") if d.strip()}
        memberships.setdefault(rid, set()).update(dbs)
    return {rid: frozenset(dbs) for rid, dbs in memberships.items()}


def load_citations(
    path: str | Path,
    known_ids: set[str],
    memberships: Mapping[str, frozenset[str]] | None = None,
    databases: tuple[str, ...] = (),
) -> tuple[CitationGraph, CitationLoadStats]:
    """Read the citation edge list into a graph keyed by cited id.

    Each citing paper counts once per cited record: duplicate edges are
    dropped, as are self-citations and edges whose citing id is neither a
    corpus record nor a membership-file entry.  Drop counts are returned
    alongside the graph.
    """
    memberships = memberships or {}
    citers: dict[str, set[str]] = {}
    seen_edges: set[tuple[str, str]] = set()
    kept = duplicates = self_citations = unknown = 0
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read citations file {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise DataError(f"malformed citation edge at {path}:{lineno}")
            citing, cited = parts
            if citing == cited:
                self_citations += 1
                log.warning("%s:%d: dropping self-citation '%s'", path, lineno, citing)
                continue
            if citing not in known_ids:
                unknown += 1
                continue
            if (citing, cited) in seen_edges:
                duplicates += 1
                continue
            seen_edges.add((citing, cited))
            citers.setdefault(cited, set()).add(citing)
            kept += 1
    graph_memberships = {}
    for citing_set in citers.values():
        for c in citing_set:
            graph_memberships[c] = memberships.get(c, frozenset())
    graph = CitationGraph(
        citers={cited: frozenset(s) for cited, s in citers.items()},
        memberships=graph_memberships,
        databases=databases,
    )
    stats = CitationLoadStats(
        edges_kept=kept,
        duplicates=duplicates,
        self_citations=self_citations,
        unknown_citers=unknown,
    )
    return graph, stats


def save_model(model: CategoryModel, path: str | Path) -> None:
    """Write a model in the versioned text format.

    Terms are sorted within each database block so identical models always
    produce identical bytes.
    """
    lines = [_MODEL_HEADER_PREFIX + MODEL_FORMAT_VERSION]
    lines.append(f"alpha\t{model.smoothing_alpha!r}")
    for db in model.databases:
        lines.append(f"db\t{db}\t{model.doc_counts[db]}\t{model.total_tokens[db]}")
        for term in sorted(model.term_counts[db]):
            lines.append(f"t\t{term}\t{model.term_counts[db][term]}")
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise DataError(f"cannot write model file {path}: {exc}") from exc


def load_model(path: str | Path) -> CategoryModel:
    """Read a model written by :func:`save_model`; round-trips are exact."""
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read model file {path}: {exc}") from exc
    lines = raw.splitlines()
    if not lines or not lines[0].startswith(_MODEL_HEADER_PREFIX):
        raise DataError(f"corrupt model file at {path}:1: missing header")
    version = lines[0][len(_MODEL_HEADER_PREFIX) :].strip()
    if version != MODEL_FORMAT_VERSION:
        raise DataError(
            f"model format version mismatch in {path}: "
            f"file has '{version}', this build reads '{MODEL_FORMAT_VERSION}'"
        )
    alpha: float | None = None
    databases: list[str] = []
    term_counts: dict[str, dict[str, int]] = {}
    total_tokens: dict[str, int] = {}
    doc_counts: dict[str, int] = {}
    current: str | None = None
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split("\t")
        tag = parts[0]
        try:
            if tag == "alpha" and len(parts) == 2:
                alpha = float(parts[1])
            elif tag == "db" and len(parts) == 4:
                current = parts[1]
                if current in term_counts:
                    raise ValueError("duplicate database block")
                databases.append(current)
                term_counts[current] = {}
                doc_counts[current] = int(parts[2])
                total_tokens[current] = int(parts[3])
            elif tag == "t" and len(parts) == 3:
                if current is None:
                    raise ValueError("term line before any database block")
                term_counts[current][parts[1]] = int(parts[2])
            else:
                raise ValueError(f"unrecognized line tag '{tag}'")
        except ValueError as exc:
            raise DataError(f"corrupt model file at {path}:{lineno}: {exc}") from exc
    if alpha is None:
        raise DataError(f"corrupt model file at {path}: missing alpha line")
    try:
        return CategoryModel(
            databases=tuple(databases),
            term_counts=term_counts,
            total_tokens=total_tokens,
            doc_counts=doc_counts,
            smoothing_alpha=alpha,
        )
    except ValueError as exc:
        raise DataError(f"corrupt model file {path}: {exc}") from exc
