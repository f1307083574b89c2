"""Turn raw title/abstract text into the token stream the classifiers consume.

The tokenizer is deliberately simple and deterministic: lowercase, fold
diacritics to ASCII, split on whitespace and punctuation, and expand
hyphenated compounds into the joined form plus their parts.  What matters
for classification is that model building and scoring see the exact same
tokens, so the behaviour is pinned down by the test suite.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from unicodedata import normalize

from bibclass.errors import DataError

# A word is a run of ASCII letters/digits; hyphenated compounds are matched
# as a unit so both the joined form and the parts can be emitted.
_WORD_RE = re.compile(r"[a-z0-9]+(?:-[a-z0-9]+)+|[a-z0-9]+")


@dataclass(frozen=True)
class TokenizerConfig:
    """Filtering rules applied to the raw token stream.

    Stop words and phrases are normalized to lowercase on construction;
    phrases may be single words or space-separated sequences.
    """

    stop_words: frozenset[str] = frozenset()
    stop_phrases: frozenset[str] = frozenset()
    min_token_length: int = 1

    def __post_init__(self):
        if self.min_token_length < 1:
            raise ValueError("min_token_length must be >= 1")
        object.__setattr__(self, "stop_words", frozenset(w.lower() for w in self.stop_words))
        object.__setattr__(self, "stop_phrases", frozenset(p.lower() for p in self.stop_phrases))


def tokenize(text: str) -> list[str]:
    """Split text into lowercase ASCII tokens, preserving order.

    Hyphenated compounds contribute the joined form followed by the parts,
    so "X-ray" yields ["xray", "x", "ray"].
    """
    folded = normalize("NFKD", text).encode("ascii", "ignore").decode("ascii").lower()
    tokens: list[str] = []
    for match in _WORD_RE.finditer(folded):
        word = match.group()
        if "-" in word:
            tokens.append(word.replace("-", ""))
            tokens.extend(word.split("-"))
        else:
            tokens.append(word)
    return tokens


def filter_tokens(tokens: list[str], config: TokenizerConfig) -> list[str]:
    """Drop digit-only tokens, stop words, too-short tokens and stop phrases.

    Phrase removal runs before and after the per-token filters: removing a
    token can make a phrase contiguous, and rescanning keeps the result
    stable under repeated application.
    """
    phrases = _phrase_tuples(config.stop_phrases)
    kept = _drop_phrases(list(tokens), phrases)
    kept = [
        t
        for t in kept
        if not t.isdigit() and t not in config.stop_words and len(t) >= config.min_token_length
    ]
    return _drop_phrases(kept, phrases)


def _phrase_tuples(stop_phrases: frozenset[str]) -> list[tuple[str, ...]]:
    phrases = [tuple(p.split()) for p in stop_phrases]
    # Longest phrases first so overlapping phrases match greedily.
    return sorted((p for p in phrases if p), key=lambda p: (-len(p), p))


def _drop_phrases(tokens: list[str], phrases: list[tuple[str, ...]]) -> list[str]:
    if not phrases:
        return tokens
    changed = True
    while changed:
        changed = False
        out: list[str] = []
        i = 0
        while i < len(tokens):
            for phrase in phrases:
                if tuple(tokens[i : i + len(phrase)]) == phrase:
                    i += len(phrase)
                    changed = True
                    break
            else:
                out.append(tokens[i])
                i += 1
        tokens = out
    return tokens


def load_term_list(path: str | Path) -> list[str]:
    """Read one term (or phrase) per line; blank lines and # comments ignored."""
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read term list {path}: {exc}") from exc
    terms = []
    for line in raw.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            terms.append(line.lower())
    return terms


def _packaged_terms(name: str) -> frozenset[str]:
    text = resources.files("bibclass").joinpath(f"data/{name}").read_text(encoding="utf-8")
    return frozenset(
        line.strip().lower()
        for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    )


def default_tokenizer_config() -> TokenizerConfig:
    """Tokenizer config backed by the packaged stop word and phrase lists."""
    return TokenizerConfig(
        stop_words=_packaged_terms("stopwords.txt"),
        stop_phrases=_packaged_terms("stopphrases.txt"),
    )
