"""Text cleaning, tokenization, and vocabulary construction.

Cleaning applies an ordered sequence of rules, each gated by a config flag:
link removal, @mention removal, '#' stripping, lowercasing, digit removal,
special-character removal, stopword removal, whitespace collapse. The order
is fixed because it changes results (e.g. lowercasing must precede stopword
matching for the shipped lowercase stopword list to apply).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import DataError

# Whole tokens starting with a link scheme or www. are dropped.
_LINK_RE = re.compile(r"(?<!\S)(?:https?://|www\.)\S*", re.IGNORECASE)
# Whole tokens starting with '@' are dropped.
_MENTION_RE = re.compile(r"(?<!\S)@\S*")
# Anything outside letters, digits, and whitespace counts as special.
_SPECIAL_RE = re.compile(r"[^a-zA-Z0-9\s]")
_DIGIT_RE = re.compile(r"[0-9]")
_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class CleanConfig:
    lowercase: bool = False
    strip_digits: bool = False
    strip_special: bool = False
    collapse_spaces: bool = False
    strip_mentions: bool = False
    strip_hashmarks: bool = False
    strip_links: bool = False
    strip_stopwords: bool = False


# Captions: normalize case/digits/specials/spacing only.
CAPTION_PRESET = CleanConfig(
    lowercase=True, strip_digits=True, strip_special=True, collapse_spaces=True
)
# Posts: everything on, including social-media noise and stopwords.
POST_PRESET = CleanConfig(
    lowercase=True,
    strip_digits=True,
    strip_special=True,
    collapse_spaces=True,
    strip_mentions=True,
    strip_hashmarks=True,
    strip_links=True,
    strip_stopwords=True,
)

_PRESETS = {"caption": CAPTION_PRESET, "post": POST_PRESET}

_default_stopwords: frozenset[str] | None = None


def preset(name: str) -> CleanConfig:
    try:
        return _PRESETS[name]
    except KeyError:
        raise DataError(f"unknown clean preset {name!r} (use 'caption' or 'post')")


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Read a stopword file: UTF-8, one lowercase token per line."""
    words = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        word = line.strip()
        if word:
            words.append(word)
    return frozenset(words)


def default_stopwords() -> frozenset[str]:
    """The English stopword list shipped with the package."""
    global _default_stopwords
    if _default_stopwords is None:
        text = (
            resources.files("postscan").joinpath("data/stopwords_en.txt").read_text("utf-8")
        )
        _default_stopwords = frozenset(w for w in (l.strip() for l in text.splitlines()) if w)
    return _default_stopwords


def clean(text: str, config: CleanConfig, stopwords=None) -> str:
    """Apply the configured cleaning rules, in fixed order.

    `stopwords` defaults to the shipped English list when stopword removal
    is enabled; matching is exact against tokens at that stage.
    """
    if config.strip_links:
        text = _LINK_RE.sub("", text)
    if config.strip_mentions:
        text = _MENTION_RE.sub("", text)
    if config.strip_hashmarks:
        text = text.replace("#", "")
    if config.lowercase:
        text = text.lower()
    if config.strip_digits:
        text = _DIGIT_RE.sub("", text)
    if config.strip_special:
        text = _SPECIAL_RE.sub("", text)
    if config.strip_stopwords:
        if stopwords is None:
            stopwords = default_stopwords()
        else:
            stopwords = set(stopwords)
        text = " ".join(t for t in text.split() if t not in stopwords)
    if config.collapse_spaces:
        text = _WS_RE.sub(" ", text).strip()
    return text


def tokenize(cleaned: str) -> list[str]:
    """Split cleaned text on whitespace; never yields empty tokens."""
    return cleaned.split()


@dataclass(frozen=True)
class Vocabulary:
    """Token universe for a classifier: dense lexicographic indices plus
    per-token document frequency and the total training token count."""

    index: dict[str, int]
    doc_freq: dict[str, int]
    total_tokens: int

    def __len__(self) -> int:
        return len(self.index)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    @property
    def tokens(self) -> list[str]:
        # index is dense over [0, |V|), built in lexicographic order
        return sorted(self.index, key=self.index.__getitem__)


def build_vocab(docs: list[list[str]], min_df: int = 1) -> Vocabulary:
    """Collect tokens appearing in at least `min_df` documents.

    Indices are assigned densely in lexicographic token order so vocabulary
    construction is deterministic.
    """
    if not docs:
        raise DataError("cannot build vocabulary from an empty document list")
    doc_freq: dict[str, int] = {}
    total = 0
    for doc in docs:
        total += len(doc)
        for token in set(doc):
            doc_freq[token] = doc_freq.get(token, 0) + 1
    kept = {t: df for t, df in doc_freq.items() if df >= min_df}
    if not kept:
        raise DataError(f"vocabulary is empty after min_df={min_df} filtering")
    index = {t: i for i, t in enumerate(sorted(kept))}
    return Vocabulary(index=index, doc_freq=kept, total_tokens=total)
