"""Multi-reference BLEU-1/BLEU-2 with modified n-gram precision and the
classical brevity penalty.

Corpus scoring accumulates clipped matches, candidate n-gram totals, and
lengths over all pairs before computing anything; the per-sentence mean
is a different statistic and is exposed separately.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .errors import DataError

SMOOTH_EPS = 1e-9

TokenSeq = Sequence[str]


@dataclass(frozen=True)
class BleuReport:
    bleu1: float
    bleu2: float | None
    precisions: tuple[float, ...]
    matches: tuple[int, ...]
    totals: tuple[int, ...]
    bp: float
    candidate_len: int
    reference_len: int

    def to_dict(self) -> dict:
        return {
            "bleu1": self.bleu1,
            "bleu2": self.bleu2,
            "precisions": list(self.precisions),
            "matches": list(self.matches),
            "totals": list(self.totals),
            "brevity_penalty": self.bp,
            "candidate_length": self.candidate_len,
            "reference_length": self.reference_len,
        }


def _ngrams(tokens: TokenSeq, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _clipped_matches(candidate: TokenSeq, references: Sequence[TokenSeq], n: int):
    """(clipped match count, candidate n-gram total) for one order."""
    cand = _ngrams(candidate, n)
    if not cand:
        return 0, 0
    ceiling: Counter = Counter()
    for ref in references:
        for gram, count in _ngrams(ref, n).items():
            if count > ceiling[gram]:
                ceiling[gram] = count
    matched = sum(min(count, ceiling[gram]) for gram, count in cand.items())
    return matched, sum(cand.values())


def _effective_ref_len(candidate_len: int, references: Sequence[TokenSeq]) -> int:
    # closest reference length; ties go to the shorter reference
    lengths = sorted(len(r) for r in references)
    return min(lengths, key=lambda r: (abs(r - candidate_len), r))


def _check_references(references: Sequence[TokenSeq]) -> None:
    if not references:
        raise DataError("need at least one reference")
    if all(len(r) == 0 for r in references):
        raise DataError("need at least one non-empty reference")


def _compose(matches, totals, cand_len, ref_len, max_order, smooth) -> BleuReport:
    precisions = []
    for m, t in zip(matches, totals):
        if t == 0:
            precisions.append(0.0)
        elif smooth:
            precisions.append((m + SMOOTH_EPS) / t)
        else:
            precisions.append(m / t)
    if cand_len == 0:
        bp = 0.0
    elif cand_len > ref_len:
        bp = 1.0
    else:
        bp = math.exp(1.0 - ref_len / cand_len)

    def geo_mean(ps):
        if any(p == 0.0 for p in ps):
            return 0.0
        return math.exp(sum(math.log(p) for p in ps) / len(ps))

    bleu1 = bp * precisions[0]
    bleu2 = bp * geo_mean(precisions[:2]) if max_order >= 2 else None
    return BleuReport(
        bleu1=bleu1,
        bleu2=bleu2,
        precisions=tuple(precisions),
        matches=tuple(matches),
        totals=tuple(totals),
        bp=bp,
        candidate_len=cand_len,
        reference_len=ref_len,
    )


def sentence_bleu(
    candidate: TokenSeq,
    references: Sequence[TokenSeq],
    max_order: int = 2,
    smooth: bool = False,
) -> BleuReport:
    """Score one candidate against its references.

    An empty candidate scores 0 at every order with brevity penalty 0.
    """
    if max_order not in (1, 2):
        raise DataError(f"max_order must be 1 or 2, got {max_order}")
    _check_references(references)
    matches, totals = [], []
    for n in range(1, max_order + 1):
        m, t = _clipped_matches(candidate, references, n)
        matches.append(m)
        totals.append(t)
    ref_len = _effective_ref_len(len(candidate), references)
    return _compose(matches, totals, len(candidate), ref_len, max_order, smooth)


def corpus_bleu(
    pairs: Sequence[tuple[TokenSeq, Sequence[TokenSeq]]],
    max_order: int = 2,
    smooth: bool = False,
) -> BleuReport:
    """Score a corpus: sum counts and lengths over pairs, then compute."""
    if max_order not in (1, 2):
        raise DataError(f"max_order must be 1 or 2, got {max_order}")
    if not pairs:
        raise DataError("need at least one (candidate, references) pair")
    matches = [0] * max_order
    totals = [0] * max_order
    cand_len = 0
    ref_len = 0
    for candidate, references in pairs:
        _check_references(references)
        for n in range(1, max_order + 1):
            m, t = _clipped_matches(candidate, references, n)
            matches[n - 1] += m
            totals[n - 1] += t
        cand_len += len(candidate)
        ref_len += _effective_ref_len(len(candidate), references)
    return _compose(matches, totals, cand_len, ref_len, max_order, smooth)


def average_sentence_bleu(
    pairs: Sequence[tuple[TokenSeq, Sequence[TokenSeq]]],
    max_order: int = 2,
    smooth: bool = False,
) -> tuple[float, float | None]:
    """Mean of per-sentence scores; a different statistic from corpus_bleu."""
    if not pairs:
        raise DataError("need at least one (candidate, references) pair")
    reports = [sentence_bleu(c, r, max_order, smooth) for c, r in pairs]
    avg1 = sum(r.bleu1 for r in reports) / len(reports)
    if max_order >= 2:
        return avg1, sum(r.bleu2 for r in reports) / len(reports)
    return avg1, None
