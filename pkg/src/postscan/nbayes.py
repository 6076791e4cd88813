"""Multinomial, Complement, and Bernoulli Naive Bayes from scratch.

All three variants share one model container: a 2 x |V| count table
(token counts for the multinomial variants, document-occurrence counts
for Bernoulli), per-class document counts for the priors, and the
smoothing constant. Smoothed log tables are precomputed at construction
so prediction is a couple of dot products.

Scores are oriented so 1.0 means most confidently concerning. The label
is Concerning only when the score strictly exceeds the threshold, so an
exact tie (for example an empty document under equal priors) stays
Benign.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import BENIGN, CONCERNING
from .errors import DataError
from .textprep import Vocabulary, build_vocab

MULTINOMIAL = "multinomial"
COMPLEMENT = "complement"
BERNOULLI = "bernoulli"
VARIANTS = (MULTINOMIAL, COMPLEMENT, BERNOULLI)

_VARIANT_ALIASES = {
    "mnb": MULTINOMIAL,
    "cnb": COMPLEMENT,
    "bnb": BERNOULLI,
    **{v: v for v in VARIANTS},
}


def canonical_variant(name: str) -> str:
    """Resolve mnb/cnb/bnb shorthands to the full variant names."""
    try:
        return _VARIANT_ALIASES[name.lower()]
    except (KeyError, AttributeError):
        raise DataError(f"unknown variant {name!r} (use mnb, cnb, or bnb)")

MODEL_FORMAT = "postscan-nb-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class Prediction:
    label: int
    score: float
    log_scores: tuple[float, float]  # (benign, concerning)


@dataclass(eq=False)
class NbModel:
    """A trained classifier. Treat as immutable once constructed."""

    variant: str
    alpha: float
    vocab: Vocabulary
    counts: np.ndarray  # (2, |V|) int64, row index == class label
    doc_counts: tuple[int, int]
    weight_normalize: bool = False

    # derived log tables, filled in __post_init__
    log_priors: np.ndarray = field(init=False, repr=False)
    _log_like: np.ndarray = field(init=False, repr=False)
    _absent_base: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise DataError(f"unknown variant {self.variant!r} (use one of {VARIANTS})")
        if not self.alpha > 0:
            raise DataError(f"alpha must be positive, got {self.alpha}")
        if self.weight_normalize and self.variant != COMPLEMENT:
            raise DataError("weight_normalize applies to the complement variant only")
        if min(self.doc_counts) < 1:
            raise DataError("both classes must be present in the training corpus")
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (2, len(self.vocab)):
            raise DataError(
                f"count table shape {counts.shape} does not match "
                f"2 x vocabulary size {len(self.vocab)}"
            )
        if counts.min() < 0:
            raise DataError("counts must be non-negative")
        self.counts = counts
        n_docs = self.doc_counts[0] + self.doc_counts[1]
        self.log_priors = np.log(np.asarray(self.doc_counts, dtype=np.float64) / n_docs)

        a, v = self.alpha, len(self.vocab)
        if self.variant == MULTINOMIAL:
            totals = counts.sum(axis=1, keepdims=True)
            self._log_like = np.log((counts + a) / (totals + a * v))
            self._absent_base = np.zeros(2)
        elif self.variant == COMPLEMENT:
            comp = counts[::-1]  # two classes: complement of c is the other row
            totals = comp.sum(axis=1, keepdims=True)
            weights = np.log((comp + a) / (totals + a * v))
            if self.weight_normalize:
                weights = weights / np.abs(weights).sum(axis=1, keepdims=True)
            self._log_like = weights
            self._absent_base = np.zeros(2)
        else:
            docs = np.asarray(self.doc_counts, dtype=np.float64).reshape(2, 1)
            theta = (counts + a) / (docs + 2 * a)
            log_absent = np.log1p(-theta)
            # presence factor relative to the all-absent baseline
            self._log_like = np.log(theta) - log_absent
            self._absent_base = log_absent.sum(axis=1)

    def feature_vector(self, doc: Sequence[str]) -> np.ndarray:
        """Token frequencies (or presence for Bernoulli) over the vocabulary."""
        vec = np.zeros(len(self.vocab), dtype=np.float64)
        index = self.vocab.index
        for tok in doc:
            i = index.get(tok)
            if i is not None:
                vec[i] += 1.0
        if self.variant == BERNOULLI:
            vec = np.minimum(vec, 1.0)
        return vec

    def class_log_scores(self, doc: Sequence[str]) -> tuple[float, float]:
        vec = self.feature_vector(doc)
        contrib = self._log_like @ vec
        if self.variant == COMPLEMENT:
            scores = self.log_priors - contrib
        else:
            scores = self.log_priors + self._absent_base + contrib
        return float(scores[0]), float(scores[1])


def train(
    docs: Sequence[tuple[Sequence[str], int]],
    variant: str = COMPLEMENT,
    alpha: float = 1.0,
    weight_normalize: bool = False,
    vocab: Vocabulary | None = None,
) -> NbModel:
    """Fit a model on (token list, label) pairs.

    Both classes must appear. The vocabulary is built from the training
    tokens unless one is supplied.
    """
    variant = canonical_variant(variant)
    if not docs:
        raise DataError("training corpus is empty")
    labels = [label for _, label in docs]
    for label in labels:
        if label not in (BENIGN, CONCERNING):
            raise DataError(f"label must be 0 or 1, got {label!r}")
    doc_counts = (labels.count(BENIGN), labels.count(CONCERNING))
    if min(doc_counts) == 0:
        raise DataError("both classes must be present in the training corpus")
    if vocab is None:
        vocab = build_vocab([tokens for tokens, _ in docs])
    counts = np.zeros((2, len(vocab)), dtype=np.int64)
    index = vocab.index
    for tokens, label in docs:
        if variant == BERNOULLI:
            seen = {index[t] for t in tokens if t in index}
            for i in seen:
                counts[label, i] += 1
        else:
            for t in tokens:
                i = index.get(t)
                if i is not None:
                    counts[label, i] += 1
    return NbModel(
        variant=variant,
        alpha=float(alpha),
        vocab=vocab,
        counts=counts,
        doc_counts=doc_counts,
        weight_normalize=weight_normalize,
    )


def predict(model: NbModel, doc: Sequence[str], threshold: float = 0.5) -> Prediction:
    """Classify one tokenized document.

    Out-of-vocabulary tokens are ignored; an empty or all-OOV document
    falls back to the priors.
    """
    if not 0.0 <= threshold <= 1.0:
        raise DataError(f"threshold must be in [0, 1], got {threshold}")
    s0, s1 = model.class_log_scores(doc)
    m = max(s0, s1)
    e0, e1 = math.exp(s0 - m), math.exp(s1 - m)
    score = e1 / (e0 + e1)
    label = CONCERNING if score > threshold else BENIGN
    return Prediction(label=label, score=score, log_scores=(s0, s1))


def predict_batch(
    model: NbModel, docs: Iterable[Sequence[str]], threshold: float = 0.5
) -> list[Prediction]:
    return [predict(model, doc, threshold) for doc in docs]


def model_to_dict(model: NbModel) -> dict:
    tokens = model.vocab.tokens
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "variant": model.variant,
        "alpha": model.alpha,
        "weight_normalize": model.weight_normalize,
        "doc_counts": list(model.doc_counts),
        "vocab": list(tokens),
        "doc_freq": [model.vocab.doc_freq[t] for t in tokens],
        "total_tokens": model.vocab.total_tokens,
        "counts": [model.counts[0].tolist(), model.counts[1].tolist()],
    }


def model_from_dict(data: dict) -> NbModel:
    if not isinstance(data, dict) or data.get("format") != MODEL_FORMAT:
        raise DataError("not a model document (missing format tag)")
    if data.get("version") != MODEL_VERSION:
        raise DataError(f"unsupported model version {data.get('version')!r}")
    try:
        tokens = list(data["vocab"])
        doc_freq = list(data["doc_freq"])
        vocab = Vocabulary(
            index={t: i for i, t in enumerate(tokens)},
            doc_freq=dict(zip(tokens, doc_freq)),
            total_tokens=int(data["total_tokens"]),
        )
        return NbModel(
            variant=data["variant"],
            alpha=float(data["alpha"]),
            vocab=vocab,
            counts=np.asarray(data["counts"], dtype=np.int64),
            doc_counts=(int(data["doc_counts"][0]), int(data["doc_counts"][1])),
            weight_normalize=bool(data.get("weight_normalize", False)),
        )
    except (KeyError, IndexError, TypeError, ValueError) as e:
        raise DataError(f"malformed model document: {e}") from e


def save_model(model: NbModel, path: str | Path) -> None:
    text = json.dumps(model_to_dict(model), sort_keys=True, ensure_ascii=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_model(path: str | Path) -> NbModel:
    path = Path(path)
    if not path.exists():
        raise DataError(f"model file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: malformed JSON: {e}") from e
    return model_from_dict(data)
