"""Captioner contract plus a desk-scale reference implementation.

The reference captioner retrieves the nearest training image by color
histogram distance (k=1) and returns its first caption. It exists to
exercise the caption, fuse, classify path deterministically; a real
neural captioner plugs in behind the same interface, in process or via
the stdio subprocess adapter.
"""

from __future__ import annotations

import json
import subprocess
import tempfile
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import CaptionedImage
from .errors import DataError
from .images import ImageBuffer, write_ppm
from .textprep import CAPTION_PRESET, clean

INDEX_FORMAT = "postscan-caption-index"
INDEX_VERSION = 1

METRICS = ("l2", "chi2")


class Captioner(ABC):
    """Deterministic image-to-sentence interface used by the pipeline."""

    @abstractmethod
    def caption(self, img: ImageBuffer) -> str:
        raise NotImplementedError

    @property
    @abstractmethod
    def identifier(self) -> str:
        """Stable name/version string for provenance in reports."""
        raise NotImplementedError


def featurize(img: ImageBuffer, bins: int = 4) -> np.ndarray:
    """Concatenated per-channel histograms, each L1-normalized.

    `bins` must divide 256 so buckets are equal-width. The result sums
    to 3.0 (one per channel).
    """
    if bins < 1 or 256 % bins != 0:
        raise DataError(f"bins must divide 256, got {bins}")
    if img.width == 0 or img.height == 0:
        raise DataError("cannot featurize a zero-area image")
    arr = img.to_array()
    npix = img.width * img.height
    width = 256 // bins
    parts = []
    for ch in range(3):
        hist = np.bincount(arr[:, :, ch].ravel() // width, minlength=bins)
        parts.append(hist.astype(np.float64) / npix)
    return np.concatenate(parts)


def _distances(features: np.ndarray, query: np.ndarray, metric: str) -> np.ndarray:
    diff = features - query
    if metric == "l2":
        return np.sqrt((diff * diff).sum(axis=1))
    # chi-squared, with 0/0 buckets contributing 0
    denom = features + query
    terms = np.divide(
        diff * diff, denom, out=np.zeros_like(denom), where=denom != 0
    )
    return 0.5 * terms.sum(axis=1)


@dataclass(eq=False)
class HistogramIndex:
    """Feature matrix plus the preprocessed captions of each training image."""

    bins: int
    metric: str
    features: np.ndarray  # (n, 3*bins) float64
    captions: tuple[tuple[str, ...], ...]
    names: tuple[str, ...]

    def __post_init__(self):
        if self.metric not in METRICS:
            raise DataError(f"unknown metric {self.metric!r} (use one of {METRICS})")
        if len(self.captions) == 0:
            raise DataError("index must be non-empty")
        features = np.asarray(self.features, dtype=np.float64)
        if features.shape != (len(self.captions), 3 * self.bins):
            raise DataError(
                f"feature matrix shape {features.shape} does not match "
                f"{len(self.captions)} x {3 * self.bins}"
            )
        self.features = features

    def __len__(self) -> int:
        return len(self.captions)

    def nearest(self, img: ImageBuffer) -> int:
        """Index of the closest entry; ties go to the earliest inserted."""
        query = featurize(img, self.bins)
        return int(np.argmin(_distances(self.features, query, self.metric)))


def build_index(
    corpus: Sequence[CaptionedImage], bins: int = 4, metric: str = "chi2"
) -> HistogramIndex:
    """Index a captioned corpus; captions are stored caption-preprocessed."""
    if not corpus:
        raise DataError("cannot build an index from an empty corpus")
    features = np.stack([featurize(item.image, bins) for item in corpus])
    captions = []
    for item in corpus:
        cleaned = tuple(clean(c, CAPTION_PRESET) for c in item.captions)
        for raw, c in zip(item.captions, cleaned):
            if not c:
                raise DataError(
                    f"caption of {item.name or 'corpus image'} is empty after "
                    f"preprocessing: {raw!r}"
                )
        captions.append(cleaned)
    names = tuple(item.name for item in corpus)
    return HistogramIndex(
        bins=bins, metric=metric, features=features,
        captions=tuple(captions), names=names,
    )


def caption_image(index: HistogramIndex, img: ImageBuffer) -> str:
    return index.captions[index.nearest(img)][0]


class KnnCaptioner(Captioner):
    def __init__(self, index: HistogramIndex):
        self.index = index

    def caption(self, img: ImageBuffer) -> str:
        return caption_image(self.index, img)

    @property
    def identifier(self) -> str:
        return (
            f"knn-histogram/v{INDEX_VERSION} "
            f"bins={self.index.bins} metric={self.index.metric} n={len(self.index)}"
        )


class SubprocessCaptioner(Captioner):
    """Adapter for an external captioner speaking newline-delimited stdio.

    Protocol: one request line holding an image path; one response line
    holding the caption. The child process is started lazily and kept
    alive across calls.
    """

    def __init__(self, command: Sequence[str]):
        if not command:
            raise DataError("subprocess captioner needs a command")
        self.command = list(command)
        self._proc: subprocess.Popen | None = None

    def _ensure(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        return self._proc

    def caption(self, img: ImageBuffer) -> str:
        proc = self._ensure()
        with tempfile.NamedTemporaryFile(suffix=".ppm", delete=False) as tmp:
            path = Path(tmp.name)
        try:
            write_ppm(img, path)
            assert proc.stdin is not None and proc.stdout is not None
            proc.stdin.write(str(path) + "\n")
            proc.stdin.flush()
            line = proc.stdout.readline()
        finally:
            path.unlink(missing_ok=True)
        if not line:
            raise DataError(f"captioner process {self.command[0]!r} closed its output")
        result = line.rstrip("\n")
        if not result.strip():
            raise DataError("captioner process returned an empty caption")
        return result

    def close(self):
        if self._proc is not None and self._proc.poll() is None:
            if self._proc.stdin is not None:
                self._proc.stdin.close()
            self._proc.wait(timeout=5)
        self._proc = None

    @property
    def identifier(self) -> str:
        return f"subprocess:{self.command[0]}"


def index_to_dict(index: HistogramIndex) -> dict:
    return {
        "format": INDEX_FORMAT,
        "version": INDEX_VERSION,
        "bins": index.bins,
        "metric": index.metric,
        "names": list(index.names),
        "features": [row.tolist() for row in index.features],
        "captions": [list(c) for c in index.captions],
    }


def index_from_dict(data: dict) -> HistogramIndex:
    if not isinstance(data, dict) or data.get("format") != INDEX_FORMAT:
        raise DataError("not a caption index document (missing format tag)")
    if data.get("version") != INDEX_VERSION:
        raise DataError(f"unsupported index version {data.get('version')!r}")
    try:
        return HistogramIndex(
            bins=int(data["bins"]),
            metric=str(data["metric"]),
            features=np.asarray(data["features"], dtype=np.float64),
            captions=tuple(tuple(c) for c in data["captions"]),
            names=tuple(data["names"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"malformed caption index document: {e}") from e


def save_index(index: HistogramIndex, path) -> None:
    text = json.dumps(index_to_dict(index), sort_keys=True, ensure_ascii=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_index(path) -> HistogramIndex:
    path = Path(path)
    if not path.exists():
        raise DataError(f"caption index not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: malformed JSON: {e}") from e
    return index_from_dict(data)
