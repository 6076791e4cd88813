"""Dataset representation: labeled text, captioned images, category
combinations, and deterministic train/test splitting.

Text corpora load from CSV (header `label,text`) or JSONL
(`{"label": 0|1, "text": "..."}`). Image corpora load from a directory
holding a `manifest.jsonl` that maps each image file to its category,
augmented flag, and 5-line caption sidecar.
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence, TypeVar

from .errors import DataError
from .images import ImageBuffer, read_image

BENIGN = 0
CONCERNING = 1

LABEL_NAMES = {BENIGN: "benign", CONCERNING: "concerning"}


class Category(str, Enum):
    SCHOOL_SHOOTING = "school_shooting"
    MASS_SHOOTING = "mass_shooting"
    NON_THREATENING = "non_threatening"


# A selector picks one (category, augmented) slice of an image corpus.
Selector = tuple[Category, bool]


@dataclass(frozen=True)
class LabeledText:
    text: str
    label: int
    source: str = ""

    def __post_init__(self):
        if self.label not in (BENIGN, CONCERNING):
            raise DataError(f"label must be 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class CaptionedImage:
    """An image with exactly five reference captions and a category tag."""

    image: ImageBuffer
    captions: tuple[str, ...]
    category: Category
    augmented: bool = False
    name: str = ""

    def __post_init__(self):
        if len(self.captions) != 5:
            raise DataError(
                f"captioned image needs exactly 5 captions, got {len(self.captions)}"
            )
        if len(set(self.captions)) != 5:
            raise DataError("captions must be pairwise distinct")


@dataclass(frozen=True)
class DatasetCombination:
    """A named union of (category, augmented) slices of an image corpus."""

    name: str
    selectors: frozenset[Selector]
    members: tuple[CaptionedImage, ...]

    @property
    def images(self) -> int:
        return len(self.members)

    @property
    def captions(self) -> int:
        return sum(len(m.captions) for m in self.members)


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float
    seed: int

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise DataError(
                f"test_fraction must be in (0, 1), got {self.test_fraction}"
            )
        if self.seed < 0:
            raise DataError("seed must be non-negative")


def _parse_label(raw, where: str) -> int:
    try:
        value = int(str(raw).strip())
    except (TypeError, ValueError):
        raise DataError(f"{where}: unknown label value {raw!r}")
    if value not in (BENIGN, CONCERNING):
        raise DataError(f"{where}: unknown label value {raw!r}")
    return value


def load_text_corpus(path: str | Path, format: str | None = None) -> list[LabeledText]:
    """Load labeled posts from a CSV or JSONL file, order preserved.

    `format` is inferred from the file extension when omitted.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"text corpus not found: {path}")
    if format is None:
        format = {"csv": "csv", "jsonl": "jsonl", "json": "jsonl"}.get(
            path.suffix.lstrip(".").lower(), ""
        )
    if format == "csv":
        return _load_csv(path)
    if format == "jsonl":
        return _load_jsonl(path)
    raise DataError(f"unknown text corpus format {format!r} (use csv or jsonl)")


def _load_csv(path: Path) -> list[LabeledText]:
    records = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        rows = list(reader)
    if not rows:
        return []
    header = [c.strip().lower() for c in rows[0]]
    if header[:2] != ["label", "text"]:
        raise DataError(f"{path}:1: expected CSV header 'label,text', got {rows[0]!r}")
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < 2:
            raise DataError(f"{path}:{lineno}: malformed record (need label and text)")
        label = _parse_label(row[0], f"{path}:{lineno}")
        records.append(LabeledText(text=row[1], label=label, source=f"{path.name}:{lineno}"))
    return records


def _load_jsonl(path: Path) -> list[LabeledText]:
    records = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"{path}:{lineno}: malformed JSON record: {e}") from e
            if not isinstance(obj, dict) or "text" not in obj or "label" not in obj:
                raise DataError(f"{path}:{lineno}: record needs 'text' and 'label' fields")
            label = _parse_label(obj["label"], f"{path}:{lineno}")
            records.append(
                LabeledText(text=str(obj["text"]), label=label, source=f"{path.name}:{lineno}")
            )
    return records


def _read_captions(path: Path) -> tuple[str, ...]:
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise DataError(f"cannot read caption file {path}: {e}") from e
    if len(lines) != 5:
        raise DataError(f"{path}: caption file must have exactly 5 lines, has {len(lines)}")
    return tuple(lines)


def load_image_corpus(directory: str | Path) -> list[CaptionedImage]:
    """Load captioned images listed in `<directory>/manifest.jsonl`.

    Each manifest record: {"image": relpath, "captions": relpath,
    "category": name, "augmented": bool}. Paths are relative to the
    manifest's directory.
    """
    directory = Path(directory)
    manifest = directory / "manifest.jsonl"
    if not manifest.exists():
        raise DataError(f"image corpus manifest not found: {manifest}")
    corpus = []
    with open(manifest, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"{manifest}:{lineno}: malformed JSON: {e}") from e
            for key in ("image", "captions", "category"):
                if key not in obj:
                    raise DataError(f"{manifest}:{lineno}: missing '{key}' field")
            try:
                category = Category(obj["category"])
            except ValueError:
                raise DataError(
                    f"{manifest}:{lineno}: unknown category {obj['category']!r}"
                )
            image_path = directory / obj["image"]
            captions = _read_captions(directory / obj["captions"])
            image = read_image(image_path)
            corpus.append(
                CaptionedImage(
                    image=image,
                    captions=captions,
                    category=category,
                    augmented=bool(obj.get("augmented", False)),
                    name=str(obj["image"]),
                )
            )
    return corpus


def write_image_corpus(corpus: Sequence[CaptionedImage], directory: str | Path) -> None:
    """Write images, caption sidecars, and a manifest under `directory`."""
    from .images import write_ppm

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "manifest.jsonl", "w", encoding="utf-8") as mf:
        for i, item in enumerate(corpus):
            stem = Path(item.name).stem if item.name else f"img_{i:05d}"
            img_name = f"{stem}.ppm"
            cap_name = f"{stem}.txt"
            write_ppm(item.image, directory / img_name)
            (directory / cap_name).write_text(
                "\n".join(item.captions) + "\n", encoding="utf-8"
            )
            record = {
                "image": img_name,
                "captions": cap_name,
                "category": item.category.value,
                "augmented": item.augmented,
            }
            mf.write(json.dumps(record, sort_keys=True) + "\n")


def combine(
    selectors: Sequence[Selector],
    corpus: Sequence[CaptionedImage],
    name: str = "",
) -> DatasetCombination:
    """Select the images matching any (category, augmented) selector.

    Every selector must match at least one corpus item; membership keeps
    corpus order.
    """
    selector_set = frozenset(
        (Category(cat), bool(aug)) for cat, aug in selectors
    )
    if not selector_set:
        raise DataError("empty category selection")
    members = tuple(
        item for item in corpus if (item.category, item.augmented) in selector_set
    )
    covered = {(m.category, m.augmented) for m in members}
    missing = selector_set - covered
    if missing:
        pretty = ", ".join(f"{c.value}{'+aug' if a else ''}" for c, a in sorted(missing))
        raise DataError(f"corpus has no images for selectors: {pretty}")
    if not name:
        name = "+".join(
            f"{c.value}{':aug' if a else ''}" for c, a in sorted(selector_set)
        )
    return DatasetCombination(name=name, selectors=selector_set, members=members)


T = TypeVar("T")


def split(corpus: Sequence[T], spec: SplitSpec) -> tuple[list[T], list[T]]:
    """Seeded-shuffle partition into (train, test).

    The test size is nearest-integer(N * test_fraction), rounding halves
    away from zero; the shuffled prefix is train, the suffix test.
    """
    n = len(corpus)
    if n < 2:
        raise DataError(f"need at least 2 items to split, got {n}")
    n_test = math.floor(n * spec.test_fraction + 0.5)
    order = list(range(n))
    random.Random(spec.seed).shuffle(order)
    train_idx, test_idx = order[: n - n_test], order[n - n_test :]
    return [corpus[i] for i in train_idx], [corpus[i] for i in test_idx]
