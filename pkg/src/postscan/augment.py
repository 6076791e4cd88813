"""Image augmentation operators and back-translation of captions.

Ops are small frozen dataclasses applied to ImageBuffer values; all of
them are exact integer transforms so identities hold bit for bit.
Caption augmentation round-trips text through a pivot language behind
the Translator interface. The shipped DictionaryTranslator is a
word-for-word pseudo-French mapper that is deliberately lossy on a
short, documented word list, so round trips produce paraphrases
deterministically.
"""

from __future__ import annotations

import json
import random
from abc import ABC, abstractmethod
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .corpus import CaptionedImage, Category
from .errors import DataError
from .images import ImageBuffer


@dataclass(frozen=True)
class FlipH:
    """Mirror left/right."""


@dataclass(frozen=True)
class FlipV:
    """Mirror top/bottom."""


@dataclass(frozen=True)
class Rotate90:
    turns: int = 1

    def __post_init__(self):
        if self.turns not in (1, 2, 3):
            raise DataError(f"rotate90 turns must be 1..3, got {self.turns}")


@dataclass(frozen=True)
class Crop:
    x: int
    y: int
    width: int
    height: int

    def __post_init__(self):
        if self.x < 0 or self.y < 0 or self.width < 1 or self.height < 1:
            raise DataError(
                f"crop rect must have non-negative origin and positive size, "
                f"got x={self.x} y={self.y} w={self.width} h={self.height}"
            )


@dataclass(frozen=True)
class Brightness:
    delta: int

    def __post_init__(self):
        if not -255 <= self.delta <= 255:
            raise DataError(f"brightness delta must be in [-255, 255], got {self.delta}")


@dataclass(frozen=True)
class Contrast:
    factor: float

    def __post_init__(self):
        if self.factor < 0:
            raise DataError(f"contrast factor must be >= 0, got {self.factor}")


@dataclass(frozen=True)
class ChannelShift:
    deltas: tuple[int, int, int]

    def __post_init__(self):
        if len(self.deltas) != 3:
            raise DataError("channel shift needs one delta per channel (3)")
        for d in self.deltas:
            if not -255 <= d <= 255:
                raise DataError(f"channel delta must be in [-255, 255], got {d}")


AugmentOp = Union[FlipH, FlipV, Rotate90, Crop, Brightness, Contrast, ChannelShift]


def apply(op: AugmentOp, img: ImageBuffer) -> ImageBuffer:
    """Apply one op to an image, returning a new buffer."""
    arr = img.to_array()
    if isinstance(op, FlipH):
        out = arr[:, ::-1, :]
    elif isinstance(op, FlipV):
        out = arr[::-1, :, :]
    elif isinstance(op, Rotate90):
        out = np.rot90(arr, k=op.turns)
    elif isinstance(op, Crop):
        if op.x + op.width > img.width or op.y + op.height > img.height:
            raise DataError(
                f"crop rect {op.width}x{op.height}+{op.x}+{op.y} exceeds "
                f"image bounds {img.width}x{img.height}"
            )
        out = arr[op.y : op.y + op.height, op.x : op.x + op.width, :]
    elif isinstance(op, Brightness):
        out = np.clip(arr.astype(np.int16) + op.delta, 0, 255)
    elif isinstance(op, Contrast):
        shifted = np.rint((arr.astype(np.float64) - 128.0) * op.factor + 128.0)
        out = np.clip(shifted, 0, 255)
    elif isinstance(op, ChannelShift):
        deltas = np.asarray(op.deltas, dtype=np.int16).reshape(1, 1, 3)
        out = np.clip(arr.astype(np.int16) + deltas, 0, 255)
    else:
        raise DataError(f"unknown augment op {op!r}")
    return ImageBuffer.from_array(out.astype(np.uint8))


def apply_all(ops: Sequence[AugmentOp], img: ImageBuffer) -> ImageBuffer:
    for op in ops:
        img = apply(op, img)
    return img


# Op <-> JSON spec dicts, used by recipe files.

_OP_NAMES = {
    FlipH: "flip_h",
    FlipV: "flip_v",
    Rotate90: "rotate90",
    Crop: "crop",
    Brightness: "brightness",
    Contrast: "contrast",
    ChannelShift: "channel_shift",
}


def op_to_spec(op: AugmentOp) -> dict:
    spec: dict = {"op": _OP_NAMES[type(op)]}
    if isinstance(op, Rotate90):
        spec["turns"] = op.turns
    elif isinstance(op, Crop):
        spec.update(x=op.x, y=op.y, width=op.width, height=op.height)
    elif isinstance(op, Brightness):
        spec["delta"] = op.delta
    elif isinstance(op, Contrast):
        spec["factor"] = op.factor
    elif isinstance(op, ChannelShift):
        spec["deltas"] = list(op.deltas)
    return spec


def op_from_spec(spec: dict) -> AugmentOp:
    if not isinstance(spec, dict) or "op" not in spec:
        raise DataError(f"op spec must be an object with an 'op' field, got {spec!r}")
    kind = spec["op"]
    try:
        if kind == "flip_h":
            return FlipH()
        if kind == "flip_v":
            return FlipV()
        if kind == "rotate90":
            return Rotate90(turns=int(spec.get("turns", 1)))
        if kind == "crop":
            return Crop(
                x=int(spec["x"]),
                y=int(spec["y"]),
                width=int(spec["width"]),
                height=int(spec["height"]),
            )
        if kind == "brightness":
            return Brightness(delta=int(spec["delta"]))
        if kind == "contrast":
            return Contrast(factor=float(spec["factor"]))
        if kind == "channel_shift":
            deltas = spec["deltas"]
            return ChannelShift(deltas=(int(deltas[0]), int(deltas[1]), int(deltas[2])))
    except (KeyError, IndexError, TypeError, ValueError) as e:
        raise DataError(f"bad parameters for op {kind!r}: {e}") from e
    raise DataError(f"unknown op kind {kind!r}")


class Translator(ABC):
    """Deterministic text translation between tagged languages."""

    @abstractmethod
    def translate(self, text: str, source: str, target: str) -> str:
        raise NotImplementedError

    @property
    @abstractmethod
    def pairs(self) -> frozenset[tuple[str, str]]:
        """Supported (source, target) language pairs."""
        raise NotImplementedError

    def supports(self, source: str, target: str) -> bool:
        return (source, target) in self.pairs


class IdentityTranslator(Translator):
    """Returns text unchanged; useful as a no-op baseline in tests."""

    def __init__(self, source: str = "en", pivot: str = "fr"):
        self._pairs = frozenset({(source, pivot), (pivot, source)})

    def translate(self, text: str, source: str, target: str) -> str:
        if not self.supports(source, target):
            raise DataError(f"unsupported language pair {source}->{target}")
        return text

    @property
    def pairs(self) -> frozenset[tuple[str, str]]:
        return self._pairs


class DictionaryTranslator(Translator):
    """Word-for-word lookup translator.

    Words are split on whitespace; unknown words pass through unchanged;
    output words are joined with single spaces.
    """

    def __init__(self, tables: dict[tuple[str, str], dict[str, str]]):
        if not tables:
            raise DataError("dictionary translator needs at least one language pair")
        self._tables = {pair: dict(table) for pair, table in tables.items()}

    @property
    def pairs(self) -> frozenset[tuple[str, str]]:
        return frozenset(self._tables)

    def translate(self, text: str, source: str, target: str) -> str:
        table = self._tables.get((source, target))
        if table is None:
            raise DataError(f"unsupported language pair {source}->{target}")
        return " ".join(table.get(w, w) for w in text.split())

    @classmethod
    def from_tsv(
        cls,
        forward_path: str | Path,
        reverse_path: str | Path,
        source: str = "en",
        pivot: str = "fr",
    ) -> "DictionaryTranslator":
        return cls(
            {
                (source, pivot): load_tsv_table(forward_path),
                (pivot, source): load_tsv_table(reverse_path),
            }
        )


def load_tsv_table(path: str | Path) -> dict[str, str]:
    """Load a two-column TSV word table; '#' lines and blanks are skipped."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"translation table not found: {path}")
    table = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise DataError(f"{path}:{lineno}: expected 'word<TAB>word', got {line!r}")
        table[parts[0]] = parts[1]
    if not table:
        raise DataError(f"{path}: translation table is empty")
    return table


def default_translator() -> DictionaryTranslator:
    """The packaged en<->fr pseudo-French translator."""
    data = resources.files("postscan.data")
    with resources.as_file(data / "pseudo_fr.tsv") as fwd, resources.as_file(
        data / "pseudo_fr_rev.tsv"
    ) as rev:
        return DictionaryTranslator.from_tsv(fwd, rev)


def back_translate(
    text: str, translator: Translator, pivot: str = "fr", source: str = "en"
) -> str:
    """Round-trip text through the pivot language and trim the result."""
    if not translator.supports(source, pivot) or not translator.supports(pivot, source):
        raise DataError(f"translator does not support {source}<->{pivot}")
    pivoted = translator.translate(text, source, pivot)
    return translator.translate(pivoted, pivot, source).strip()


def augment_captioned(
    item: CaptionedImage,
    ops: Sequence[AugmentOp],
    translator: Translator,
    pivot: str = "fr",
) -> CaptionedImage:
    """Augment one item: transform the image, back-translate all captions.

    The result keeps the category and sets the augmented flag.
    """
    image = apply_all(ops, item.image)
    captions = tuple(back_translate(c, translator, pivot) for c in item.captions)
    stem = Path(item.name).stem if item.name else ""
    return CaptionedImage(
        image=image,
        captions=captions,
        category=item.category,
        augmented=True,
        name=f"{stem}_aug.ppm" if stem else "",
    )


@dataclass(frozen=True)
class AugmentRecipe:
    """Per-category candidate op pipelines plus the seed that assigns them.

    Categories absent from the recipe are left unaugmented.
    """

    version: int
    seed: int
    pipelines: dict[Category, tuple[tuple[AugmentOp, ...], ...]]

    def __post_init__(self):
        if self.version != 1:
            raise DataError(f"unsupported recipe version {self.version}")
        for cat, pipes in self.pipelines.items():
            if not pipes:
                raise DataError(f"recipe lists no pipelines for {cat.value}")


def load_recipe(path: str | Path) -> AugmentRecipe:
    path = Path(path)
    if not path.exists():
        raise DataError(f"augment recipe not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: malformed JSON: {e}") from e
    if not isinstance(raw, dict):
        raise DataError(f"{path}: recipe must be a JSON object")
    unknown = set(raw) - {"version", "seed", "categories"}
    if unknown:
        raise DataError(f"{path}: unknown recipe keys: {sorted(unknown)}")
    try:
        version = int(raw["version"])
        seed = int(raw["seed"])
        categories = raw["categories"]
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"{path}: recipe needs integer 'version' and 'seed' "
                        f"and a 'categories' object: {e}") from e
    if not isinstance(categories, dict):
        raise DataError(f"{path}: 'categories' must be an object")
    pipelines = {}
    for cat_name, pipes in categories.items():
        try:
            cat = Category(cat_name)
        except ValueError:
            raise DataError(f"{path}: unknown category {cat_name!r}")
        if not isinstance(pipes, list):
            raise DataError(f"{path}: pipelines for {cat_name} must be a list")
        parsed = tuple(
            tuple(op_from_spec(spec) for spec in pipe) for pipe in pipes
        )
        pipelines[cat] = parsed
    return AugmentRecipe(version=version, seed=seed, pipelines=pipelines)


def default_recipe() -> AugmentRecipe:
    data = resources.files("postscan.data")
    with resources.as_file(data / "augment_recipe.json") as p:
        return load_recipe(p)


def augment_corpus(
    corpus: Sequence[CaptionedImage],
    recipe: AugmentRecipe,
    translator: Translator,
    pivot: str = "fr",
) -> list[CaptionedImage]:
    """Augment every corpus item whose category the recipe covers.

    Pipeline choice per item draws from one RNG seeded once, so the same
    corpus order and seed always assign the same pipelines.
    """
    rng = random.Random(recipe.seed)
    out = []
    for item in corpus:
        pipes = recipe.pipelines.get(item.category)
        if pipes is None:
            continue
        ops = pipes[rng.randrange(len(pipes))]
        out.append(augment_captioned(item, ops, translator, pivot))
    return out
