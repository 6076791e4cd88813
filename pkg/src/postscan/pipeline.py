"""Multimodal fusion: caption the image, fuse with the post text,
classify the fused text.

A Post is text, an optional image, or both. The Verdict keeps the
generated caption and the fused text so every decision can be audited.
Scores run from 0 (benign) to 1 (concerning); the label is Concerning
only when the score strictly exceeds the configured threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .captioner import METRICS, Captioner
from .corpus import BENIGN, CONCERNING
from .errors import DataError
from .images import ImageBuffer
from .nbayes import NbModel, canonical_variant, predict
from .textprep import preset, clean, tokenize

CONFIG_VERSION = 1


@dataclass(frozen=True)
class Post:
    id: str
    text: str = ""
    image: ImageBuffer | None = None
    gold_label: int | None = None

    def __post_init__(self):
        if not self.text and self.image is None:
            raise DataError(f"post {self.id!r} has neither text nor image")
        if self.gold_label is not None and self.gold_label not in (BENIGN, CONCERNING):
            raise DataError(f"post {self.id!r}: label must be 0 or 1")


@dataclass(frozen=True)
class Verdict:
    post_id: str
    label: int
    score: float
    generated_caption: str | None
    fused_text: str
    from_priors: bool = False


def verdict_to_dict(v: Verdict) -> dict:
    return {
        "id": v.post_id,
        "label": v.label,
        "score": v.score,
        "generated_caption": v.generated_caption,
        "fused_text": v.fused_text,
        "from_priors": v.from_priors,
    }


_CONFIG_FIELDS = {
    "version": int,
    "model_path": str,
    "index_path": str,
    "threshold": float,
    "seed": int,
    "text_preset": str,
    "caption_preset": str,
    "variant": str,
    "alpha": float,
    "weight_normalize": bool,
    "bins": int,
    "metric": str,
    "test_fraction": float,
    "captioner_kind": str,
    "captioner_command": str,
}


@dataclass(frozen=True)
class PipelineConfig:
    """Flat run configuration; every field has a working default."""

    version: int = CONFIG_VERSION
    model_path: str = ""
    index_path: str = ""
    threshold: float = 0.5
    seed: int = 7
    text_preset: str = "post"
    caption_preset: str = "caption"
    variant: str = "complement"
    alpha: float = 1.0
    weight_normalize: bool = False
    bins: int = 4
    metric: str = "chi2"
    test_fraction: float = 0.2
    captioner_kind: str = "knn"
    captioner_command: str = ""

    def __post_init__(self):
        if self.version != CONFIG_VERSION:
            raise DataError(f"unsupported config version {self.version}")
        if not 0.0 <= self.threshold <= 1.0:
            raise DataError(f"threshold must be in [0, 1], got {self.threshold}")
        if not 0.0 < self.test_fraction < 1.0:
            raise DataError(
                f"test_fraction must be in (0, 1), got {self.test_fraction}"
            )
        object.__setattr__(self, "variant", canonical_variant(self.variant))
        if self.metric not in METRICS:
            raise DataError(f"unknown metric {self.metric!r}")
        if self.bins < 1 or 256 % self.bins != 0:
            raise DataError(f"bins must divide 256, got {self.bins}")
        if not self.alpha > 0:
            raise DataError(f"alpha must be positive, got {self.alpha}")
        if self.captioner_kind not in ("knn", "subprocess"):
            raise DataError(f"unknown captioner kind {self.captioner_kind!r}")
        preset(self.text_preset)
        preset(self.caption_preset)


def load_config(path: str | Path) -> PipelineConfig:
    """Read a TOML config. Unknown keys are rejected, not ignored.

    Relative artifact paths are resolved against the config file's
    directory.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"config file not found: {path}")
    try:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise DataError(f"{path}: malformed TOML: {e}") from e
    if "version" not in raw:
        raise DataError(f"{path}: config must carry a 'version' key")
    unknown = set(raw) - set(_CONFIG_FIELDS)
    if unknown:
        raise DataError(f"{path}: unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in raw.items():
        want = _CONFIG_FIELDS[key]
        if want is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, want) or (want is int and isinstance(value, bool)):
            raise DataError(
                f"{path}: key {key!r} must be {want.__name__}, got {type(value).__name__}"
            )
        kwargs[key] = value
    for key in ("model_path", "index_path"):
        if kwargs.get(key):
            kwargs[key] = str((path.parent / kwargs[key]).resolve())
    return PipelineConfig(**kwargs)


def fuse(text: str, caption: str | None, config: PipelineConfig) -> str:
    """Cleaned post text, then a space, then the cleaned caption."""
    parts = [clean(text, preset(config.text_preset))]
    if caption is not None:
        parts.append(clean(caption, preset(config.caption_preset)))
    return " ".join(p for p in parts if p)


def classify_post(
    post: Post,
    captioner: Captioner | None,
    model: NbModel,
    config: PipelineConfig | None = None,
) -> Verdict:
    """Caption (if there is an image), fuse, classify."""
    config = config or PipelineConfig()
    caption = None
    if post.image is not None:
        if captioner is None:
            raise DataError(
                f"post {post.id!r} has an image but no captioner is configured"
            )
        caption = captioner.caption(post.image)
    fused = fuse(post.text, caption, config)
    tokens = tokenize(fused)
    result = predict(model, tokens, threshold=config.threshold)
    return Verdict(
        post_id=post.id,
        label=result.label,
        score=result.score,
        generated_caption=caption,
        fused_text=fused,
        from_priors=not any(t in model.vocab for t in tokens),
    )


def batch_classify(
    posts: Sequence[Post],
    captioner: Captioner | None,
    model: NbModel,
    config: PipelineConfig | None = None,
) -> list[Verdict]:
    """Elementwise classify_post, input order preserved."""
    verdicts = []
    for post in posts:
        try:
            verdicts.append(classify_post(post, captioner, model, config))
        except DataError:
            raise
        except Exception as e:
            raise DataError(f"post {post.id!r}: {e}") from e
    return verdicts


def write_verdicts(verdicts: Sequence[Verdict], path: str | Path) -> None:
    """One sorted-key JSON object per line; byte-stable for fixed inputs."""
    with open(path, "w", encoding="utf-8") as f:
        for v in verdicts:
            f.write(json.dumps(verdict_to_dict(v), sort_keys=True, ensure_ascii=False))
            f.write("\n")


def load_posts(path: str | Path) -> list[Post]:
    """Posts JSONL: {"id", "text", optional "image" path, optional "label"}.

    Image paths are resolved relative to the posts file.
    """
    from .images import read_image

    path = Path(path)
    if not path.exists():
        raise DataError(f"posts file not found: {path}")
    posts = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"{path}:{lineno}: malformed JSON: {e}") from e
            if not isinstance(obj, dict) or "id" not in obj:
                raise DataError(f"{path}:{lineno}: post record needs an 'id'")
            image = None
            if obj.get("image"):
                image = read_image(path.parent / obj["image"])
            label = obj.get("label")
            if label is not None:
                label = int(label)
            try:
                posts.append(
                    Post(
                        id=str(obj["id"]),
                        text=str(obj.get("text", "") or ""),
                        image=image,
                        gold_label=label,
                    )
                )
            except DataError as e:
                raise DataError(f"{path}:{lineno}: {e}") from e
    return posts
