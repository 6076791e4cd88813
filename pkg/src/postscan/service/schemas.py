"""Request/response bodies for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthOut(BaseModel):
    status: str
    version: str
    model_loaded: bool
    index_loaded: bool


class CleanIn(BaseModel):
    text: str
    preset: str = "post"


class CleanOut(BaseModel):
    cleaned: str
    tokens: list[str]


class PostIn(BaseModel):
    id: str
    text: str = ""
    image_path: str | None = None
    image_b64: str | None = None  # base64 of a P6 PPM or a PNG file
    label: int | None = None


class VerdictOut(BaseModel):
    id: str
    label: int
    score: float
    generated_caption: str | None
    fused_text: str
    from_priors: bool


class ClassifyIn(BaseModel):
    posts: list[PostIn]
    threshold: float | None = Field(default=None, ge=0.0, le=1.0)


class ClassifyOut(BaseModel):
    verdicts: list[VerdictOut]


class CaptionIn(BaseModel):
    image_path: str | None = None
    image_b64: str | None = None


class CaptionOut(BaseModel):
    caption: str


class BleuPair(BaseModel):
    candidate: str
    references: list[str]


class BleuIn(BaseModel):
    pairs: list[BleuPair]
    max_order: int = 2
    smooth: bool = False


class BleuOut(BaseModel):
    bleu1: float
    bleu2: float | None
    precisions: list[float]
    matches: list[int]
    totals: list[int]
    brevity_penalty: float
    candidate_length: int
    reference_length: int


class EvaluateIn(BaseModel):
    gold: list[int]
    predicted: list[int]
    scores: list[float] | None = None


class LoadModelIn(BaseModel):
    path: str


class LoadIndexIn(BaseModel):
    path: str


class TrainDoc(BaseModel):
    text: str
    label: int


class TrainIn(BaseModel):
    docs: list[TrainDoc]
    variant: str = "complement"
    alpha: float = 1.0
    preset: str = "post"
    save_path: str | None = None


class TrainOut(BaseModel):
    variant: str
    vocabulary_size: int
    documents: list[int]  # per class: [benign, concerning]
    saved_to: str | None
