"""HTTP surface over the core package.

The app holds one loaded classifier and one caption index in process
state; endpoints stay thin and delegate to the same functions the CLI
uses. Invalid input of any kind maps to HTTP 400.
"""

from __future__ import annotations

import base64
import binascii
import dataclasses

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..bleu import corpus_bleu
from ..captioner import KnnCaptioner, caption_image, load_index
from ..errors import DataError
from ..images import ImageBuffer, decode_ppm, read_image
from ..metrics import evaluate, report_to_dict
from ..nbayes import load_model, save_model, train
from ..pipeline import PipelineConfig, Post, batch_classify
from ..textprep import clean, preset, tokenize
from . import schemas


def _decode_b64_image(payload: str) -> ImageBuffer:
    try:
        raw = base64.b64decode(payload, validate=True)
    except (binascii.Error, ValueError) as e:
        raise DataError(f"image_b64 is not valid base64: {e}") from e
    if raw.startswith(b"\x89PNG"):
        import tempfile
        from pathlib import Path

        with tempfile.NamedTemporaryFile(suffix=".png", delete=False) as tmp:
            tmp.write(raw)
            path = Path(tmp.name)
        try:
            return read_image(path)
        finally:
            path.unlink(missing_ok=True)
    return decode_ppm(raw)


def _image_from(post: schemas.PostIn | schemas.CaptionIn) -> ImageBuffer | None:
    if getattr(post, "image_b64", None):
        return _decode_b64_image(post.image_b64)
    if getattr(post, "image_path", None):
        return read_image(post.image_path)
    return None


def create_app(config: PipelineConfig | None = None) -> FastAPI:
    app = FastAPI(title="postscan", version=__version__)
    app.state.config = config or PipelineConfig()
    app.state.model = None
    app.state.index = None
    cfg: PipelineConfig = app.state.config

    if cfg.model_path:
        app.state.model = load_model(cfg.model_path)
    if cfg.index_path:
        app.state.index = load_index(cfg.index_path)

    @app.exception_handler(DataError)
    async def _data_error(_: Request, exc: DataError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health", response_model=schemas.HealthOut)
    def health():
        return schemas.HealthOut(
            status="ok",
            version=__version__,
            model_loaded=app.state.model is not None,
            index_loaded=app.state.index is not None,
        )

    @app.post("/model/load", response_model=schemas.HealthOut)
    def model_load(body: schemas.LoadModelIn):
        app.state.model = load_model(body.path)
        return health()

    @app.post("/index/load", response_model=schemas.HealthOut)
    def index_load(body: schemas.LoadIndexIn):
        app.state.index = load_index(body.path)
        return health()

    @app.post("/train", response_model=schemas.TrainOut)
    def train_endpoint(body: schemas.TrainIn):
        docs = [
            (tokenize(clean(d.text, preset(body.preset))), d.label) for d in body.docs
        ]
        model = train(docs, variant=body.variant, alpha=body.alpha)
        if body.save_path:
            save_model(model, body.save_path)
        app.state.model = model
        return schemas.TrainOut(
            variant=model.variant,
            vocabulary_size=len(model.vocab),
            documents=list(model.doc_counts),
            saved_to=body.save_path,
        )

    @app.post("/clean", response_model=schemas.CleanOut)
    def clean_endpoint(body: schemas.CleanIn):
        cleaned = clean(body.text, preset(body.preset))
        return schemas.CleanOut(cleaned=cleaned, tokens=tokenize(cleaned))

    @app.post("/caption", response_model=schemas.CaptionOut)
    def caption_endpoint(body: schemas.CaptionIn):
        if app.state.index is None:
            raise DataError("no caption index loaded (POST /index/load first)")
        img = _image_from(body)
        if img is None:
            raise DataError("caption request needs image_b64 or image_path")
        return schemas.CaptionOut(caption=caption_image(app.state.index, img))

    @app.post("/classify", response_model=schemas.ClassifyOut)
    def classify_endpoint(body: schemas.ClassifyIn):
        if app.state.model is None:
            raise DataError("no model loaded (POST /model/load or /train first)")
        posts = [
            Post(
                id=p.id,
                text=p.text,
                image=_image_from(p),
                gold_label=p.label,
            )
            for p in body.posts
        ]
        run_cfg = app.state.config
        if body.threshold is not None:
            run_cfg = dataclasses.replace(run_cfg, threshold=body.threshold)
        captioner = KnnCaptioner(app.state.index) if app.state.index is not None else None
        verdicts = batch_classify(posts, captioner, app.state.model, run_cfg)
        return schemas.ClassifyOut(
            verdicts=[
                schemas.VerdictOut(
                    id=v.post_id,
                    label=v.label,
                    score=v.score,
                    generated_caption=v.generated_caption,
                    fused_text=v.fused_text,
                    from_priors=v.from_priors,
                )
                for v in verdicts
            ]
        )

    @app.post("/bleu", response_model=schemas.BleuOut)
    def bleu_endpoint(body: schemas.BleuIn):
        from ..textprep import CAPTION_PRESET

        pairs = [
            (
                tokenize(clean(p.candidate, CAPTION_PRESET)),
                [tokenize(clean(r, CAPTION_PRESET)) for r in p.references],
            )
            for p in body.pairs
        ]
        report = corpus_bleu(pairs, max_order=body.max_order, smooth=body.smooth)
        return schemas.BleuOut(**report.to_dict())

    @app.post("/evaluate")
    def evaluate_endpoint(body: schemas.EvaluateIn):
        report = evaluate(body.gold, body.predicted, scores=body.scores)
        return report_to_dict(report)

    return app
