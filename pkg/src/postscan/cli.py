"""Command-line surface.

Subcommands: prep, augment, train, eval, caption, bleu, classify,
report, serve. Every command runs in process against the core package;
classify, caption, and bleu can instead be routed to a running service
with --server, keeping this module a thin client of the same endpoints.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .augment import augment_corpus, default_recipe, default_translator, load_recipe
from .augment import DictionaryTranslator, IdentityTranslator
from .bleu import average_sentence_bleu, corpus_bleu
from .captioner import KnnCaptioner, SubprocessCaptioner, build_index, caption_image
from .captioner import load_index, save_index
from .corpus import SplitSpec, load_image_corpus, load_text_corpus, split
from .corpus import write_image_corpus
from .errors import DataError, UsageError
from .images import read_image
from .metrics import evaluate, format_report, roc_csv, save_report
from .nbayes import canonical_variant, load_model, predict_batch, save_model, train
from .pipeline import PipelineConfig, batch_classify, load_config, load_posts
from .pipeline import verdict_to_dict, write_verdicts
from .textprep import CAPTION_PRESET, clean, load_stopwords, preset, tokenize

def _variant(name: str) -> str:
    try:
        return canonical_variant(name)
    except DataError as e:
        raise UsageError(str(e))  # a bad flag value is a usage problem


def _load_labeled(path: str, clean_preset: str, stopword_path: str | None):
    """Labeled corpus -> (token lists, labels, cleaned texts)."""
    stop = load_stopwords(stopword_path) if stopword_path else None
    records = load_text_corpus(path)
    cfg = preset(clean_preset)
    cleaned = [clean(r.text, cfg, stopwords=stop) for r in records]
    docs = [tokenize(c) for c in cleaned]
    labels = [r.label for r in records]
    return docs, labels, cleaned


def _require(args, name: str):
    value = getattr(args, name, None)
    if not value:
        raise UsageError(f"--{name.replace('_', '-')} is required here")
    return value


def _config(args) -> PipelineConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return PipelineConfig()


def _read_jsonl(path: str | Path):
    path = Path(path)
    if not path.exists():
        raise DataError(f"file not found: {path}")
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"{path}:{lineno}: malformed JSON: {e}") from e


def _artifact(cli_value, config_value, what: str) -> str:
    path = cli_value or config_value
    if not path:
        raise UsageError(f"no {what} given on the command line or in the config")
    return path


def _post_json(server: str, route: str, payload: dict) -> dict:
    import httpx

    url = server.rstrip("/") + route
    try:
        response = httpx.post(url, json=payload, timeout=60.0)
    except httpx.HTTPError as e:
        raise DataError(f"cannot reach service at {url}: {e}") from e
    if response.status_code == 400:
        raise DataError(response.json().get("detail", response.text))
    if response.status_code >= 400:
        raise DataError(f"service error {response.status_code}: {response.text}")
    return response.json()


# --- subcommand bodies ---


def _cmd_prep(args) -> int:
    out = _require(args, "out")
    _, labels, cleaned = _load_labeled(args.input, args.preset, args.stopwords)
    with open(out, "w", encoding="utf-8") as f:
        for label, text in zip(labels, cleaned):
            f.write(json.dumps({"label": label, "text": text}, sort_keys=True,
                               ensure_ascii=False) + "\n")
    print(f"wrote {len(labels)} cleaned records to {out}")
    return 0


def _cmd_augment(args) -> int:
    out = _require(args, "out")
    corpus = load_image_corpus(args.images)
    recipe = load_recipe(args.recipe) if args.recipe else default_recipe()
    if args.seed is not None:
        import dataclasses

        recipe = dataclasses.replace(recipe, seed=args.seed)
    if args.translator == "identity":
        translator = IdentityTranslator()
    elif args.forward and args.reverse:
        translator = DictionaryTranslator.from_tsv(args.forward, args.reverse)
    else:
        translator = default_translator()
    augmented = augment_corpus(corpus, recipe, translator)
    write_image_corpus(augmented, out)
    print(f"augmented {len(augmented)} of {len(corpus)} images into {out}")
    return 0


def _cmd_train(args) -> int:
    out = _require(args, "out")
    config = _config(args)
    docs, labels, _ = _load_labeled(args.input, args.preset, args.stopwords)
    pairs = list(zip(docs, labels))
    if args.split is not None:
        seed = args.seed if args.seed is not None else config.seed
        train_part, test_part = split(pairs, SplitSpec(args.split, seed))
    else:
        train_part, test_part = pairs, []
    variant = _variant(args.variant) if args.variant else config.variant
    alpha = args.alpha if args.alpha is not None else config.alpha
    model = train(
        [(d, l) for d, l in train_part],
        variant=variant,
        alpha=alpha,
        weight_normalize=config.weight_normalize,
    )
    save_model(model, out)
    print(
        f"trained {model.variant} on {len(train_part)} docs "
        f"(|V|={len(model.vocab)}), wrote {out}"
    )
    if test_part:
        predictions = predict_batch(model, [d for d, _ in test_part],
                                    threshold=config.threshold)
        report = evaluate(
            [l for _, l in test_part],
            [p.label for p in predictions],
            scores=[p.score for p in predictions],
        )
        print(format_report(report))
        if args.eval_out:
            save_report(report, args.eval_out)
    return 0


def _cmd_eval(args) -> int:
    config = _config(args)
    model = load_model(_artifact(args.model, config.model_path, "model"))
    docs, labels, _ = _load_labeled(args.input, args.preset, args.stopwords)
    threshold = args.threshold if args.threshold is not None else config.threshold
    predictions = predict_batch(model, docs, threshold=threshold)
    report = evaluate(labels, [p.label for p in predictions],
                      scores=[p.score for p in predictions])
    print(format_report(report))
    if args.out:
        save_report(report, args.out)
    if args.roc_out:
        Path(args.roc_out).write_text(roc_csv(report.roc_points), encoding="utf-8")
    return 0


def _cmd_caption(args) -> int:
    config = _config(args)
    if args.images:
        out = _require(args, "out")
        corpus = load_image_corpus(args.images)
        index = build_index(corpus, bins=config.bins, metric=config.metric)
        save_index(index, out)
        print(f"indexed {len(index)} images into {out}")
        return 0
    image_path = _require(args, "image")
    if args.server:
        import base64

        payload = {
            "image_b64": base64.b64encode(Path(image_path).read_bytes()).decode()
        }
        print(_post_json(args.server, "/caption", payload)["caption"])
        return 0
    index = load_index(_artifact(args.index, config.index_path, "caption index"))
    print(caption_image(index, read_image(image_path)))
    return 0


def _load_caption_pairs(refs_path: str, hyps_path: str):
    """Join refs {"id","captions"} and hyps {"id","caption"} on id."""
    refs = {}
    for lineno, obj in _read_jsonl(refs_path):
        if "id" not in obj or "captions" not in obj:
            raise DataError(f"{refs_path}:{lineno}: record needs 'id' and 'captions'")
        refs[str(obj["id"])] = [str(c) for c in obj["captions"]]
    if not refs:
        raise DataError(f"{refs_path}: no reference records")
    pairs = []
    for lineno, obj in _read_jsonl(hyps_path):
        if "id" not in obj or "caption" not in obj:
            raise DataError(f"{hyps_path}:{lineno}: record needs 'id' and 'caption'")
        pid = str(obj["id"])
        if pid not in refs:
            raise DataError(f"{hyps_path}:{lineno}: id {pid!r} has no references")
        pairs.append((str(obj["caption"]), refs[pid]))
    if not pairs:
        raise DataError(f"{hyps_path}: no hypothesis records")
    return pairs


def _cmd_bleu(args) -> int:
    pairs = _load_caption_pairs(args.refs, args.hyps)
    if args.server:
        payload = {
            "pairs": [{"candidate": c, "references": r} for c, r in pairs],
            "max_order": args.max_order,
            "smooth": args.smooth,
        }
        data = _post_json(args.server, "/bleu", payload)
        bleu1, bleu2 = data["bleu1"], data["bleu2"]
        report_dict = data
    else:
        tokenized = [
            (
                tokenize(clean(c, CAPTION_PRESET)),
                [tokenize(clean(r, CAPTION_PRESET)) for r in rs],
            )
            for c, rs in pairs
        ]
        report = corpus_bleu(tokenized, max_order=args.max_order, smooth=args.smooth)
        bleu1, bleu2 = report.bleu1, report.bleu2
        report_dict = report.to_dict()
        if args.sentence_average:
            avg1, avg2 = average_sentence_bleu(tokenized, args.max_order, args.smooth)
            report_dict["sentence_average"] = {"bleu1": avg1, "bleu2": avg2}
    line = f"BLEU-1 {bleu1:.4f}"
    if bleu2 is not None:
        line += f" BLEU-2 {bleu2:.4f}"
    print(line)
    if args.out:
        Path(args.out).write_text(
            json.dumps(report_dict, sort_keys=True) + "\n", encoding="utf-8"
        )
    return 0


def _cmd_classify(args) -> int:
    out = _require(args, "out")
    config = _config(args)
    posts_path = Path(args.posts)
    if args.server:
        import base64

        payload_posts = []
        for lineno, obj in _read_jsonl(posts_path):
            if "id" not in obj:
                raise DataError(f"{posts_path}:{lineno}: post record needs an 'id'")
            entry = {"id": str(obj["id"]), "text": str(obj.get("text", "") or "")}
            if obj.get("image"):
                image_file = posts_path.parent / obj["image"]
                if not image_file.exists():
                    raise DataError(f"image file not found: {image_file}")
                entry["image_b64"] = base64.b64encode(image_file.read_bytes()).decode()
            if obj.get("label") is not None:
                entry["label"] = int(obj["label"])
            payload_posts.append(entry)
        payload = {"posts": payload_posts}
        if args.threshold is not None:
            payload["threshold"] = args.threshold
        data = _post_json(args.server, "/classify", payload)
        with open(out, "w", encoding="utf-8") as f:
            for v in data["verdicts"]:
                f.write(json.dumps(v, sort_keys=True, ensure_ascii=False) + "\n")
        concerning = sum(1 for v in data["verdicts"] if v["label"] == 1)
        print(f"classified {len(data['verdicts'])} posts ({concerning} concerning), wrote {out}")
        return 0
    posts = load_posts(posts_path)
    model = load_model(_artifact(args.model, config.model_path, "model"))
    captioner = None
    if any(p.image is not None for p in posts):
        if config.captioner_kind == "subprocess":
            captioner = SubprocessCaptioner(config.captioner_command.split())
        else:
            captioner = KnnCaptioner(
                load_index(_artifact(args.index, config.index_path, "caption index"))
            )
    if args.threshold is not None:
        import dataclasses

        config = dataclasses.replace(config, threshold=args.threshold)
    verdicts = batch_classify(posts, captioner, model, config)
    write_verdicts(verdicts, out)
    concerning = sum(1 for v in verdicts if v.label == 1)
    print(f"classified {len(verdicts)} posts ({concerning} concerning), wrote {out}")
    return 0


def _cmd_report(args) -> int:
    verdicts = [obj for _, obj in _read_jsonl(args.verdicts)]
    posts = load_posts(args.posts)
    gold_by_id = {p.id: p.gold_label for p in posts}
    gold, predicted, scores = [], [], []
    for v in verdicts:
        vid = str(v["id"])
        if vid not in gold_by_id:
            raise DataError(f"verdict {vid!r} has no matching post")
        if gold_by_id[vid] is None:
            raise DataError(f"post {vid!r} has no gold label; cannot evaluate")
        gold.append(gold_by_id[vid])
        predicted.append(int(v["label"]))
        scores.append(float(v["score"]))
    report = evaluate(gold, predicted, scores=scores)
    print(format_report(report))
    if args.out:
        save_report(report, args.out)
    if args.roc_out:
        Path(args.roc_out).write_text(roc_csv(report.roc_points), encoding="utf-8")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(_config(args))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--out", help="output file (or directory for augment)")
    common.add_argument("--server", help="route through a running service URL")

    parser = argparse.ArgumentParser(
        prog="postscan",
        description="Caption, fuse, and classify social media posts.",
    )
    parser.add_argument("--version", action="version", version=f"postscan {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prep", parents=[common], help="clean a labeled text corpus")
    p.add_argument("--input", required=True, help="CSV (label,text) or JSONL corpus")
    p.add_argument("--preset", default="post", help="clean preset: post or caption")
    p.add_argument("--stopwords", help="stopword file overriding the shipped list")
    p.set_defaults(func=_cmd_prep)

    p = sub.add_parser("augment", parents=[common], help="augment a captioned image corpus")
    p.add_argument("--images", required=True, help="corpus directory with manifest.jsonl")
    p.add_argument("--recipe", help="recipe JSON (default: packaged recipe)")
    p.add_argument("--translator", choices=["dictionary", "identity"],
                   default="dictionary")
    p.add_argument("--forward", help="en->pivot TSV overriding the packaged table")
    p.add_argument("--reverse", help="pivot->en TSV overriding the packaged table")
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("train", parents=[common], help="train a classifier")
    p.add_argument("--input", required=True, help="labeled corpus (CSV or JSONL)")
    p.add_argument("--variant", help="mnb, cnb, or bnb (default from config)")
    p.add_argument("--alpha", type=float, help="smoothing constant (default 1)")
    p.add_argument("--split", type=float,
                   help="hold out this test fraction and report on it")
    p.add_argument("--preset", default="post")
    p.add_argument("--stopwords")
    p.add_argument("--eval-out", help="write the holdout report JSON here")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", parents=[common], help="evaluate a model on labeled text")
    p.add_argument("--model", help="model JSON (default from config)")
    p.add_argument("--input", required=True)
    p.add_argument("--preset", default="post")
    p.add_argument("--stopwords")
    p.add_argument("--threshold", type=float)
    p.add_argument("--roc-out", help="write ROC points CSV here")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("caption", parents=[common],
                       help="build a caption index or caption one image")
    p.add_argument("--images", help="build an index from this corpus directory")
    p.add_argument("--index", help="query an existing index")
    p.add_argument("--image", help="image to caption (.ppm or .png)")
    p.set_defaults(func=_cmd_caption)

    p = sub.add_parser("bleu", parents=[common], help="score hypotheses against references")
    p.add_argument("--refs", required=True, help='JSONL {"id", "captions": [...]}')
    p.add_argument("--hyps", required=True, help='JSONL {"id", "caption"}')
    p.add_argument("--max-order", type=int, default=2, choices=[1, 2])
    p.add_argument("--smooth", action="store_true")
    p.add_argument("--sentence-average", action="store_true",
                   help="also report the per-sentence mean")
    p.set_defaults(func=_cmd_bleu)

    p = sub.add_parser("classify", parents=[common], help="classify posts end to end")
    p.add_argument("--posts", required=True, help="posts JSONL")
    p.add_argument("--model", help="model JSON (default from config)")
    p.add_argument("--index", help="caption index (needed for image posts)")
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("report", parents=[common],
                       help="evaluate verdicts against gold labels")
    p.add_argument("--verdicts", required=True)
    p.add_argument("--posts", required=True, help="posts JSONL with gold labels")
    p.add_argument("--roc-out")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("serve", parents=[common], help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on bad usage; 0 covers --help/--version
        return 0 if e.code == 0 else 1
    try:
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        raise
    except Exception as e:  # anything unplanned is an internal error
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3


def main(argv=None) -> None:
    sys.exit(run_command(argv))


if __name__ == "__main__":
    main()
