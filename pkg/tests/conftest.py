"""Shared fixtures: synthetic images, captioned corpora, labeled text.

Also hosts the acceptance-criteria registry: test_acceptance.py records one
PASS/FAIL per criterion here and the terminal summary prints them, plus the
suite-runtime criterion measured over the whole run.
"""

import json
import time

import numpy as np
import pytest

from postscan.corpus import CaptionedImage, Category
from postscan.images import ImageBuffer, write_ppm

ACCEPTANCE_RESULTS: dict[int, tuple[str, str]] = {}
_suite_start = time.perf_counter()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    elapsed = time.perf_counter() - _suite_start
    status = "PASS" if elapsed < 60.0 else "FAIL"
    ACCEPTANCE_RESULTS[10] = ("suite runtime", f"{status} ({elapsed:.1f}s)")
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        label, outcome = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"ACCEPTANCE {n} ({label}): {outcome}")


def solid_image(r, g, b, width=6, height=4):
    arr = np.zeros((height, width, 3), dtype=np.uint8)
    arr[:, :] = (r, g, b)
    return ImageBuffer.from_array(arr)


def random_image(rng, width=8, height=6):
    arr = rng.integers(0, 256, (height, width, 3), dtype=np.uint8)
    return ImageBuffer.from_array(arr)


def five_captions(stem):
    return tuple(f"{stem} caption number {word}" for word in
                 ("one", "two", "three", "four", "five"))


def make_item(rng, category=Category.NON_THREATENING, stem="a plain scene",
              augmented=False, name=""):
    return CaptionedImage(
        image=random_image(rng),
        captions=five_captions(stem),
        category=category,
        augmented=augmented,
        name=name,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_corpus(rng):
    """Nine images, three per category, distinct caption stems."""
    items = []
    stems = {
        Category.SCHOOL_SHOOTING: "a man holding a gun near a school",
        Category.MASS_SHOOTING: "a crowd running from an armed man",
        Category.NON_THREATENING: "a dog playing with a ball",
    }
    i = 0
    for category, stem in stems.items():
        for k in range(3):
            items.append(
                CaptionedImage(
                    image=random_image(np.random.default_rng(100 + i)),
                    captions=five_captions(f"{stem} scene {k}"),
                    category=category,
                    augmented=False,
                    name=f"img_{i:03d}.ppm",
                )
            )
            i += 1
    return items


def write_corpus_dir(items, directory):
    """Materialize CaptionedImage items as a manifest corpus on disk."""
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "manifest.jsonl", "w", encoding="utf-8") as mf:
        for i, item in enumerate(items):
            img_name = item.name or f"img_{i:03d}.ppm"
            cap_name = img_name.rsplit(".", 1)[0] + ".txt"
            write_ppm(item.image, directory / img_name)
            (directory / cap_name).write_text(
                "\n".join(item.captions) + "\n", encoding="utf-8"
            )
            mf.write(json.dumps({
                "image": img_name,
                "captions": cap_name,
                "category": item.category.value,
                "augmented": item.augmented,
            }) + "\n")
    return directory


LABELED_ROWS = [
    (1, "I am going to shoot up the school tomorrow"),
    (1, "bringing my gun to the event, everyone will pay"),
    (1, "they will regret it when I open fire with my rifle"),
    (1, "armed and heading into the crowd with a weapon"),
    (0, "I had a lovely time today at the park"),
    (0, "my dog is playing with a ball on the grass"),
    (0, "great picnic with friends and family this weekend"),
    (0, "the cat is sitting on the table again"),
]


@pytest.fixture
def labeled_csv(tmp_path):
    path = tmp_path / "posts.csv"
    lines = ["label,text"]
    for label, text in LABELED_ROWS:
        lines.append(f'{label},"{text}"')
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def labeled_jsonl(tmp_path):
    path = tmp_path / "posts.jsonl"
    with open(path, "w", encoding="utf-8") as f:
        for label, text in LABELED_ROWS:
            f.write(json.dumps({"label": label, "text": text}) + "\n")
    return path
