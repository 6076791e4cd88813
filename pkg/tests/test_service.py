import base64
import json

import pytest

pytest.importorskip("fastapi")
from fastapi.testclient import TestClient

from postscan.captioner import build_index, save_index
from postscan.nbayes import save_model, train
from postscan.pipeline import PipelineConfig, Post, batch_classify
from postscan.service import create_app
from postscan.textprep import POST_PRESET, clean, tokenize

from conftest import LABELED_ROWS, solid_image

TRAIN_DOCS = [{"text": t, "label": l} for l, t in LABELED_ROWS]


def ppm_b64(img):
    raw = b"P6\n%d %d\n255\n" % (img.width, img.height) + img.pixels
    return base64.b64encode(raw).decode()


@pytest.fixture
def client():
    return TestClient(create_app())


@pytest.fixture
def trained_client(client):
    response = client.post("/train", json={"docs": TRAIN_DOCS, "variant": "cnb"})
    assert response.status_code == 200
    return client


@pytest.fixture
def index_file(tmp_path, tiny_corpus):
    path = tmp_path / "index.json"
    save_index(build_index(tiny_corpus, bins=4), path)
    return path


class TestHealth:
    def test_empty_state(self, client):
        data = client.get("/health").json()
        assert data["status"] == "ok"
        assert data["model_loaded"] is False
        assert data["index_loaded"] is False

    def test_after_train_and_index_load(self, trained_client, index_file):
        trained_client.post("/index/load", json={"path": str(index_file)})
        data = trained_client.get("/health").json()
        assert data["model_loaded"] is True
        assert data["index_loaded"] is True


class TestLoading:
    def test_model_load_round_trip(self, client, tmp_path):
        docs = [(tokenize(clean(t, POST_PRESET)), l) for l, t in LABELED_ROWS]
        path = tmp_path / "model.json"
        save_model(train(docs, variant="multinomial"), path)
        response = client.post("/model/load", json={"path": str(path)})
        assert response.status_code == 200
        assert response.json()["model_loaded"] is True

    def test_missing_model_file_maps_to_400(self, client):
        response = client.post("/model/load", json={"path": "/no/such/file.json"})
        assert response.status_code == 400
        assert "not found" in response.json()["detail"]

    def test_preloaded_from_config(self, tmp_path, tiny_corpus):
        docs = [(tokenize(clean(t, POST_PRESET)), l) for l, t in LABELED_ROWS]
        model_path = tmp_path / "model.json"
        index_path = tmp_path / "index.json"
        save_model(train(docs), model_path)
        save_index(build_index(tiny_corpus, bins=4), index_path)
        app = create_app(PipelineConfig(model_path=str(model_path),
                                        index_path=str(index_path)))
        data = TestClient(app).get("/health").json()
        assert data["model_loaded"] is True
        assert data["index_loaded"] is True


class TestTrainEndpoint:
    def test_alias_variant_and_counts(self, client):
        response = client.post("/train", json={"docs": TRAIN_DOCS,
                                               "variant": "mnb"})
        assert response.status_code == 200
        data = response.json()
        assert data["variant"] == "multinomial"
        assert data["documents"] == [4, 4]
        assert data["vocabulary_size"] > 0

    def test_single_class_maps_to_400(self, client):
        docs = [{"text": "nice day", "label": 0}]
        response = client.post("/train", json={"docs": docs})
        assert response.status_code == 400

    def test_save_path_writes_the_model(self, client, tmp_path):
        path = tmp_path / "m.json"
        response = client.post("/train", json={"docs": TRAIN_DOCS,
                                               "save_path": str(path)})
        assert response.status_code == 200
        assert response.json()["saved_to"] == str(path)
        assert json.loads(path.read_text())["format"] == "postscan-nb-model"


class TestClean:
    def test_post_preset(self, client):
        response = client.post("/clean", json={
            "text": "@joe I LOVE this!! http://x.co #fun 2023"
        })
        assert response.status_code == 200
        data = response.json()
        assert data["cleaned"] == "love fun"
        assert data["tokens"] == ["love", "fun"]

    def test_unknown_preset_maps_to_400(self, client):
        response = client.post("/clean", json={"text": "x", "preset": "fancy"})
        assert response.status_code == 400


class TestCaption:
    def test_b64_ppm(self, trained_client, index_file):
        trained_client.post("/index/load", json={"path": str(index_file)})
        response = trained_client.post("/caption", json={
            "image_b64": ppm_b64(solid_image(1, 1, 1))
        })
        assert response.status_code == 200
        assert response.json()["caption"]

    def test_without_index_maps_to_400(self, client):
        response = client.post("/caption", json={
            "image_b64": ppm_b64(solid_image(1, 1, 1))
        })
        assert response.status_code == 400
        assert "index" in response.json()["detail"]

    def test_no_image_given_maps_to_400(self, trained_client, index_file):
        trained_client.post("/index/load", json={"path": str(index_file)})
        response = trained_client.post("/caption", json={})
        assert response.status_code == 400

    def test_garbage_b64_maps_to_400(self, trained_client, index_file):
        trained_client.post("/index/load", json={"path": str(index_file)})
        response = trained_client.post("/caption", json={"image_b64": "@@@"})
        assert response.status_code == 400


class TestClassify:
    def test_text_posts(self, trained_client):
        posts = [{"id": "a", "text": "shoot up the school"},
                 {"id": "b", "text": "lovely day at the park"}]
        response = trained_client.post("/classify", json={"posts": posts})
        assert response.status_code == 200
        verdicts = response.json()["verdicts"]
        assert [v["id"] for v in verdicts] == ["a", "b"]
        assert verdicts[0]["label"] == 1
        assert verdicts[1]["label"] == 0
        assert verdicts[0]["generated_caption"] is None

    def test_without_model_maps_to_400(self, client):
        response = client.post("/classify", json={
            "posts": [{"id": "a", "text": "x"}]
        })
        assert response.status_code == 400
        assert "model" in response.json()["detail"]

    def test_matches_in_process_batch(self, trained_client):
        texts = [t for _, t in LABELED_ROWS]
        posts_payload = [{"id": f"p{i}", "text": t} for i, t in enumerate(texts)]
        response = trained_client.post("/classify", json={"posts": posts_payload})
        served = response.json()["verdicts"]

        docs = [(tokenize(clean(t, POST_PRESET)), l) for l, t in LABELED_ROWS]
        model = train(docs, variant="cnb")
        local = batch_classify(
            [Post(id=f"p{i}", text=t) for i, t in enumerate(texts)],
            None, model, PipelineConfig(),
        )
        assert [v["label"] for v in served] == [v.label for v in local]
        assert [v["score"] for v in served] == [v.score for v in local]
        assert [v["fused_text"] for v in served] == [v.fused_text for v in local]

    def test_image_post_with_index(self, trained_client, index_file):
        trained_client.post("/index/load", json={"path": str(index_file)})
        posts = [{"id": "img", "image_b64": ppm_b64(solid_image(1, 1, 1))}]
        response = trained_client.post("/classify", json={"posts": posts})
        assert response.status_code == 200
        verdict = response.json()["verdicts"][0]
        assert verdict["generated_caption"]
        assert verdict["fused_text"]

    def test_threshold_override(self, trained_client):
        posts = [{"id": "a", "text": "shoot up the school with my gun"}]
        relaxed = trained_client.post("/classify", json={"posts": posts}).json()
        strict = trained_client.post("/classify", json={
            "posts": posts, "threshold": 1.0
        }).json()
        assert relaxed["verdicts"][0]["label"] == 1
        assert strict["verdicts"][0]["label"] == 0

    def test_out_of_range_threshold_is_422(self, trained_client):
        response = trained_client.post("/classify", json={
            "posts": [{"id": "a", "text": "x"}], "threshold": 2.0
        })
        assert response.status_code == 422

    def test_malformed_body_is_422(self, trained_client):
        response = trained_client.post("/classify", json={"posts": "nope"})
        assert response.status_code == 422


class TestBleuEndpoint:
    def test_perfect_pair(self, client):
        response = client.post("/bleu", json={
            "pairs": [{"candidate": "a dog runs",
                       "references": ["a dog runs"]}]
        })
        assert response.status_code == 200
        data = response.json()
        assert data["bleu1"] == 1.0
        assert data["bleu2"] == 1.0
        assert data["brevity_penalty"] == 1.0

    def test_cleaning_is_applied_before_scoring(self, client):
        # case and punctuation differences disappear under the caption preset
        response = client.post("/bleu", json={
            "pairs": [{"candidate": "A DOG runs!!", "references": ["a dog runs"]}]
        })
        assert response.json()["bleu1"] == 1.0

    def test_empty_pairs_maps_to_400(self, client):
        response = client.post("/bleu", json={"pairs": []})
        assert response.status_code == 400


class TestEvaluateEndpoint:
    def test_counts_and_auc(self, client):
        response = client.post("/evaluate", json={
            "gold": [1, 1, 0, 0],
            "predicted": [1, 0, 0, 0],
            "scores": [0.9, 0.4, 0.6, 0.2],
        })
        assert response.status_code == 200
        data = response.json()
        assert data["confusion"] == {"tp": 1, "fp": 0, "tn": 2, "fn": 1}
        assert data["auc"] == 0.75

    def test_length_mismatch_maps_to_400(self, client):
        response = client.post("/evaluate", json={
            "gold": [1, 0], "predicted": [1]
        })
        assert response.status_code == 400

    def test_bad_labels_map_to_400(self, client):
        response = client.post("/evaluate", json={
            "gold": [1, 2], "predicted": [1, 0]
        })
        assert response.status_code == 400
