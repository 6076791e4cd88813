import json
import math
import random

import numpy as np
import pytest

from postscan.corpus import BENIGN, CONCERNING
from postscan.errors import DataError
from postscan.nbayes import (
    canonical_variant,
    load_model,
    model_from_dict,
    model_to_dict,
    predict,
    predict_batch,
    save_model,
    train,
)

TINY = [
    (["gun", "shoot"], 1),
    (["gun"], 1),
    (["love", "cat"], 0),
]


# --- independent oracle: literal evaluation of the smoothing formulas,
# no shared code with the implementation ---


def oracle_log_scores(docs, variant, alpha, query):
    labels = sorted({label for _, label in docs})
    vocab = sorted({t for tokens, _ in docs for t in tokens})
    n_docs = len(docs)
    scores = {}
    for c in labels:
        prior = sum(1 for _, l in docs if l == c) / n_docs
        s = math.log(prior)
        if variant == "multinomial":
            class_tokens = [t for tokens, l in docs if l == c for t in tokens]
            denom = len(class_tokens) + alpha * len(vocab)
            for t in query:
                if t not in vocab:
                    continue
                s += math.log((class_tokens.count(t) + alpha) / denom)
        elif variant == "complement":
            comp_tokens = [t for tokens, l in docs if l != c for t in tokens]
            denom = len(comp_tokens) + alpha * len(vocab)
            for t in query:
                if t not in vocab:
                    continue
                s -= math.log((comp_tokens.count(t) + alpha) / denom)
        elif variant == "bernoulli":
            class_docs = [set(tokens) for tokens, l in docs if l == c]
            present = set(query)
            for t in vocab:
                theta = (sum(1 for d in class_docs if t in d) + alpha) / (
                    len(class_docs) + 2 * alpha
                )
                s += math.log(theta if t in present else 1.0 - theta)
        else:
            raise AssertionError(variant)
        scores[c] = s
    return scores


def random_micro_corpus(rng):
    vocab_size = rng.randrange(2, 9)
    vocab = [f"w{i}" for i in range(vocab_size)]
    n_docs = rng.randrange(2, 7)
    while True:
        docs = []
        for _ in range(n_docs):
            length = rng.randrange(0, 5)
            docs.append(([rng.choice(vocab) for _ in range(length)],
                         rng.randrange(2)))
        labels = {l for _, l in docs}
        if labels == {0, 1} and any(tokens for tokens, _ in docs):
            return docs


class TestWorkedExample:
    def test_theta_values(self):
        model = train(TINY, variant="multinomial", alpha=1.0)
        i_gun = model.vocab.index["gun"]
        # counts: positive class saw gun twice over 3 tokens, |V| = 4
        theta_pos = math.exp(model._log_like[1, i_gun])
        theta_neg = math.exp(model._log_like[0, i_gun])
        assert abs(theta_pos - 3 / 7) < 1e-12
        assert abs(theta_neg - 1 / 6) < 1e-12

    def test_log_scores_for_single_token_doc(self):
        model = train(TINY, variant="multinomial", alpha=1.0)
        p = predict(model, ["gun"])
        assert p.log_scores[1] == pytest.approx(math.log(2 / 3) + math.log(3 / 7),
                                                abs=1e-12)
        assert p.log_scores[0] == pytest.approx(math.log(1 / 3) + math.log(1 / 6),
                                                abs=1e-12)
        assert round(p.log_scores[1], 3) == -1.253
        assert round(p.log_scores[0], 3) == -2.890
        assert p.label == CONCERNING

    def test_huge_alpha_flattens_likelihoods(self):
        model = train(TINY, variant="multinomial", alpha=1e6)
        theta = np.exp(model._log_like)
        np.testing.assert_allclose(theta, 1 / 4, atol=1e-4)


class TestOracleEquivalence:
    @pytest.mark.parametrize("variant", ["multinomial", "complement", "bernoulli"])
    def test_500_random_micro_corpora(self, variant):
        rng = random.Random(2024)
        for _ in range(500):
            docs = random_micro_corpus(rng)
            alpha = rng.choice([0.5, 1.0, 2.0])
            model = train(docs, variant=variant, alpha=alpha)
            query_vocab = [t for tokens, _ in docs for t in tokens]
            query = [rng.choice(query_vocab) for _ in range(rng.randrange(0, 5))]
            want = oracle_log_scores(docs, variant, alpha, query)
            got = predict(model, query).log_scores
            assert got[0] == pytest.approx(want[0], abs=1e-9)
            assert got[1] == pytest.approx(want[1], abs=1e-9)


class TestModelInvariants:
    def test_multinomial_likelihoods_sum_to_one_per_class(self):
        rng = random.Random(5)
        for _ in range(20):
            docs = random_micro_corpus(rng)
            model = train(docs, variant="multinomial", alpha=1.0)
            sums = np.exp(model._log_like).sum(axis=1)
            np.testing.assert_allclose(sums, 1.0, atol=1e-9)

    def test_bernoulli_probabilities_strictly_inside_unit_interval(self):
        rng = random.Random(6)
        for _ in range(20):
            docs = random_micro_corpus(rng)
            model = train(docs, variant="bernoulli", alpha=1.0)
            a = model.alpha
            docs_col = np.asarray(model.doc_counts).reshape(2, 1)
            theta = (model.counts + a) / (docs_col + 2 * a)
            assert (theta > 0).all() and (theta < 1).all()

    def test_priors_exponentiate_to_doc_fractions(self):
        model = train(TINY, variant="complement", alpha=1.0)
        np.testing.assert_allclose(np.exp(model.log_priors), [1 / 3, 2 / 3],
                                   atol=1e-12)

    @pytest.mark.parametrize("variant", ["multinomial", "complement", "bernoulli"])
    def test_doubling_corpus_and_alpha_is_score_invariant(self, variant):
        # doubling the corpus alone strengthens the counts against a fixed
        # alpha and can flip near-tie labels; doubling alpha with it keeps
        # every smoothed ratio, hence every score, exactly the same
        rng = random.Random(77)
        for _ in range(50):
            docs = random_micro_corpus(rng)
            m1 = train(docs, variant=variant, alpha=1.0)
            m2 = train(docs + docs, variant=variant, alpha=2.0)
            query_vocab = [t for tokens, _ in docs for t in tokens]
            for _ in range(5):
                query = [rng.choice(query_vocab)
                         for _ in range(rng.randrange(0, 4))]
                p1, p2 = predict(m1, query), predict(m2, query)
                assert p1.label == p2.label
                np.testing.assert_allclose(p1.log_scores, p2.log_scores,
                                           atol=1e-12)

    def test_training_is_bit_deterministic(self):
        a = train(TINY, variant="bernoulli", alpha=1.0)
        b = train(TINY, variant="bernoulli", alpha=1.0)
        assert json.dumps(model_to_dict(a)) == json.dumps(model_to_dict(b))


class TestPredict:
    def test_empty_doc_decided_by_priors(self):
        model = train(TINY, variant="multinomial", alpha=1.0)
        p = predict(model, [])
        assert p.score == pytest.approx(2 / 3)
        assert p.label == CONCERNING

    def test_oov_only_doc_equals_empty_doc(self):
        model = train(TINY, variant="multinomial", alpha=1.0)
        assert predict(model, ["zebra", "quux"]) == predict(model, [])

    def test_equal_priors_tie_goes_benign(self):
        docs = [(["a"], 1), (["b"], 0)]
        model = train(docs, variant="multinomial", alpha=1.0)
        p = predict(model, [])
        assert p.score == pytest.approx(0.5)
        assert p.label == BENIGN

    def test_class_probabilities_sum_to_one(self):
        model = train(TINY, variant="bernoulli", alpha=1.0)
        p = predict(model, ["gun", "cat"])
        s0, s1 = p.log_scores
        total = math.exp(s0) + math.exp(s1)
        assert p.score == pytest.approx(math.exp(s1) / total)

    def test_threshold_is_strict(self):
        docs = [(["a"], 1), (["b"], 0)]
        model = train(docs, variant="multinomial", alpha=1.0)
        p = predict(model, ["a"], threshold=predict(model, ["a"]).score)
        assert p.label == BENIGN  # equal to threshold is not above it

    def test_threshold_range_checked(self):
        model = train(TINY, variant="multinomial", alpha=1.0)
        with pytest.raises(DataError):
            predict(model, ["gun"], threshold=1.5)

    def test_batch_matches_elementwise(self):
        model = train(TINY, variant="complement", alpha=1.0)
        docs = [["gun"], ["love", "cat"], []]
        assert predict_batch(model, docs) == [predict(model, d) for d in docs]

    def test_batch_empty(self):
        model = train(TINY, variant="complement", alpha=1.0)
        assert predict_batch(model, []) == []


class TestTrainValidation:
    def test_single_class_rejected(self):
        with pytest.raises(DataError, match="both classes"):
            train([(["a"], 1), (["b"], 1)], variant="multinomial")

    def test_empty_corpus_rejected(self):
        with pytest.raises(DataError):
            train([], variant="multinomial")

    def test_alpha_must_be_positive(self):
        with pytest.raises(DataError, match="alpha"):
            train(TINY, variant="multinomial", alpha=0.0)

    def test_bad_label_rejected(self):
        with pytest.raises(DataError, match="label"):
            train([(["a"], 1), (["b"], 5)], variant="multinomial")

    def test_unknown_variant(self):
        with pytest.raises(DataError, match="variant"):
            train(TINY, variant="gaussian")

    def test_aliases_resolve(self):
        assert canonical_variant("MNB") == "multinomial"
        assert canonical_variant("cnb") == "complement"
        assert canonical_variant("bnb") == "bernoulli"
        assert train(TINY, variant="cnb").variant == "complement"

    def test_weight_normalize_only_for_complement(self):
        with pytest.raises(DataError, match="complement"):
            train(TINY, variant="multinomial", weight_normalize=True)

    def test_weight_normalization_keeps_labels_on_mirrored_corpus(self):
        # both weight rows have equal norms here, so rescaling preserves
        # the sign of every margin; on lopsided corpora the per-class
        # rescale can legitimately move a near-tie decision
        docs = [(["gun", "shoot"], 1), (["ball", "park"], 0)]
        plain = train(docs, variant="complement")
        normed = train(docs, variant="complement", weight_normalize=True)
        for doc in (["gun"], ["park"], ["gun", "ball"], ["shoot", "shoot"]):
            assert predict(plain, doc).label == predict(normed, doc).label

    def test_weight_normalization_changes_scores(self):
        plain = train(TINY, variant="complement")
        normed = train(TINY, variant="complement", weight_normalize=True)
        assert predict(normed, ["gun"]).score != predict(plain, ["gun"]).score


class TestSerialization:
    def test_round_trip_is_lossless(self):
        model = train(TINY, variant="bernoulli", alpha=0.75)
        clone = model_from_dict(model_to_dict(model))
        assert model_to_dict(clone) == model_to_dict(model)
        for doc in ([], ["gun"], ["love", "cat"], ["gun", "gun"]):
            assert predict(clone, doc) == predict(model, doc)

    def test_saved_files_are_byte_identical(self, tmp_path):
        model = train(TINY, variant="complement", alpha=1.0)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save_model(model, a)
        save_model(model, b)
        assert a.read_bytes() == b.read_bytes()

    def test_load_rejects_wrong_format(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"format": "something-else"}), encoding="utf-8")
        with pytest.raises(DataError, match="format"):
            load_model(path)

    def test_load_rejects_wrong_version(self, tmp_path):
        model = train(TINY, variant="complement")
        data = model_to_dict(model)
        data["version"] = 99
        path = tmp_path / "m.json"
        path.write_text(json.dumps(data), encoding="utf-8")
        with pytest.raises(DataError, match="version"):
            load_model(path)

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            load_model(tmp_path / "missing.json")

    def test_alpha_precision_survives(self, tmp_path):
        model = train(TINY, variant="multinomial", alpha=0.1 + 0.2)
        path = tmp_path / "m.json"
        save_model(model, path)
        assert load_model(path).alpha == model.alpha
