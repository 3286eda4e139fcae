"""End-to-end smoke of the compiled module against the bundled fixtures."""

import os

import numpy as np
import pytest

import lpalign

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "..", "data", "fixtures")


def fixture(*parts: str) -> str:
    return os.path.join(FIXTURES, *parts)


def load_rotation():
    src_tokens, src = lpalign.load_embeddings(fixture("rotation", "src.vec"))
    tgt_tokens, tgt = lpalign.load_embeddings(fixture("rotation", "tgt.vec"))
    train = lpalign.load_lexicon(fixture("rotation", "train.tsv"), src_tokens, tgt_tokens)
    test = lpalign.load_lexicon(fixture("rotation", "test.tsv"), src_tokens, tgt_tokens)
    return src, tgt, train, test


def test_embeddings_round_trip(tmp_path):
    tokens, mat = lpalign.load_embeddings(fixture("rotation", "src.vec"))
    assert len(tokens) == mat.shape[0] == 500
    assert mat.shape[1] == 10
    out = str(tmp_path / "copy.vec")
    lpalign.save_embeddings(out, tokens, mat)
    tokens2, mat2 = lpalign.load_embeddings(out)
    assert tokens2 == tokens
    np.testing.assert_allclose(mat2, mat, atol=1e-6)


def test_normalize_unit_rows():
    rng = np.random.default_rng(0)
    mat = rng.normal(size=(40, 6))
    unit = lpalign.normalize(mat, "unit")
    np.testing.assert_allclose(np.linalg.norm(unit, axis=1), 1.0, atol=1e-12)


def test_knn_graph_matches_numpy():
    rng = np.random.default_rng(1)
    pts = rng.normal(size=(60, 5))
    ids, dists = lpalign.knn_graph(pts, k=4)
    assert ids.shape == (60, 4)
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
    np.fill_diagonal(d2, np.inf)
    want = np.argsort(d2, axis=1, kind="stable")[:, :4]
    np.testing.assert_array_equal(ids, want)
    np.testing.assert_allclose(dists, np.sqrt(np.take_along_axis(d2, ids, 1)), rtol=1e-12)


def test_lle_weights_sum_to_one():
    rng = np.random.default_rng(2)
    pts = rng.normal(size=(80, 6))
    _, w, loss = lpalign.lle_weights(pts, k=5)
    np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-9)
    assert loss >= 0.0


def test_align_recovers_planted_rotation(tmp_path):
    src, tgt, train, test = load_rotation()
    res = lpalign.train_align(
        src, tgt, train, preprocess="none", learning_rate=0.5, epochs=150, patience=0
    )
    p1 = lpalign.precision_at_k(res["map"], src, tgt, test, method="nn", k=1)
    assert p1 >= 0.95
    # checkpoint round trip preserves the exact weights
    path = str(tmp_path / "map.bin")
    lpalign.save_map(path, res["map"])
    np.testing.assert_array_equal(lpalign.load_map(path), res["map"])
    # the log walks epoch 0 .. final with finite losses
    assert res["log"][0]["epoch"] == 0
    assert all(np.isfinite(e["l_mse"]) for e in res["log"])


def test_align_is_deterministic():
    src, tgt, train, _ = load_rotation()
    kwargs = dict(preprocess="none", learning_rate=0.5, epochs=40, patience=0, seed=3)
    a = lpalign.train_align(src, tgt, train, **kwargs)
    b = lpalign.train_align(src, tgt, train, **kwargs)
    np.testing.assert_array_equal(a["map"], b["map"])


def test_retrieve_identity_self_match():
    rng = np.random.default_rng(3)
    pts = lpalign.normalize(rng.normal(size=(30, 4)), "unit")
    eye = np.eye(4)
    for q in range(5):
        assert lpalign.retrieve(eye, pts, pts, q, method="nn", topk=1) == [q]


def test_task_regularizer_runs_and_is_deterministic():
    tokens, emb = lpalign.load_embeddings(fixture("task", "embeddings.vec"))
    index = {t: i for i, t in enumerate(tokens)}
    names = ["entailment", "neutral", "contradiction"]

    def read_pairs(name):
        s1, s2, labels = [], [], []
        with open(fixture("task", name)) as fh:
            for line in fh:
                a, b, y = line.split("\t")
                s1.append(emb[index[a]])
                s2.append(emb[index[b]])
                labels.append(names.index(y.strip()))
        return np.array(s1), np.array(s2), labels

    tr1, tr2, try_ = read_pairs("train_pairs.tsv")
    te1, te2, tey = read_pairs("test_pairs.tsv")
    kwargs = dict(
        label_names=names,
        hidden=[16],
        epochs=40,
        learning_rate=0.005,
        batch_size=20,
        k=5,
        subset_size=40,
        folds=2,
        seed=1,
    )
    run = lpalign.train_task(tr1, tr2, try_, te1, te2, tey, variant="mse_lpl", **kwargs)
    assert 0.0 <= run["mean"] <= 1.0
    assert len(run["folds"]) == 2
    assert run["min_clipped_term"] >= -1.0
    again = lpalign.train_task(tr1, tr2, try_, te1, te2, tey, variant="mse_lpl", **kwargs)
    assert again["folds"] == run["folds"]


def test_metrics_helpers():
    assert lpalign.accuracy([1, 2, 0], [1, 2, 1]) == pytest.approx(2 / 3)
    assert lpalign.pearson([1.0, 2.0, 3.0], [2.0, 4.0, 6.0]) == pytest.approx(1.0)


def test_errors_surface_as_python_exceptions(tmp_path):
    with pytest.raises(lpalign.ConfigError):
        lpalign.knn_graph(np.zeros((3, 2)), k=5)  # k too large
    with pytest.raises(lpalign.ParseError):
        bad = tmp_path / "bad.vec"
        bad.write_text("2 3\none 0.1 0.2 0.3\ntwo 0.1 0.2\n")
        lpalign.load_embeddings(str(bad))
    assert issubclass(lpalign.ConfigError, ValueError)
