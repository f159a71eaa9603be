"""Smoke tests for the python bindings."""

import math
import os

import pytest

import hctagger as hct


def test_version():
    assert hct.__version__.startswith("hctagger")


def test_longest_match_and_opcodes():
    assert hct.find_longest_match("shies", "shoes") == (0, 0, 2)
    ops = hct.compute_opcodes("shies", "shoes")
    assert ops == [
        ("equal", 0, 2, 0, 2),
        ("replace", 2, 3, 2, 3),
        ("equal", 3, 5, 3, 5),
    ]


def test_extract_apply_roundtrip():
    tags = hct.extract_tags("shies", "shoes")
    assert tags[0] == ("K", "")
    assert tags[3] == ("R", "o")
    assert hct.apply_tags("shies", tags) == "shoes"

    pairs = [("cassueldress", "casual dress"), ("", "abc"), ("abc", ""), ("naïve", "naive")]
    for src, tgt in pairs:
        assert hct.apply_tags(src, hct.extract_tags(src, tgt)) == tgt


def test_vocabulary_build_save_load(tmp_path):
    tsv = tmp_path / "pairs.tsv"
    tsv.write_text("shies\tshoes\nshies\tshoes\nab\tabx\n", encoding="utf-8")
    vocab = hct.Vocabulary.build_from_tsv(str(tsv), min_freq=1)
    assert len(vocab) == 4  # K, D, Replace(o), Append(x)
    assert vocab.tag(0) == ("K", "")
    assert vocab.tag(1) == ("D", "")
    assert "R:o" in vocab.labels()

    ids = vocab.encode("shies", "shoes")
    assert ids[0] == 0 and ids.count(0) == 5
    oov = vocab.encode("x", "qqq")  # Replace("qqq") unseen
    assert oov[1] < 0

    path = tmp_path / "tags.vocab"
    vocab.save(str(path))
    reloaded = hct.Vocabulary.load(str(path))
    assert reloaded.labels() == vocab.labels()


def test_grad_check_passes():
    report = hct.grad_check(seed=11)
    assert report["passed"]
    assert report["lm_max_rel_error"] <= 1e-4
    assert report["tagger_max_rel_error"] <= 1e-4


@pytest.fixture(scope="module")
def toy_model(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("toy")
    data = tmp / "toy.tsv"
    hct.generate_synthetic_corpus(str(data), n=60, error_rate=1.0, seed=5)

    vocab_path = tmp / "toy.vocab"
    vocab = hct.Vocabulary.build_from_tsv(str(data))
    vocab.save(str(vocab_path))

    lm_path = tmp / "toy.lm"
    lm_info = hct.pretrain_lm(str(data), str(lm_path), embed_dim=8, hidden=12, epochs=2, seed=3)
    assert math.isfinite(lm_info["heldout_perplexity"])

    model_path = tmp / "toy.ckpt"
    result = hct.train(
        str(data),
        str(data),
        str(vocab_path),
        str(lm_path),
        str(model_path),
        h_tag=24,
        batch=8,
        lr=1e-2,
        epochs=300,
        patience=300,
        seed=4,
    )
    assert result["best_dev_accuracy"] >= 0.9
    return str(model_path), str(data)


def test_train_and_correct(toy_model):
    model_path, data = toy_model
    corrector = hct.Corrector.load(model_path)

    with open(data, encoding="utf-8") as fh:
        src, tgt = fh.readline().rstrip("\n").split("\t")
    assert corrector.correct(src) == tgt

    detail = corrector.correct_detailed(src)
    assert detail["output"] == tgt
    assert detail["iterations"] == 1
    assert detail["changed"] == (src != tgt)

    metrics = corrector.evaluate(data)
    assert metrics["exact_match_accuracy"] >= 0.9
    assert 0.0 <= metrics["tag_accuracy"] <= 1.0
    assert len(metrics["coarse_confusion"]) == 4
