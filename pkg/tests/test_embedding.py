"""Hash embedder determinism (including cross-process) and cosine cases."""

from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from groundtrack.embedding import (
    HashingEmbedder,
    check_embedding,
    cosine_similarity,
    embed_texts,
)
from groundtrack.model import EMBED_DIM, ValidationError


def test_dimension_is_384():
    vecs = HashingEmbedder().embed(["a small dog"])
    assert vecs.shape == (1, EMBED_DIM) == (1, 384)
    assert vecs.dtype == np.float32


def test_identical_strings_identical_vectors():
    embedder = HashingEmbedder()
    a, b = embedder.embed(["the person walks", "the person walks"])
    assert np.array_equal(a, b)


def test_norms_within_tolerance():
    texts = ["a", "two words", "many many words repeated words words", "Uppercase MIX"]
    for row in embed_texts(texts, HashingEmbedder()):
        assert abs(float(np.linalg.norm(row.astype(np.float64))) - 1.0) <= 1e-6


def test_case_insensitive_tokenization():
    embedder = HashingEmbedder()
    a, b = embedder.embed(["A Dog Runs", "a dog runs"])
    assert np.array_equal(a, b)


def test_seed_changes_vectors():
    a = HashingEmbedder(seed=0).embed(["hello world"])
    b = HashingEmbedder(seed=1).embed(["hello world"])
    assert not np.array_equal(a, b)


def test_cross_process_bit_identical():
    code = (
        "import json\n"
        "from groundtrack.embedding import HashingEmbedder\n"
        "vec = HashingEmbedder().embed(['abc'])\n"
        "print(json.dumps(vec.tobytes().hex()))\n"
    )
    runs = [
        subprocess.run(
            [sys.executable, "-c", code], capture_output=True, text=True, check=True
        ).stdout
        for _ in range(2)
    ]
    assert runs[0] == runs[1]
    here = HashingEmbedder().embed(["abc"]).tobytes().hex()
    assert json.loads(runs[0]) == here


def test_empty_text_rejected():
    with pytest.raises(ValidationError):
        HashingEmbedder().embed([""])


def test_symbol_only_text_still_embeds():
    vec = HashingEmbedder().embed(["!!!"])
    assert abs(float(np.linalg.norm(vec[0].astype(np.float64))) - 1.0) <= 1e-6


class TestCosine:
    def test_identical_unit_vectors(self):
        v = np.zeros(8)
        v[0] = 1.0
        assert cosine_similarity(v, v) == 1.0

    def test_orthogonal_basis(self):
        e1, e2 = np.eye(8)[0], np.eye(8)[1]
        assert cosine_similarity(e1, e2) == 0.0

    def test_hand_case(self):
        a = np.zeros(8)
        a[:2] = 1.0
        b = np.zeros(8)
        b[0] = 1.0
        assert cosine_similarity(a, b) == pytest.approx(1 / np.sqrt(2), abs=1e-12)

    def test_symmetry_and_scale_invariance(self):
        rng = np.random.default_rng(8)
        a, b = rng.standard_normal(16), rng.standard_normal(16)
        assert cosine_similarity(a, b) == cosine_similarity(b, a)
        assert cosine_similarity(3.7 * a, b) == pytest.approx(
            cosine_similarity(a, b), abs=1e-12
        )

    def test_zero_vector_rejected(self):
        with pytest.raises(ValidationError):
            cosine_similarity(np.zeros(4), np.ones(4))


def test_check_embedding_validates():
    with pytest.raises(ValidationError):
        check_embedding(np.ones(100))
    with pytest.raises(ValidationError):
        check_embedding(np.ones(384) * np.inf)
    with pytest.raises(ValidationError):
        check_embedding(np.ones(384), normalized=True)
    check_embedding(np.ones(384) / np.sqrt(384), normalized=True)
