import json

import numpy as np
import pytest

from cssim.corpus import Corpus, generate_corpus, random_fingerprint, synth_image
from cssim.fingerprint import Image, write_pgm


def test_deterministic_and_distinct():
    a = generate_corpus(4, 5, 7, side=64)
    b = generate_corpus(4, 5, 7, side=64)
    assert a.images == b.images
    assert a.roles == ["db"] * 5 + ["benign"] * 7
    assert len(set(a.fingerprints)) == 12


def test_images_leave_edit_headroom():
    img = synth_image(np.random.default_rng(0))
    assert img.width == img.height == 256
    assert 32 <= img.pixels.min() and img.pixels.max() <= 223


def test_write_load_round_trip(tmp_path):
    c = generate_corpus(2, 2, 3, side=32)
    c.write(tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["counts"] == {"db": 2, "benign": 3}
    back = Corpus.load(tmp_path)
    assert back.images == c.images and back.roles == c.roles
    assert back.db_fingerprints == c.fingerprints[:2]


def test_load_detects_tampering(tmp_path):
    c = generate_corpus(2, 1, 1, side=32)
    c.write(tmp_path)
    write_pgm(tmp_path / "img00000.pgm", Image(np.zeros((32, 32), np.uint8)))
    with pytest.raises(ValueError):
        Corpus.load(tmp_path)


def test_random_fingerprint_spans_64_bits():
    rng = np.random.default_rng(1)
    vals = [random_fingerprint(rng).value for _ in range(2000)]
    assert max(vals) >= 1 << 63 and any(v & 1 for v in vals)
