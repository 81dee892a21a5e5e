import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cssim.fingerprint import (
    Fingerprint,
    Image,
    ImageError,
    compute_fingerprint,
    hamming,
    make_visual_derivative,
    read_pgm,
    write_pgm,
)

cv2 = pytest.importorskip("cv2")


def _oracle_fp(px: np.ndarray) -> int:
    """Float bilinear resize via OpenCV, then the block rule."""
    small = cv2.resize(px.astype(np.float64), (64, 64), interpolation=cv2.INTER_LINEAR)
    blocks = small.reshape(8, 8, 8, 8).mean(axis=(1, 3))
    v = 0
    for bit in (blocks > small.mean()).ravel():
        v = v << 1 | int(bit)
    return v


def _oracle_derivative(px: np.ndarray) -> bytes:
    d = cv2.resize(px.astype(np.float64), (16, 16), interpolation=cv2.INTER_LINEAR)
    return np.floor(d + 0.5).astype(np.uint8).tobytes()


def test_constant_image_is_zero():
    assert compute_fingerprint(Image(np.full((40, 40), 77, np.uint8))).value == 0


def test_left_half_white():
    for h, w in ((64, 64), (100, 130), (8, 8)):
        px = np.zeros((h, w), np.uint8)
        px[:, : w // 2] = 255
        assert compute_fingerprint(Image(px)).value == 0xF0F0F0F0F0F0F0F0


def test_identical_images_identical_outputs():
    rng = np.random.default_rng(3)
    px = rng.integers(0, 256, (50, 70), dtype=np.uint8)
    a, b = Image(px), Image(px.copy())
    assert compute_fingerprint(a) == compute_fingerprint(b)
    assert make_visual_derivative(a) == make_visual_derivative(b)


def test_too_small_rejected():
    with pytest.raises(ImageError):
        Image(np.zeros((7, 20), np.uint8))


def test_derivative_examples():
    assert make_visual_derivative(Image(np.full((30, 50), 200, np.uint8))) == bytes([200]) * 256
    px = np.random.default_rng(1).integers(0, 256, (16, 16), dtype=np.uint8)
    assert make_visual_derivative(Image(px)) == px.tobytes()


def test_checkerboard_derivative():
    # period-2 checkerboard: every output sample averages a 0 and a 255 pair
    yy, xx = np.mgrid[:32, :32]
    px = np.where((yy + xx) % 2, 255, 0).astype(np.uint8)
    d = np.frombuffer(make_visual_derivative(Image(px)), np.uint8)
    assert np.all(np.abs(d.astype(int) - 128) <= 1)
    assert make_visual_derivative(Image(px)) == _oracle_derivative(px)


def test_hamming_examples():
    a = Fingerprint(0x0123456789ABCDEF)
    assert hamming(a, a) == 0
    assert hamming(a, Fingerprint(~a.value & (2**64 - 1))) == 64
    assert hamming(Fingerprint(0x01), Fingerprint(0x03)) == 1


def test_bit_order_msb_first_row_major():
    px = np.zeros((64, 64), np.uint8)
    px[:8, :8] = 255
    assert compute_fingerprint(Image(px)).value == 1 << 63
    assert compute_fingerprint(Image(px)).bits()[0, 0] == 1


def test_matches_opencv_oracle(demo_corpus):
    for img in demo_corpus.images[:200]:
        assert compute_fingerprint(img).value == _oracle_fp(img.pixels)
    for img in demo_corpus.images[:50]:
        assert make_visual_derivative(img) == _oracle_derivative(img.pixels)


@settings(max_examples=100, deadline=None)
@given(st.integers(8, 200), st.integers(8, 200), st.integers(0, 2**32 - 1))
def test_matches_opencv_oracle_any_size(h, w, seed):
    px = np.random.default_rng(seed).integers(0, 256, (h, w), dtype=np.uint8)
    assert compute_fingerprint(Image(px)).value == _oracle_fp(px)


def test_locality(demo_corpus):
    rng = np.random.default_rng(11)
    ok = 0
    for img in demo_corpus.images:
        px = img.pixels.copy()
        y, x = rng.integers(0, px.shape[0]), rng.integers(0, px.shape[1])
        px[y, x] = px[y, x] + 1 if px[y, x] < 255 else 254
        ok += hamming(compute_fingerprint(img), compute_fingerprint(Image(px))) <= 1
    assert len(demo_corpus.images) == 1000
    assert ok / 1000 >= 0.99


def test_fingerprint_bytes_round_trip():
    fp = Fingerprint(0xF0F0F0F0F0F0F0F1)
    assert fp.to_bytes() == bytes.fromhex("f0f0f0f0f0f0f0f1")
    assert Fingerprint.from_bytes(fp.to_bytes()) == fp
    assert Fingerprint.from_bits(fp.bits()) == fp
    assert str(fp) == "f0f0f0f0f0f0f0f1"


def test_pgm_round_trip(tmp_path):
    px = np.random.default_rng(2).integers(0, 256, (21, 34), dtype=np.uint8)
    write_pgm(tmp_path / "a.pgm", Image(px))
    data = (tmp_path / "a.pgm").read_bytes()
    assert data.startswith(b"P5\n34 21\n255\n")
    assert read_pgm(tmp_path / "a.pgm") == Image(px)


def test_pgm_with_comment(tmp_path):
    body = bytes(range(64))
    (tmp_path / "c.pgm").write_bytes(b"P5\n# made by hand\n8 8\n255\n" + body)
    assert read_pgm(tmp_path / "c.pgm").to_bytes() == body


def test_pgm_rejects_garbage(tmp_path):
    (tmp_path / "x.pgm").write_bytes(b"P2\n8 8\n255\n" + bytes(64))
    with pytest.raises(ImageError):
        read_pgm(tmp_path / "x.pgm")
