"""Synthetic grayscale corpora: smooth structured noise plus geometric shapes.

Images are deliberately low-contrast mid-gray scenes so that pixel edits
stay inside 0..255. Fingerprints within one corpus are forced distinct, which
makes ground truth ("is this a database image") identical to what the
exact-match pipeline sees.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fingerprint import Fingerprint, Image, compute_fingerprint, read_pgm, write_pgm

IMAGE_SIDE = 256
MANIFEST = "manifest.json"
MANIFEST_VERSION = 1


def _smooth_field(rng: np.random.Generator, side: int, cells: int, amplitude: float) -> np.ndarray:
    coarse = rng.normal(0.0, amplitude, size=(cells + 1, cells + 1))
    t = np.linspace(0, cells, side, endpoint=False)
    i = t.astype(int)
    f = t - i
    rows = coarse[i] * (1 - f)[:, None] + coarse[i + 1] * f[:, None]
    return rows[:, i] * (1 - f)[None, :] + rows[:, i + 1] * f[None, :]


def synth_image(rng: np.random.Generator, side: int = IMAGE_SIDE) -> Image:
    img = np.full((side, side), rng.uniform(100, 155), dtype=np.float32)
    img += _smooth_field(rng, side, 4, 5.0).astype(np.float32)
    for _ in range(rng.integers(2, 6)):
        cy, cx = rng.uniform(0, side, size=2)
        size = rng.uniform(side / 16, side / 4)
        level = rng.uniform(6, 16) * rng.choice([-1, 1])
        if rng.random() < 0.5:
            half_w = size * rng.uniform(0.4, 1.6)
            y0, y1 = int(max(0, np.ceil(cy - size))), int(min(side, np.ceil(cy + size)))
            x0, x1 = int(max(0, np.ceil(cx - half_w))), int(min(side, np.ceil(cx + half_w)))
            img[y0:y1, x0:x1] += level
        else:
            y0, y1 = int(max(0, cy - size)), int(min(side, cy + size + 1))
            x0, x1 = int(max(0, cx - size)), int(min(side, cx + size + 1))
            yy = np.arange(y0, y1, dtype=np.float32)[:, None] - cy
            xx = np.arange(x0, x1, dtype=np.float32)[None, :] - cx
            img[y0:y1, x0:x1] += level * (yy * yy + xx * xx < size * size)
    img += 8.0 * rng.standard_normal((side, side), dtype=np.float32)
    return Image(np.clip(np.rint(img), 0, 255).astype(np.uint8))


@dataclass
class Corpus:
    images: list
    roles: list  # "db" or "benign", parallel to images
    fingerprints: list = field(default_factory=list)

    def __post_init__(self):
        if not self.fingerprints:
            self.fingerprints = [compute_fingerprint(im) for im in self.images]

    def __len__(self):
        return len(self.images)

    def indices(self, role: str) -> list:
        return [i for i, r in enumerate(self.roles) if r == role]

    @property
    def db_fingerprints(self) -> list:
        return [self.fingerprints[i] for i in self.indices("db")]

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        entries = []
        for i, (img, role, fp) in enumerate(zip(self.images, self.roles, self.fingerprints)):
            name = f"img{i:05d}.pgm"
            write_pgm(out / name, img)
            entries.append({"file": name, "role": role, "fingerprint": str(fp)})
        manifest = {"version": MANIFEST_VERSION, "images": entries,
                    "counts": {"db": self.roles.count("db"), "benign": self.roles.count("benign")}}
        (out / MANIFEST).write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
        return out / MANIFEST

    @classmethod
    def load(cls, directory) -> Corpus:
        d = Path(directory)
        manifest = json.loads((d / MANIFEST).read_text())
        if manifest.get("version") != MANIFEST_VERSION:
            raise ValueError(f"unsupported manifest version {manifest.get('version')}")
        images, roles, fps = [], [], []
        for e in manifest["images"]:
            img = read_pgm(d / e["file"])
            fp = compute_fingerprint(img)
            if str(fp) != e["fingerprint"]:
                raise ValueError(f"{e['file']}: fingerprint does not match manifest")
            images.append(img)
            roles.append(e["role"])
            fps.append(fp)
        return cls(images, roles, fps)


def generate_corpus(seed: int, n_db: int, n_benign: int, side: int = IMAGE_SIDE) -> Corpus:
    """Deterministic corpus; the first ``n_db`` images are the database."""
    rng = np.random.default_rng(seed)
    images, fps, seen = [], [], set()
    while len(images) < n_db + n_benign:
        img = synth_image(rng, side)
        fp = compute_fingerprint(img)
        if fp in seen:
            continue
        seen.add(fp)
        images.append(img)
        fps.append(fp)
    roles = ["db"] * n_db + ["benign"] * n_benign
    return Corpus(images, roles, fps)


def random_fingerprint(rng) -> Fingerprint:
    return Fingerprint(int(rng.integers(0, 1 << 63)) << 1 | int(rng.integers(0, 2)))
