"""Dataset CSV I/O and seeded synthetic two-class generators."""

from __future__ import annotations

import csv

import numpy as np

from .network import LabeledSpectrumDataset


class DatasetParseError(ValueError):
    pass


def read_dataset(path, name: str | None = None) -> LabeledSpectrumDataset:
    """Read ``label,f0,f1,...`` rows; errors name the offending line."""
    feats, labels = [], []
    width = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip() != "label":
            raise DatasetParseError(f"{path}: line 1: expected header starting with 'label'")
        width = len(header) - 1
        if width < 2:
            raise DatasetParseError(f"{path}: line 1: need at least two feature columns")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width + 1:
                raise DatasetParseError(f"{path}: line {lineno}: expected {width + 1} fields, got {len(row)}")
            try:
                label = int(row[0])
                x = [float(c) for c in row[1:]]
            except ValueError:
                raise DatasetParseError(f"{path}: line {lineno}: non-numeric field") from None
            if label not in (0, 1):
                raise DatasetParseError(f"{path}: line {lineno}: label must be 0 or 1, got {label}")
            if any(v < 0 or not np.isfinite(v) for v in x):
                raise DatasetParseError(f"{path}: line {lineno}: features must be finite and non-negative")
            feats.append(x)
            labels.append(label)
    if not labels:
        raise DatasetParseError(f"{path}: no examples")
    return LabeledSpectrumDataset(np.array(feats), np.array(labels), name=name or str(path))


def write_dataset(ds: LabeledSpectrumDataset, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label"] + [f"f{i}" for i in range(ds.feature_count)])
        for x, y in zip(ds.features, ds.labels):
            w.writerow([int(y)] + [repr(float(v)) for v in x])


def _stroke(img, r0, c0, r1, c1, width, value):
    """Draw an anti-aliased segment on an 8x8 canvas (max blend)."""
    rr, cc = np.mgrid[0:8, 0:8]
    p = np.stack([rr, cc], -1).astype(float)
    a = np.array([r0, c0], float)
    b = np.array([r1, c1], float)
    ab = b - a
    t = np.clip(((p - a) @ ab) / max(ab @ ab, 1e-12), 0.0, 1.0)
    d = np.linalg.norm(p - (a + t[..., None] * ab), axis=-1)
    np.maximum(img, value * np.clip(1.0 - (d - width / 2.0), 0.0, 1.0), out=img)


def digits_like(n: int = 360, seed: int = 0) -> LabeledSpectrumDataset:
    """8x8 images of '0' (ellipse) and '1' (near-vertical bar) with random
    position, size, slant and stroke intensity; 0..16 grey levels,
    flattened row-major to 64 features."""
    rng = np.random.default_rng(seed)
    feats = np.zeros((n, 64))
    labels = np.arange(n) % 2
    rng.shuffle(labels)
    for i, y in enumerate(labels):
        img = np.zeros((8, 8))
        value = rng.uniform(10.0, 16.0)
        width = rng.uniform(0.8, 1.4)
        if y == 0:
            cr, cc = 3.5 + rng.normal(0, 0.3), 3.5 + rng.normal(0, 0.4)
            ar, ac = rng.uniform(2.8, 3.4), rng.uniform(1.8, 2.6)
            th = np.linspace(0, 2 * np.pi, 25)
            pts = np.stack([cr + ar * np.sin(th), cc + ac * np.cos(th)], -1)
            for (r0, c0), (r1, c1) in zip(pts[:-1], pts[1:]):
                _stroke(img, r0, c0, r1, c1, width, value)
        else:
            c = 3.5 + rng.normal(0, 0.5)
            slant = rng.normal(0, 0.5)
            _stroke(img, 0.3, c + slant, 7.0, c - slant, width, value)
            if rng.random() < 0.4:  # serif
                _stroke(img, 7.0, c - slant - 1.2, 7.0, c - slant + 1.2, 0.8, 0.7 * value)
        img += rng.uniform(0.0, 1.0, img.shape) * (rng.random(img.shape) < 0.1)
        feats[i] = np.round(np.clip(img, 0.0, 16.0)).ravel()
    # guarantee every image has at least one lit pixel
    feats[feats.max(axis=1) == 0, 27] = 16.0
    return LabeledSpectrumDataset(feats, labels, name="digits-like")


def drones_like(n: int = 200, seed: int = 0, bins: int = 256) -> LabeledSpectrumDataset:
    """Power spectra of two emitter types: OFDM-like plateaus with a
    type-specific channel position and pilot comb, over a noise floor."""
    rng = np.random.default_rng(seed)
    x = np.arange(bins, dtype=float)
    feats = np.zeros((n, bins))
    labels = np.arange(n) % 2
    rng.shuffle(labels)
    for i, y in enumerate(labels):
        floor = rng.exponential(0.02, bins) + 0.01
        if y == 0:
            centre, width, pitch = 0.30 * bins, 0.16 * bins, 9
        else:
            centre, width, pitch = 0.68 * bins, 0.12 * bins, 6
        centre += rng.normal(0, 0.02 * bins)
        width *= rng.uniform(0.85, 1.15)
        edge = 1.0 / (1.0 + np.exp((np.abs(x - centre) - width / 2.0) / 1.5))
        comb = 1.0 + 0.5 * (np.mod(x - centre, pitch) < 1.0)
        s = rng.uniform(0.6, 1.0) * edge * comb * rng.gamma(8.0, 1 / 8.0, bins)
        feats[i] = s + floor
    return LabeledSpectrumDataset(feats, labels, name="drones-like")


SYNTHETIC = {"digits-like": digits_like, "drones-like": drones_like}
DEFAULT_SCALE = {"digits-like": -14.0, "drones-like": -20.0}
