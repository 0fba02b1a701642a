"""Multi-tone RF encoding of feature vectors, S21 correction and dBm arithmetic."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

F_MIN = 240.0
F_MAX = 600.0


class EncodingError(ValueError):
    pass


def dbm_to_mw(x):
    out = np.power(10.0, np.asarray(x, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def mw_to_dbm(p):
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise ValueError("power in mW must be positive")
    out = 10.0 * np.log10(p)
    return float(out) if out.ndim == 0 else out


def tone_frequencies(n: int, f_min: float = F_MIN, f_max: float = F_MAX) -> np.ndarray:
    if n < 2:
        raise ValueError("need at least two tones")
    if not f_min < f_max:
        raise ValueError("f_min must be below f_max")
    i = np.arange(n, dtype=float)
    return f_min + i * (f_max - f_min) / (n - 1)


@dataclass(frozen=True)
class S21Table:
    freqs: np.ndarray
    db: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.freqs, dtype=float)
        d = np.asarray(self.db, dtype=float)
        if f.ndim != 1 or f.shape != d.shape:
            raise ValueError("S21 table needs matching 1-D freq and dB columns")
        if f.size < 2:
            raise ValueError("S21 table needs at least two samples")
        if np.any(np.diff(f) <= 0):
            raise ValueError("S21 frequencies must be strictly increasing")
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "db", d)

    @classmethod
    def flat(cls, db: float = 0.0, f_min: float = 1.0, f_max: float = 1e4) -> "S21Table":
        return cls(np.array([f_min, f_max]), np.array([db, db]))

    @classmethod
    def from_csv(cls, path) -> "S21Table":
        freqs, db = [], []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["freq_mhz", "db"]:
                raise ValueError(f"{path}: expected header 'freq_mhz,db'")
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                try:
                    f, d = (float(x) for x in row)
                except ValueError:
                    raise ValueError(f"{path}: line {lineno}: expected two numbers, got {row!r}") from None
                freqs.append(f)
                db.append(d)
        return cls(np.array(freqs), np.array(db))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["freq_mhz", "db"])
            for f, d in zip(self.freqs, self.db):
                w.writerow([repr(float(f)), repr(float(d))])


def s21_lookup(s21: S21Table, f):
    """Linear interpolation in dB; queries outside the table clamp to the end values."""
    out = np.interp(np.asarray(f, dtype=float), s21.freqs, s21.db)
    return float(out) if np.ndim(out) == 0 else out


def mean_s21(*tables: S21Table) -> S21Table:
    """Average of several S21 tables on the union of their sample grids."""
    grid = np.unique(np.concatenate([t.freqs for t in tables]))
    return S21Table(grid, np.mean([s21_lookup(t, grid) for t in tables], axis=0))


@dataclass(frozen=True)
class WaveformSpec:
    freqs: np.ndarray
    dbm: np.ndarray
    phases: np.ndarray
    source: str = ""
    scale: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        for name in ("freqs", "dbm", "phases"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (self.freqs.shape == self.dbm.shape == self.phases.shape):
            raise ValueError("tone arrays must have equal lengths")

    @property
    def mw(self) -> np.ndarray:
        return dbm_to_mw(self.dbm) if self.dbm.size else np.zeros(0)

    def __len__(self) -> int:
        return self.freqs.size

    @classmethod
    def empty(cls) -> "WaveformSpec":
        return cls(np.zeros(0), np.zeros(0), np.zeros(0))

    def scaled(self, db: float) -> "WaveformSpec":
        return WaveformSpec(self.freqs, self.dbm + db, self.phases, self.source, self.scale + db, self.seed)

    def to_dict(self) -> dict:
        return {
            "tones": [
                {"freq_mhz": float(f), "dbm": float(p), "phase_rad": float(ph)}
                for f, p, ph in zip(self.freqs, self.dbm, self.phases)
            ],
            "metadata": {"source": self.source, "scale_dbm": self.scale, "seed": self.seed},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WaveformSpec":
        tones = d["tones"]
        meta = d.get("metadata", {})
        return cls(
            np.array([t["freq_mhz"] for t in tones], dtype=float),
            np.array([t["dbm"] for t in tones], dtype=float),
            np.array([t["phase_rad"] for t in tones], dtype=float),
            source=meta.get("source", ""),
            scale=meta.get("scale_dbm", 0.0),
            seed=meta.get("seed"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


@dataclass(frozen=True)
class EncodingParams:
    scale: float = -14.0  # dBm given to the strongest feature
    s21: S21Table = field(default_factory=S21Table.flat)
    f_min: float = F_MIN
    f_max: float = F_MAX


def tone_powers(features, scale: float, s21: S21Table, f_min: float = F_MIN, f_max: float = F_MAX):
    """Tone frequencies and levels (dBm, -inf for zero features) for a batch
    of feature rows (E, T). Each row is normalised to its own maximum."""
    x = np.atleast_2d(np.asarray(features, dtype=float))
    if np.any(x < 0):
        raise EncodingError("features must be non-negative")
    peak = x.max(axis=1)
    if np.any(peak <= 0):
        raise EncodingError("all-zero feature vector cannot be encoded")
    freqs = tone_frequencies(x.shape[1], f_min, f_max)
    with np.errstate(divide="ignore"):
        levels = scale + 10.0 * np.log10(x / peak[:, None]) + s21_lookup(s21, freqs)[None, :]
    return freqs, levels


def encode_features(
    features,
    scale: float,
    s21: S21Table | None = None,
    f_min: float = F_MIN,
    f_max: float = F_MAX,
    rng: np.random.Generator | None = None,
    source: str = "",
    seed: int | None = None,
) -> WaveformSpec:
    """Frequency-multiplexed waveform: tone power proportional to feature value,
    corrected by S21, with a random phase per tone. Zero features emit no tone."""
    x = np.asarray(features, dtype=float)
    if x.ndim != 1:
        raise EncodingError("encode_features takes a single feature vector")
    s21 = S21Table.flat() if s21 is None else s21
    if rng is None:
        rng = np.random.default_rng(seed)
    freqs, levels = tone_powers(x, scale, s21, f_min, f_max)
    levels = levels[0]
    phases = rng.uniform(0.0, 2.0 * np.pi, size=freqs.size)
    keep = x > 0
    return WaveformSpec(freqs[keep], levels[keep], phases[keep], source=source, scale=scale, seed=seed)
