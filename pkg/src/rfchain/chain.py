"""Series chain of vortex MTJs on a shared strip line."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .device import DeviceParams, Polarity, rectification

DENSITY_CAP = 20


@dataclass(frozen=True)
class Chain:
    devices: tuple
    name: str = "chain"

    def __post_init__(self):
        object.__setattr__(self, "devices", tuple(self.devices))
        ids = [d.id for d in self.devices]
        if ids != list(range(1, len(ids) + 1)):
            raise ValueError(f"device ids must be 1..N in order, got {ids}")
        fc = [d.f_center for d in self.devices]
        if any(b < a for a, b in zip(fc, fc[1:])):
            warnings.warn(f"chain {self.name!r}: f_center decreases with device index", stacklevel=2)

    def __len__(self) -> int:
        return len(self.devices)

    def to_dict(self) -> dict:
        return {"name": self.name, "devices": [d.to_dict() for d in self.devices]}

    @classmethod
    def from_dict(cls, d) -> "Chain":
        # a bare list of devices is also a valid chain file
        if isinstance(d, list):
            return cls(tuple(DeviceParams.from_dict(x) for x in d))
        return cls(tuple(DeviceParams.from_dict(x) for x in d["devices"]), name=d.get("name", "chain"))


@dataclass(frozen=True)
class ChainConfig:
    """Binary weights of a chain. Text form: '1' = Up, leftmost = device 1."""

    bits: tuple

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(Polarity(b) for b in self.bits))

    @classmethod
    def from_string(cls, s: str) -> "ChainConfig":
        return cls(tuple(Polarity.from_char(c) for c in s.strip()))

    @classmethod
    def all_down(cls, n: int) -> "ChainConfig":
        return cls((Polarity.DOWN,) * n)

    @classmethod
    def all_up(cls, n: int) -> "ChainConfig":
        return cls((Polarity.UP,) * n)

    @classmethod
    def from_array(cls, a) -> "ChainConfig":
        return cls(tuple(int(x) for x in np.asarray(a).ravel()))

    @classmethod
    def from_index(cls, k: int, n: int) -> "ChainConfig":
        """Config whose device j (0-based) is Up iff bit j of ``k`` is set."""
        return cls(tuple((k >> j) & 1 for j in range(n)))

    def index(self) -> int:
        return sum(int(b) << j for j, b in enumerate(self.bits))

    def as_array(self) -> np.ndarray:
        return np.array([int(b) for b in self.bits], dtype=np.int8)

    def flip(self, j: int) -> "ChainConfig":
        bits = list(self.bits)
        bits[j] = bits[j].opposite
        return ChainConfig(tuple(bits))

    def __len__(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return "".join(str(int(b)) for b in self.bits)


@dataclass(frozen=True)
class ResponseSpectrum:
    freqs: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.freqs, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if f.shape != v.shape:
            raise ValueError("freqs and values must have equal lengths")
        if f.size > 1 and np.any(np.diff(f) <= 0):
            raise ValueError("freqs must be strictly increasing")
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "values", v)


def _check(chain: Chain, cfg: ChainConfig):
    if len(cfg) != len(chain):
        raise ValueError(f"config length {len(cfg)} does not match chain size {len(chain)}")


def chain_sensitivity(chain: Chain, cfg: ChainConfig, f):
    """Direct sum of every device's rectification (uV/mW)."""
    _check(chain, cfg)
    total = 0.0
    for dev, p in zip(chain.devices, cfg.bits):
        total = total + rectification(dev, p, f)
    return total


def delta_spectrum(chain: Chain, cfg: ChainConfig, reference: ChainConfig, freqs) -> ResponseSpectrum:
    freqs = np.asarray(freqs, dtype=float)
    values = chain_sensitivity(chain, cfg, freqs) - chain_sensitivity(chain, reference, freqs)
    return ResponseSpectrum(freqs, np.broadcast_to(values, freqs.shape).copy())


def device_responses(chain: Chain, freqs) -> np.ndarray:
    """Per-device, per-state sensitivities, shape (2, N, F); axis 0 is Polarity."""
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    out = np.empty((2, len(chain), freqs.size))
    for j, dev in enumerate(chain.devices):
        out[0, j] = rectification(dev, Polarity.DOWN, freqs)
        out[1, j] = rectification(dev, Polarity.UP, freqs)
    return out


def device_signatures(chain: Chain, freqs) -> np.ndarray:
    """Up-minus-Down contribution of each device, shape (N, F)."""
    r = device_responses(chain, freqs)
    return r[1] - r[0]


def all_config_bits(n: int) -> np.ndarray:
    """Bit matrix (2**n, n); row k is ChainConfig.from_index(k, n)."""
    k = np.arange(2 ** n, dtype=np.int64)[:, None]
    return ((k >> np.arange(n)) & 1).astype(np.int8)


def subset_sums(terms: np.ndarray) -> np.ndarray:
    """All 2**N subset sums of ``terms`` (..., N, 2): entry k sums
    terms[..., j, bit_j(k)] over j, in increasing j.

    Built by doubling, so each sum has a fixed evaluation order and a term
    that is exactly zero contributes nothing.
    """
    terms = np.asarray(terms, dtype=float)
    acc = np.zeros(terms.shape[:-2] + (1,))
    for j in range(terms.shape[-2]):
        acc = np.concatenate([acc + terms[..., j, 0:1], acc + terms[..., j, 1:2]], axis=-1)
    return acc


def config_responses(chain: Chain, freqs) -> np.ndarray:
    """Absolute sensitivity of all 2**N configs, shape (2**N, F), composed
    from per-device, per-state values."""
    resp = device_responses(chain, freqs)  # (2, N, F)
    terms = np.moveaxis(resp, (0, 1, 2), (2, 1, 0))  # (F, N, 2)
    return subset_sums(terms).T


def config_deltas(chain: Chain, freqs, reference: ChainConfig | None = None) -> np.ndarray:
    """Delta spectra of all 2**N configs vs ``reference`` (default all-Down),
    shape (2**N, F), via per-device additive composition."""
    n = len(chain)
    ref = ChainConfig.all_down(n) if reference is None else reference
    _check(chain, ref)
    sig = device_signatures(chain, freqs)  # (N, F)
    r = ref.as_array()
    # term for device j in state b: sig_j * (b - ref_j); the ref state gives 0
    terms = np.stack([sig * (0 - r)[:, None], sig * (1 - r)[:, None]], axis=-1)  # (N, F, 2)
    terms = np.moveaxis(terms, 1, 0)  # (F, N, 2)
    return subset_sums(terms).T


@dataclass(frozen=True)
class DensityMap:
    freqs: np.ndarray
    edges: np.ndarray
    counts: np.ndarray  # (F, B)


def histogram_columns(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Per-column histogram of ``values`` (K, F); out-of-range values land in the end bins."""
    nb = edges.size - 1
    idx = np.clip(np.searchsorted(edges, values, side="right") - 1, 0, nb - 1)
    counts = np.zeros((values.shape[1], nb), dtype=np.int64)
    for i in range(values.shape[1]):
        counts[i] = np.bincount(idx[:, i], minlength=nb)
    return counts


def density_map(chain: Chain, freqs, edges=None, bins: int = 100, cap: int = DENSITY_CAP, method: str = "fast") -> DensityMap:
    """Counts of all 2**N delta-spectrum values (vs all-Down) per frequency."""
    n = len(chain)
    if n > cap:
        raise ValueError(f"chain of {n} devices exceeds exhaustive cap {cap}; use sampling instead")
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    if method == "fast":
        values = config_deltas(chain, freqs)
    elif method == "direct":
        ref = ChainConfig.all_down(n)
        values = np.array([delta_spectrum(chain, ChainConfig.from_index(k, n), ref, freqs).values for k in range(2 ** n)])
    else:
        raise ValueError(f"unknown method {method!r}")
    if edges is None:
        lo, hi = float(values.min()), float(values.max())
        if hi <= lo:
            lo, hi = lo - 1.0, hi + 1.0
        edges = np.linspace(lo, hi, bins + 1)
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("bin edges must be strictly increasing with at least two entries")
    return DensityMap(freqs, edges, histogram_columns(values, edges))


def multi_tone_response(chain: Chain, cfg: ChainConfig, waveform) -> float:
    """dc output (uV) for a multi-tone input; phase-insensitive, linear in power."""
    _check(chain, cfg)
    freqs = np.asarray(waveform.freqs, dtype=float)
    if freqs.size == 0:
        return 0.0
    if np.any(freqs <= 0):
        raise ValueError("tone frequencies must be positive")
    return float(np.sum(chain_sensitivity(chain, cfg, freqs) * waveform.mw))
