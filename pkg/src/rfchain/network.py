"""Two-chain RF perceptron: reference-subtracted readout, prediction, and
search over the binary configurations of both chains."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chain import Chain, ChainConfig, multi_tone_response, subset_sums
from .device import Polarity, rectification
from .encoding import EncodingParams, encode_features, tone_powers

SEARCH_CAP = 12


@dataclass(frozen=True)
class Network:
    chain0: Chain
    chain1: Chain
    ref0: ChainConfig | None = None
    ref1: ChainConfig | None = None
    noise_sigma: float = 0.0  # uV

    def __post_init__(self):
        # alternating references, device 1 Up on chain 0
        if self.ref0 is None:
            object.__setattr__(self, "ref0", ChainConfig(tuple((j + 1) % 2 for j in range(len(self.chain0)))))
        if self.ref1 is None:
            object.__setattr__(self, "ref1", ChainConfig(tuple(j % 2 for j in range(len(self.chain1)))))
        if len(self.ref0) != len(self.chain0) or len(self.ref1) != len(self.chain1):
            raise ValueError("reference configs must match chain sizes")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")

    @property
    def chains(self):
        return (self.chain0, self.chain1)

    @property
    def refs(self):
        return (self.ref0, self.ref1)

    def to_dict(self) -> dict:
        return {
            "chain0": self.chain0.to_dict(),
            "chain1": self.chain1.to_dict(),
            "ref0": str(self.ref0),
            "ref1": str(self.ref1),
            "noise_sigma": self.noise_sigma,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Network":
        return cls(
            Chain.from_dict(d["chain0"]),
            Chain.from_dict(d["chain1"]),
            ChainConfig.from_string(d["ref0"]) if d.get("ref0") else None,
            ChainConfig.from_string(d["ref1"]) if d.get("ref1") else None,
            float(d.get("noise_sigma", 0.0)),
        )


@dataclass(frozen=True)
class LabeledSpectrumDataset:
    features: np.ndarray  # (E, T), non-negative
    labels: np.ndarray  # (E,), 0/1
    name: str = "dataset"

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels).astype(np.int64)
        if x.ndim != 2 or y.shape != (x.shape[0],):
            raise ValueError("features must be (E, T) with one label per example")
        if np.any(x < 0):
            raise ValueError("features must be non-negative")
        if np.any((y != 0) & (y != 1)):
            raise ValueError("labels must be 0 or 1")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    def __len__(self):
        return self.labels.size

    @property
    def feature_count(self) -> int:
        return self.features.shape[1]


def chain_deltas(net: Network, cfg0: ChainConfig, cfg1: ChainConfig, waveform, rng: np.random.Generator | None = None):
    """(dV0, dV1) in uV: each chain's output minus its reference output."""
    dv = []
    for chain, cfg, ref in zip(net.chains, (cfg0, cfg1), net.refs):
        dv.append(multi_tone_response(chain, cfg, waveform) - multi_tone_response(chain, ref, waveform))
    if net.noise_sigma > 0:
        if rng is None:
            raise ValueError("a random source is required when noise_sigma > 0")
        dv = [v + rng.normal(0.0, net.noise_sigma) for v in dv]
    return dv[0], dv[1]


def decide(dv0, dv1):
    """Class 1 only when chain 1 is strictly higher; ties go to class 0."""
    return (np.asarray(dv1) > np.asarray(dv0)).astype(np.int64)


def predict(net: Network, cfg0: ChainConfig, cfg1: ChainConfig, waveform, rng=None) -> int:
    dv0, dv1 = chain_deltas(net, cfg0, cfg1, waveform, rng)
    return int(decide(dv0, dv1))


def accuracy(
    net: Network,
    cfg0: ChainConfig,
    cfg1: ChainConfig,
    dataset: LabeledSpectrumDataset,
    encoding: EncodingParams,
    repeats: int = 1,
    rng: np.random.Generator | None = None,
):
    """Mean and std of whole-dataset accuracy over independent repeats
    (fresh phases and readout noise each time)."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    rng = np.random.default_rng(0) if rng is None else rng
    accs = []
    for _ in range(repeats):
        correct = 0
        for x, y in zip(dataset.features, dataset.labels):
            w = encode_features(x, encoding.scale, encoding.s21, encoding.f_min, encoding.f_max, rng=rng)
            correct += predict(net, cfg0, cfg1, w, rng) == y
        accs.append(correct / len(dataset))
    return float(np.mean(accs)), float(np.std(accs))


# -------------------------------------------------------------------- search


def device_contributions(chain: Chain, dataset: LabeledSpectrumDataset, encoding: EncodingParams) -> np.ndarray:
    """Per-example, per-device, per-state output (uV): shape (E, N, 2)."""
    freqs, levels = tone_powers(dataset.features, encoding.scale, encoding.s21, encoding.f_min, encoding.f_max)
    with np.errstate(under="ignore"):
        mw = np.where(np.isfinite(levels), np.power(10.0, levels / 10.0), 0.0)  # (E, T)
    out = np.empty((len(dataset), len(chain), 2))
    for j, dev in enumerate(chain.devices):
        for s in (Polarity.DOWN, Polarity.UP):
            out[:, j, s] = mw @ rectification(dev, s, freqs)
    return out


def reference_terms(contrib: np.ndarray, ref: ChainConfig) -> np.ndarray:
    """Per-device terms of dV relative to ``ref``: zero where the state equals the ref."""
    r = ref.as_array()
    diff = contrib[..., 1] - contrib[..., 0]  # (E, N)
    return np.stack([diff * (0 - r), diff * (1 - r)], axis=-1)


def config_voltages(contrib: np.ndarray, ref: ChainConfig) -> np.ndarray:
    """dV for every configuration of one chain, shape (E, 2**N)."""
    return subset_sums(reference_terms(contrib, ref))


def pair_voltages(terms: np.ndarray, cfg: ChainConfig) -> np.ndarray:
    """dV of one chain in ``cfg`` for each example, from reference terms (E, N, 2)."""
    b = cfg.as_array()
    picked = terms[:, np.arange(b.size), b]
    acc = np.zeros(terms.shape[0])
    for j in range(b.size):
        acc = acc + picked[:, j]
    return acc


@dataclass
class SearchResult:
    best_cfg0: ChainConfig
    best_cfg1: ChainConfig
    best_accuracy: float
    accuracy_hist: dict = field(default_factory=dict)  # accuracy value -> number of pairs
    dv_hist: dict = field(default_factory=dict)  # class -> {"edges", "counts"}
    method: str = "exhaustive"
    evaluated_pairs: int = 0

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "best_cfg0": str(self.best_cfg0),
            "best_cfg1": str(self.best_cfg1),
            "best_accuracy": self.best_accuracy,
            "evaluated_pairs": self.evaluated_pairs,
            "accuracy_histogram": {
                "accuracy": [float(a) for a in self.accuracy_hist],
                "pairs": [int(c) for c in self.accuracy_hist.values()],
            },
            "dv_histograms": {str(k): {"edges": [float(e) for e in v["edges"]], "counts": [int(c) for c in v["counts"]]} for k, v in self.dv_hist.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def dv_histograms(dv: np.ndarray, labels: np.ndarray, bins: int = 40) -> dict:
    """Histograms of dV0 - dV1 per class on shared edges."""
    lo, hi = float(dv.min()), float(dv.max())
    if hi <= lo:
        lo, hi = lo - 1.0, hi + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    return {c: {"edges": edges, "counts": np.histogram(dv[labels == c], bins=edges)[0]} for c in (0, 1)}


def _finish(net, dataset, encoding, t0, t1, cfg0, cfg1, acc, acc_hist, method, evaluated):
    dv = pair_voltages(t0, cfg0) - pair_voltages(t1, cfg1)
    res = SearchResult(cfg0, cfg1, acc, acc_hist, dv_histograms(dv, dataset.labels), method, evaluated)
    return res


def exhaustive_search(
    net: Network,
    dataset: LabeledSpectrumDataset,
    encoding: EncodingParams,
    cap: int = SEARCH_CAP,
    n_jobs: int = 1,
    block: int = 256,
) -> SearchResult:
    """Accuracy of every (cfg0, cfg1) pair, noise-free.

    Each chain's dV for all its configurations comes from per-device terms by
    additive composition; correctness counts accumulate per block of chain-0
    configurations, so the table does not depend on ``n_jobs``.
    """
    n0, n1 = len(net.chain0), len(net.chain1)
    if max(n0, n1) > cap:
        raise ValueError(f"chains of {n0}/{n1} devices exceed the exhaustive cap {cap}; use local_search")
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    t0 = reference_terms(device_contributions(net.chain0, dataset, encoding), net.ref0)
    t1 = reference_terms(device_contributions(net.chain1, dataset, encoding), net.ref1)
    v0 = subset_sums(t0)  # (E, 2**n0)
    v1 = subset_sums(t1)
    counts = pair_counts(v0, v1, dataset.labels, n_jobs=n_jobs, block=block)
    k = int(np.argmax(counts))
    a, b = divmod(k, counts.shape[1])
    cfg0, cfg1 = ChainConfig.from_index(a, n0), ChainConfig.from_index(b, n1)
    best = counts[a, b] / len(dataset)
    tally = np.bincount(counts.ravel(), minlength=len(dataset) + 1)
    acc_hist = {c / len(dataset): int(m) for c, m in enumerate(tally) if m}
    check = evaluate_pair(net, cfg0, cfg1, dataset, encoding)
    if check != best:
        raise RuntimeError(f"fast path reported {best} for the best pair but direct evaluation gives {check}")
    return _finish(net, dataset, encoding, t0, t1, cfg0, cfg1, float(best), acc_hist, "exhaustive", counts.size)


def pair_counts(v0: np.ndarray, v1: np.ndarray, labels: np.ndarray, n_jobs: int = 1, block: int = 256) -> np.ndarray:
    """Number of correctly classified examples for every (cfg0, cfg1)."""
    E, K0 = v0.shape
    K1 = v1.shape[1]
    if E >= 2 ** 31:
        raise ValueError("dataset too large for 32-bit counters")
    counts = np.zeros((K0, K1), dtype=np.int32)
    y1 = labels.astype(bool)

    def run(lo):
        hi = min(lo + block, K0)
        part = np.zeros((hi - lo, K1), dtype=np.int32)
        for e in range(E):
            a = v0[e, lo:hi, None]
            b = v1[e, None, :]
            part += (b > a) if y1[e] else (b <= a)
        counts[lo:hi] = part

    starts = range(0, K0, block)
    if n_jobs == 1:
        for s in starts:
            run(s)
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            list(pool.map(run, starts))
    return counts


def local_search(
    net: Network,
    dataset: LabeledSpectrumDataset,
    encoding: EncodingParams,
    seed: int,
    restarts: int = 8,
    starts=None,
) -> SearchResult:
    """Steepest-ascent single-bit-flip hill climbing over both chains, with
    random restarts (or the explicit ``starts`` list of (cfg0, cfg1))."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    n0, n1 = len(net.chain0), len(net.chain1)
    t0 = reference_terms(device_contributions(net.chain0, dataset, encoding), net.ref0)
    t1 = reference_terms(device_contributions(net.chain1, dataset, encoding), net.ref1)
    y = dataset.labels
    E = len(dataset)
    evaluated = 0

    def score(bits):
        nonlocal evaluated
        evaluated += 1
        dv0 = pair_voltages(t0, ChainConfig.from_array(bits[:n0]))
        dv1 = pair_voltages(t1, ChainConfig.from_array(bits[n0:]))
        return int(np.sum(decide(dv0, dv1) == y))

    rng = np.random.default_rng(seed)
    if starts is None:
        starts = [rng.integers(0, 2, n0 + n1).astype(np.int8) for _ in range(restarts)]
    else:
        starts = [np.concatenate([a.as_array(), b.as_array()]) for a, b in starts]

    best_bits, best_score = None, -1
    for bits in starts:
        bits = bits.copy()
        cur = score(bits)
        while True:
            gains = []
            for j in range(bits.size):
                bits[j] ^= 1
                gains.append(score(bits))
                bits[j] ^= 1
            j = int(np.argmax(gains))
            if gains[j] <= cur:
                break
            bits[j] ^= 1
            cur = gains[j]
        if cur > best_score:
            best_bits, best_score = bits.copy(), cur
    cfg0 = ChainConfig.from_array(best_bits[:n0])
    cfg1 = ChainConfig.from_array(best_bits[n0:])
    return _finish(net, dataset, encoding, t0, t1, cfg0, cfg1, best_score / E, {best_score / E: 1}, "greedy", evaluated)


def evaluate_pair(net: Network, cfg0: ChainConfig, cfg1: ChainConfig, dataset: LabeledSpectrumDataset, encoding: EncodingParams) -> float:
    """Noise-free accuracy by direct per-example evaluation (no fast path)."""
    correct = 0
    for x, y in zip(dataset.features, dataset.labels):
        w = encode_features(x, encoding.scale, encoding.s21, encoding.f_min, encoding.f_max, rng=np.random.default_rng(0))
        dv0, dv1 = chain_deltas(net, cfg0, cfg1, w)
        correct += int(decide(dv0, dv1)) == y
    return correct / len(dataset)
