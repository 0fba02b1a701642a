"""Broadcast-RF-programmable vortex MTJ chains: device model, chain response,
programming protocol, multi-tone encoding, two-chain classifier and
write-energy scaling."""

__version__ = "0.1.0"

from .chain import Chain, ChainConfig, chain_sensitivity, delta_spectrum, density_map, multi_tone_response
from .device import DeviceParams, Polarity, PulseSpec, apply_pulse, rectification, resonance_frequency, switching_band
from .encoding import EncodingParams, S21Table, WaveformSpec, dbm_to_mw, encode_features, mw_to_dbm, tone_frequencies
from .network import LabeledSpectrumDataset, Network, accuracy, exhaustive_search, local_search, predict
from .programming import BandMap, ProgrammingTable, PulseSequence, calibration_sweep, execute, extract_table, plan_sequence, readout_config

__all__ = [
    "BandMap",
    "Chain",
    "ChainConfig",
    "DeviceParams",
    "EncodingParams",
    "LabeledSpectrumDataset",
    "Network",
    "Polarity",
    "ProgrammingTable",
    "PulseSequence",
    "PulseSpec",
    "S21Table",
    "WaveformSpec",
    "accuracy",
    "apply_pulse",
    "calibration_sweep",
    "chain_sensitivity",
    "dbm_to_mw",
    "delta_spectrum",
    "density_map",
    "encode_features",
    "exhaustive_search",
    "execute",
    "extract_table",
    "local_search",
    "multi_tone_response",
    "mw_to_dbm",
    "plan_sequence",
    "predict",
    "readout_config",
    "rectification",
    "resonance_frequency",
    "switching_band",
    "tone_frequencies",
]
