"""Command-line entry point: ``rfchain <command> ...``.

Exit codes: 0 ok, 1 verification failure, 2 usage, 3 parse,
4 calibration failure, 5 unreachable target.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import warnings
from pathlib import Path

import numpy as np

from . import artifacts
from .chain import Chain, ChainConfig, all_config_bits, delta_spectrum, density_map
from .datasets import DEFAULT_SCALE, SYNTHETIC, DatasetParseError, read_dataset, write_dataset
from .device import Polarity
from .encoding import F_MAX, F_MIN, EncodingParams, S21Table, dbm_to_mw, encode_features
from .network import Network, accuracy, exhaustive_search, local_search
from .presets import CHAIN_PRESETS, reference_chain, second_chain
from .programming import (
    READ_POWER,
    WRITE_POWERS,
    BandMap,
    CalibrationError,
    PlanningError,
    ProgrammingTable,
    ReadoutError,
    calibration_sweep,
    execute,
    execute_batch,
    extract_table,
    plan_sequence,
    readout_batch,
    readout_config,
)
from .scaling import EnergyAnchor, MaterialParams, scaling_table

EXIT_VERIFY, EXIT_USAGE, EXIT_PARSE, EXIT_CALIBRATION, EXIT_UNREACHABLE = 1, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, category: str, message: str, code: int):
        super().__init__(message)
        self.category = category
        self.code = code


def _usage(msg):
    return CliError("usage", msg, EXIT_USAGE)


def _parse(msg):
    return CliError("parse", msg, EXIT_PARSE)


# ------------------------------------------------------------------ loaders


def load_chain(spec: str) -> Chain:
    p = Path(spec)
    if not p.is_file():
        if spec in CHAIN_PRESETS:
            return CHAIN_PRESETS[spec]()
        raise _usage(f"no chain file or preset named {spec!r}")
    try:
        return Chain.from_dict(artifacts.read_json(p))
    except (ValueError, KeyError, TypeError) as e:
        raise _parse(f"{spec}: {e}") from None


def load_network(spec: str) -> Network:
    if spec == "reference-network" and not Path(spec).is_file():
        return Network(reference_chain(), second_chain())
    p = Path(spec)
    if not p.is_file():
        raise _usage(f"no network file or preset named {spec!r}")
    try:
        return Network.from_dict(artifacts.read_json(p))
    except (ValueError, KeyError, TypeError) as e:
        raise _parse(f"{spec}: {e}") from None


def _load(path, cls, what):
    try:
        return cls.from_dict(artifacts.read_json(path))
    except FileNotFoundError:
        raise _usage(f"{what} file {path} not found") from None
    except (ValueError, KeyError, TypeError) as e:
        raise _parse(f"{path}: {e}") from None


def bitstring(s: str, n: int | None = None) -> ChainConfig:
    if not re.fullmatch(r"[01]+", s or ""):
        raise _usage(f"invalid bitstring {s!r}: only '0' and '1' allowed")
    if n is not None and len(s) != n:
        raise _usage(f"bitstring {s!r} has {len(s)} bits, chain has {n}")
    return ChainConfig.from_string(s)


def load_dataset(args):
    if getattr(args, "make_synthetic", None):
        ds = SYNTHETIC[args.make_synthetic](seed=args.data_seed)
        return ds
    if not args.dataset:
        raise _usage("either --dataset or --make-synthetic is required")
    try:
        return read_dataset(args.dataset)
    except FileNotFoundError:
        raise _usage(f"dataset {args.dataset} not found") from None
    except DatasetParseError as e:
        raise _parse(str(e)) from None


def encoding_params(args) -> EncodingParams:
    scale = args.scale
    if scale is None:
        scale = DEFAULT_SCALE.get(getattr(args, "make_synthetic", None) or "", -14.0)
    s21 = S21Table.flat()
    if args.s21:
        tables = []
        for p in args.s21:
            try:
                tables.append(S21Table.from_csv(p))
            except FileNotFoundError:
                raise _usage(f"S21 file {p} not found") from None
            except ValueError as e:
                raise _parse(str(e)) from None
        if len(tables) > 1:
            from .encoding import mean_s21

            s21 = mean_s21(*tables)
        else:
            s21 = tables[0]
    return EncodingParams(scale=scale, s21=s21, f_min=args.fmin, f_max=args.fmax)


def grid(fmin, fmax, step):
    if step <= 0 or fmax < fmin:
        raise _usage("frequency grid needs step > 0 and fmax >= fmin")
    n = int(np.floor((fmax - fmin) / step + 1e-9)) + 1
    return fmin + step * np.arange(n)


def _params(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        # the worker count never changes results, so it stays out of the manifest
        if k in ("func", "jobs"):
            continue
        out[k] = v
    return out


def _write_manifest(args, out, inputs=()):
    artifacts.write_json(artifacts.manifest(args.command, _params(args), inputs, getattr(args, "seed", None)), artifacts.manifest_path(out))


# ----------------------------------------------------------------- commands


def cmd_calibrate(args):
    chain = load_chain(args.chain)
    rng = np.random.default_rng(args.seed)
    write = grid(args.fmin, args.fmax, args.step)
    read = grid(args.read_fmin, args.read_fmax, args.read_step)
    powers = [float(p) for p in args.powers]
    kw = dict(write_freqs=write, powers=powers, read_freqs=read, read_power=args.read_power)
    down = calibration_sweep(chain, rng, start=Polarity.DOWN, **kw)
    up = calibration_sweep(chain, rng, start=Polarity.UP, **kw)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, cmap in (("map_down_to_up.csv", down), ("map_up_to_down.csv", up)):
        rows = []
        for i, wf in enumerate(cmap.write_freqs):
            p = cmap.stitched_power[i]
            for rf, v in zip(cmap.read_freqs, cmap.stitched[i]):
                rows.append((float(wf), float(rf), "" if np.isnan(p) else artifacts.fmt(p), float(v)))
        artifacts.write_csv(out / name, ["write_freq_mhz", "read_freq_mhz", "power_dbm", "dv_uv"], rows)
    _write_manifest(args, out, [args.chain])
    try:
        table, bandmap = extract_table(down, up, n_devices=len(chain))
    except CalibrationError as e:
        raise CliError("calibration", str(e), EXIT_CALIBRATION) from None
    artifacts.write_json(table.to_dict(), out / "table.json")
    artifacts.write_json(bandmap.to_dict(), out / "bandmap.json")
    for r in table.rows:
        print(f"{r.id}\t{artifacts.fmt(r.freq_up_to_down)}\t{artifacts.fmt(r.freq_down_to_up)}\t{artifacts.fmt(r.power)}")


def cmd_program(args):
    chain = load_chain(args.chain)
    table = _load(args.table, ProgrammingTable, "table")
    bandmap = _load(args.bandmap, BandMap, "band map")
    if len(table) != len(chain):
        raise _usage(f"table has {len(table)} rows for a {len(chain)}-device chain")
    rng = np.random.default_rng(args.seed)
    n = len(chain)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.sweep_all:
        bits = all_config_bits(n)
        ok = 0
        failures = []
        for k in range(bits.shape[0]):
            target = ChainConfig.from_array(bits[k])
            try:
                seq = plan_sequence(table, bandmap, target)
            except PlanningError as e:
                failures.append({"target": str(target), "reason": str(e)})
                continue
            init = rng.integers(0, 2, (args.initial_states, n)).astype(np.int8)
            final = execute_batch(chain, init, seq, rng)
            try:
                got = readout_batch(chain, final)
            except ReadoutError as e:
                failures.append({"target": str(target), "reason": str(e)})
                continue
            hit = np.all(got == bits[k], axis=1)
            ok += int(hit.sum())
            if not hit.all():
                failures.append({"target": str(target), "reason": f"{int((~hit).sum())} initial states missed"})
        total = bits.shape[0] * args.initial_states
        summary = {"targets": int(bits.shape[0]), "initial_states": args.initial_states, "trials": total, "successes": ok, "success_rate": ok / total, "failures": failures}
        artifacts.write_json(summary, out / "sweep.json")
        _write_manifest(args, out, [args.chain, args.table, args.bandmap])
        print(f"{ok}/{total} trials succeeded ({100.0 * ok / total:.2f} %)")
        if ok != total:
            raise CliError("verification", f"{total - ok} trials failed", EXIT_VERIFY)
        return
    if not args.target:
        raise _usage("--target or --sweep-all is required")
    target = bitstring(args.target, n)
    if args.initial in (None, "random"):
        initial = ChainConfig.from_array(rng.integers(0, 2, n))
    else:
        initial = bitstring(args.initial, n)
    try:
        seq = plan_sequence(table, bandmap, target)
    except PlanningError as e:
        raise CliError("unreachable", str(e), EXIT_UNREACHABLE) from None
    final = execute(chain, initial, seq, rng)
    read = readout_config(chain, final)
    artifacts.write_json(seq.to_dict(), out / "sequence.json")
    result = {"target": str(target), "initial": str(initial), "final": str(final), "readout": str(read), "success": str(read) == str(target)}
    artifacts.write_json(result, out / "result.json")
    _write_manifest(args, out, [args.chain, args.table, args.bandmap])
    print(f"{initial} -> {read} ({'ok' if result['success'] else 'FAILED'})")
    if not result["success"]:
        raise CliError("verification", f"readout {read} differs from target {target}", EXIT_VERIFY)


def cmd_spectrum(args):
    chain = load_chain(args.chain)
    n = len(chain)
    cfg = bitstring(args.config, n)
    ref = bitstring(args.reference, n) if args.reference else ChainConfig.all_down(n)
    freqs = grid(args.fmin, args.fmax, args.step)
    spec = delta_spectrum(chain, cfg, ref, freqs)
    values = spec.values * (dbm_to_mw(args.read_power) if args.read_power is not None else 1.0)
    artifacts.write_csv(args.out, ["freq_mhz", "value"], zip(spec.freqs, values))
    _write_manifest(args, args.out, [args.chain])


def cmd_density_map(args):
    chain = load_chain(args.chain)
    freqs = grid(args.fmin, args.fmax, args.step)
    try:
        dm = density_map(chain, freqs, bins=args.bins, cap=args.cap)
    except ValueError as e:
        raise _usage(str(e)) from None
    rows = []
    for i, f in enumerate(dm.freqs):
        for b in range(dm.counts.shape[1]):
            rows.append((float(f), float(dm.edges[b]), float(dm.edges[b + 1]), int(dm.counts[i, b])))
    artifacts.write_csv(args.out, ["freq_mhz", "bin_lo", "bin_hi", "count"], rows)
    _write_manifest(args, args.out, [args.chain])


def cmd_encode(args):
    ds = load_dataset(args)
    enc = encoding_params(args)
    rng = np.random.default_rng(args.seed)
    waves = []
    for i, x in enumerate(ds.features):
        try:
            w = encode_features(x, enc.scale, enc.s21, enc.f_min, enc.f_max, rng=rng, source=f"{ds.name}[{i}]", seed=args.seed)
        except ValueError as e:
            raise _parse(f"example {i}: {e}") from None
        d = w.to_dict()
        d["label"] = int(ds.labels[i])
        waves.append(d)
    artifacts.write_json(waves, args.out)
    _write_manifest(args, args.out, [args.dataset] + list(args.s21 or []))


def cmd_make_synthetic(args):
    ds = SYNTHETIC[args.kind](seed=args.data_seed)
    write_dataset(ds, args.out)
    _write_manifest(args, args.out)


def cmd_train(args):
    net = load_network(args.network)
    ds = load_dataset(args)
    enc = encoding_params(args)
    if args.method == "exhaustive":
        try:
            res = exhaustive_search(net, ds, enc, n_jobs=args.jobs)
        except ValueError as e:
            raise _usage(str(e)) from None
    else:
        res = local_search(net, ds, enc, seed=args.seed, restarts=args.restarts)
    d = res.to_dict()
    d["dataset"] = ds.name
    artifacts.write_json(d, args.out)
    _write_manifest(args, args.out, [args.network, args.dataset] + list(args.s21 or []))
    print(f"{res.best_cfg0} {res.best_cfg1} accuracy={res.best_accuracy:.4f}")


def cmd_evaluate(args):
    net = load_network(args.network)
    if args.noise_uv is not None:
        net = Network(net.chain0, net.chain1, net.ref0, net.ref1, args.noise_uv)
    ds = load_dataset(args)
    enc = encoding_params(args)
    if args.result:
        r = artifacts.read_json(args.result)
        c0, c1 = r["best_cfg0"], r["best_cfg1"]
    elif args.cfg0 and args.cfg1:
        c0, c1 = args.cfg0, args.cfg1
    else:
        raise _usage("give --result or both --cfg0 and --cfg1")
    cfg0, cfg1 = bitstring(c0, len(net.chain0)), bitstring(c1, len(net.chain1))
    mean, std = accuracy(net, cfg0, cfg1, ds, enc, repeats=args.repeats, rng=np.random.default_rng(args.seed))
    out = {"dataset": ds.name, "cfg0": str(cfg0), "cfg1": str(cfg1), "repeats": args.repeats, "accuracy_mean": mean, "accuracy_std": std}
    artifacts.write_json(out, args.out)
    _write_manifest(args, args.out, [args.network, args.dataset, args.result] + list(args.s21 or []))
    print(f"accuracy = {100 * mean:.2f} +/- {100 * std:.2f} %")


def cmd_scaling(args):
    anchor = EnergyAnchor(args.f_ref, args.e_ref, args.p_ref, args.tau_ref)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        anchor.check()
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if args.freqs is not None:
        freqs = [float(f) for f in args.freqs.split(",") if f.strip()]
    else:
        freqs = list(grid(args.fmin, args.fmax, args.step))
    material = MaterialParams(alpha=args.alpha, Rc=args.rc, vc=args.vc)
    try:
        rows = scaling_table(anchor, freqs, material, anchor_d=args.anchor_d)
    except ValueError as e:
        raise _usage(str(e)) from None
    artifacts.write_csv(args.out, ["f_mhz", "p_dbm", "tau_ns", "e_pj", "h_t"], rows)
    _write_manifest(args, args.out)


# ------------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", message, EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rfchain", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def grid_flags(sp, fmin, fmax, step):
        sp.add_argument("--fmin", type=float, default=fmin)
        sp.add_argument("--fmax", type=float, default=fmax)
        sp.add_argument("--step", type=float, default=step)

    def data_flags(sp):
        sp.add_argument("--dataset", help="CSV with label,f0,f1,...")
        sp.add_argument("--make-synthetic", choices=sorted(SYNTHETIC), help="use a seeded synthetic dataset instead")
        sp.add_argument("--data-seed", type=int, default=0, help="seed of the synthetic generator")
        sp.add_argument("--scale", type=float, help="dBm of the strongest tone (default -14, or -20 for drones-like)")
        sp.add_argument("--s21", action="append", help="S21 CSV (repeat to average several)")
        sp.set_defaults(fmin=F_MIN, fmax=F_MAX)

    s = sub.add_parser("calibrate", help="sweep write frequencies and extract a programming table")
    s.add_argument("--chain", required=True)
    s.add_argument("--seed", type=int, required=True)
    grid_flags(s, 240.0, 600.0, 1.0)
    s.add_argument("--powers", nargs="+", type=float, default=list(WRITE_POWERS))
    s.add_argument("--read-fmin", type=float, default=200.0)
    s.add_argument("--read-fmax", type=float, default=700.0)
    s.add_argument("--read-step", type=float, default=1.0)
    s.add_argument("--read-power", type=float, default=READ_POWER)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("program", help="plan, execute and verify a target configuration")
    s.add_argument("--chain", required=True)
    s.add_argument("--table", required=True)
    s.add_argument("--bandmap", required=True)
    s.add_argument("--target")
    s.add_argument("--initial", help="initial bitstring or 'random'")
    s.add_argument("--sweep-all", action="store_true")
    s.add_argument("--initial-states", type=int, default=32)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_program)

    s = sub.add_parser("spectrum", help="delta spectrum of one configuration")
    s.add_argument("--chain", required=True)
    s.add_argument("--config", required=True)
    s.add_argument("--reference")
    s.add_argument("--read-power", type=float, help="dBm; omit for uV/mW sensitivities")
    grid_flags(s, 200.0, 700.0, 1.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("density-map", help="histogram of all configurations' responses")
    s.add_argument("--chain", required=True)
    s.add_argument("--bins", type=int, default=100)
    s.add_argument("--cap", type=int, default=20)
    grid_flags(s, 200.0, 700.0, 1.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_density_map)

    s = sub.add_parser("encode", help="encode a dataset into multi-tone waveforms")
    data_flags(s)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("make-synthetic", help="write a seeded synthetic dataset CSV")
    s.add_argument("kind", choices=sorted(SYNTHETIC))
    s.add_argument("--data-seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_make_synthetic)

    s = sub.add_parser("train", help="search the configuration pair that maximises accuracy")
    s.add_argument("--network", default="reference-network")
    data_flags(s)
    s.add_argument("--method", choices=["exhaustive", "greedy"], default="exhaustive")
    s.add_argument("--restarts", type=int, default=32)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", help="accuracy of a configuration pair")
    s.add_argument("--network", default="reference-network")
    data_flags(s)
    s.add_argument("--result", help="SearchResult JSON to take the pair from")
    s.add_argument("--cfg0")
    s.add_argument("--cfg1")
    s.add_argument("--repeats", type=int, default=3)
    s.add_argument("--noise-uv", type=float)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("scaling", help="write power, duration, energy and field versus frequency")
    s.add_argument("--f-ref", type=float, default=250.0)
    s.add_argument("--e-ref", type=float, default=5.0)
    s.add_argument("--p-ref", type=float, default=-11.0)
    s.add_argument("--tau-ref", type=float, default=50.0)
    s.add_argument("--anchor-d", type=float, default=500.0, help="dot size (nm) at f_ref")
    s.add_argument("--alpha", type=float, default=0.01)
    s.add_argument("--rc", type=float, default=10.0, help="core radius, nm")
    s.add_argument("--vc", type=float, default=320.0, help="critical core velocity, m/s")
    s.add_argument("--freqs", help="comma-separated list; overrides the grid")
    grid_flags(s, 100.0, 1000.0, 50.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_scaling)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except CliError as e:
        print(f"error: {e.category}: {' '.join(str(e).split())}", file=sys.stderr)
        return e.code
    return 0


if __name__ == "__main__":
    sys.exit(main())
