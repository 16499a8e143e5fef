"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 runtime failure (including a
``verify`` run whose checks did not all pass).
"""

import argparse
import json
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import SCHEMA_VERSION, __version__
from .config import RunConfig, load_config
from .errors import ConfigError
from .experiments import (calibrate_noise_power, calibrated_power, run_decoding_sweep,
                          run_densification, run_rate_comparison, run_rate_map, run_snr_cdf,
                          write_outputs, write_rate_map)
from .netmodel import relay_grid_linear, relay_grid_planar
from .verification import run_verification

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

# columns only written with --trace
_TRACE_COLUMNS = ("x_star_x", "x_star_y", "stop_reason")


def _pairs(text):
    try:
        return tuple(tuple(float(v) for v in item.split(":")) for item in text.split(",") if item.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected b:a pairs like 7:7.5,7:9, got {text!r}") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="root seed (overrides exp.seed)")
    common.add_argument("--out", default="results", help="output directory")
    common.add_argument("--config", default=None, help="key = value config file")
    common.add_argument("--trace", action="store_true", help="include ascent traces / per-user x*")
    common.add_argument("--jobs", type=int, default=None, help="worker processes (overrides exp.jobs)")
    common.add_argument("--realizations", type=int, default=None, help="override exp.n_realizations")

    p = argparse.ArgumentParser(prog="pncsim", description="PNC relay-selection and decoding simulator")
    p.add_argument("--version", action="version",
                   version=f"pncsim {__version__} (output schema {SCHEMA_VERSION})")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("rate-map", parents=[common], help="per-relay PNC-B rates for one user")
    s.add_argument("--user", nargs=2, type=float, default=(600.0, 500.0), metavar=("X", "Y"))
    s.add_argument("--separation", type=float, default=200.0)
    s.add_argument("--model", choices=("linear", "planar"), default=None,
                   help="default: linear if the user is on the x axis")

    sub.add_parser("compare", parents=[common], help="PNC-B vs SC-PNC rate per user-distance bin")
    s = sub.add_parser("densify", parents=[common], help="aggregate rate gain vs relay density")
    s.add_argument("--factors", type=float, nargs="+", default=None)
    s = sub.add_parser("snr-cdf", parents=[common], help="MA-phase SNR distributions at the PNC-B relay")
    s.add_argument("--calibrate", action="store_true",
                   help="fit the noise power to the low-SNR targets first")
    s = sub.add_parser("decode-sweep", parents=[common], help="relay decoding success per SNR pair")
    s.add_argument("--frames", type=int, default=None, help="frames per pair")
    s.add_argument("--pairs", type=_pairs, default=None, help="b:a dB pairs, comma separated")
    s = sub.add_parser("verify", parents=[common], help="optimizer, gradient and log-concavity checks")
    s.add_argument("--draws", type=int, default=1000, help="optimizer draws")
    s.add_argument("--instances", type=int, default=100, help="random log-concavity instances")
    s.add_argument("--points", type=int, default=100, help="gradient check points")
    return p


def _resolve_config(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    exp = cfg.exp
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if args.realizations is not None:
        overrides["n_realizations"] = args.realizations
    if overrides:
        exp = replace(exp, **overrides)
    return replace(cfg, exp=exp)


def _write_manifest(path, manifest):
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _drop_trace(records, keep):
    return records if keep else {k: v for k, v in records.items() if k not in _TRACE_COLUMNS}


def _cmd_rate_map(args, cfg):
    user = np.array(args.user, dtype=float)
    linear = args.model == "linear" or (args.model is None and user[1] == 0)
    grid = (relay_grid_linear if linear else relay_grid_planar)(args.separation, cfg.prop)
    rmap = run_rate_map(user, grid, cfg.power, cfg.prop, cfg.exp.step, cfg.exp.max_iter, cfg.exp.gradient_mode)
    paths = write_rate_map(rmap, args.out, cfg.exp.seed, f"s{args.separation:g}", trace=args.trace)
    print(f"picked relay {rmap.pick} at {rmap.relay_positions[rmap.pick].tolist()} "
          f"rate {rmap.rates[rmap.pick]:.4f} bps/Hz; best relay {rmap.best}")
    return paths, EXIT_OK


def _cmd_compare(args, cfg):
    paths = []
    for s, res in run_rate_comparison(cfg.exp, cfg.power, cfg.prop).items():
        summary = res["summary"]
        tag = f"s{s:g}".replace(".", "p")
        paths += write_outputs(args.out, "compare", tag, cfg.exp.seed,
                               _drop_trace(res["records"], args.trace), summary)
        print(f"s={s:g} m: PNC-B {summary['pncb_mean']:.4f}, SC-PNC {summary['scpnc_mean']:.4f} bps/Hz, "
              f"mean relative gain {summary['mean_relative_gain']:.3f}, "
              f"PNC-B >= SC-PNC in every bin: {summary['pncb_dominates_all_bins']}")
    return paths, EXIT_OK


def _cmd_densify(args, cfg):
    report = run_densification(cfg.exp, cfg.power, cfg.prop, args.factors, out_dir=args.out)
    for i, f in enumerate(report.density_factors):
        print(f"factor {f:g}: gain PNC-B {report.aggregate_rate_gain['PNC-B'][i]:.3f} "
              f"SC-PNC {report.aggregate_rate_gain['SC-PNC'][i]:.3f}; "
              f"rho PNC-B {report.densification_gain['PNC-B'][i]:.3f} "
              f"SC-PNC {report.densification_gain['SC-PNC'][i]:.3f}")
    paths = sorted(os.path.join(args.out, p) for p in os.listdir(args.out) if p.startswith("densify_"))
    return paths, EXIT_OK


def _cmd_snr_cdf(args, cfg):
    power = cfg.power
    paths = []
    if args.calibrate:
        cal = calibrate_noise_power(cfg.exp, power, cfg.prop)
        power = calibrated_power(power, cal)
        paths += write_outputs(args.out, "snr-cdf", "calibration", cfg.exp.seed, None,
                               {"noise_power": cal.noise_power, "achieved": cal.achieved,
                                "targets": cal.targets, "objective": cal.objective})
        print(f"calibrated noise power {cal.noise_power:.3f} dBm")
    for s, res in run_snr_cdf(cfg.exp, power, cfg.prop).items():
        rec = res["records"]
        cols = {k: rec[k] for k in ("realization", "user", "user_x", "user_y", "pncb_relay",
                                    "snr_ar0_db", "snr_br0_db")}
        paths += write_outputs(args.out, "snr-cdf", f"s{s:g}", cfg.exp.seed, cols, res["summary"])
        b = res["summary"]["bands"]
        print(f"s={s:g} m: AR0 {b['AR0']}, BR0 {b['BR0']}")
    return paths, EXIT_OK


def _cmd_decode(args, cfg):
    results = run_decoding_sweep(cfg.exp, cfg.phy, args.pairs, args.frames, out_dir=args.out)
    for pair, r in results.items():
        print(f"({pair[0]:g},{pair[1]:g}) dB: XOR-CD {r['xor_cd_success']:.4f} "
              f"pipeline {r['pipeline_success']:.4f} gain {r['gain']:.4f} "
              f"RMUD {r['rmud_share']:.2f} SIC {r['sic_share']:.2f} both {r['both_share']:.2f}")
    paths = sorted(os.path.join(args.out, p) for p in os.listdir(args.out) if p.startswith("decode-sweep_"))
    return paths, EXIT_OK


def _cmd_verify(args, cfg):
    checks = run_verification(cfg.power, cfg.prop, cfg.exp.seed, args.draws, args.instances, args.points)
    lines = [line for c in checks for line in c.lines()]
    ok = all(c.passed for c in checks)
    lines.append(f"overall: {'PASS' if ok else 'FAIL'}")
    print("\n".join(lines))
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"verify_report_{cfg.exp.seed}.txt")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return [path], EXIT_OK if ok else EXIT_RUNTIME


COMMANDS = {"rate-map": _cmd_rate_map, "compare": _cmd_compare, "densify": _cmd_densify,
            "snr-cdf": _cmd_snr_cdf, "decode-sweep": _cmd_decode, "verify": _cmd_verify}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    os.makedirs(args.out, exist_ok=True)
    manifest_path = os.path.join(args.out, f"manifest_{args.command}_{cfg.exp.seed}.json")
    manifest = {"subcommand": args.command, "config_path": args.config, "config": cfg.as_dict(),
                "seed": cfg.exp.seed, "out": args.out, "version": __version__,
                "schema_version": SCHEMA_VERSION, "status": "running", "runtime_s": None, "outputs": []}
    _write_manifest(manifest_path, manifest)
    start = time.perf_counter()
    try:
        paths, code = COMMANDS[args.command](args, cfg)
        manifest["outputs"] = [os.path.basename(p) for p in paths]
        manifest["status"] = "ok" if code == EXIT_OK else "failed"
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        manifest["status"] = "config-error"
        manifest["error"] = str(exc)
        code = EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - reported through the exit code
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        manifest["status"] = "error"
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        code = EXIT_RUNTIME
    manifest["runtime_s"] = round(time.perf_counter() - start, 3)
    _write_manifest(manifest_path, manifest)
    return code


if __name__ == "__main__":
    sys.exit(main())
