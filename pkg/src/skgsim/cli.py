"""Command line entry point: ``skgsim <subcommand>``."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .mi import DEFAULT_ALPHA, DEFAULT_K, mi_ksg, mi_lnc
from .skg import skg_bounds

MHZ, NS = 1e6, 1e-9


def _load_json(path):
    if path is None:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _cmd_simulate(args) -> int:
    from .chanmodel import load_tap_profile, scale_profile, tdl_e_profile
    from .sigproc import SimConfig, SweepPoint, simulate_rss_dataset, write_dataset

    conf = _load_json(args.config)
    sim = SimConfig(**conf.pop("sim", {}))
    bw = args.bw * MHZ if args.bw is not None else conf.get("bw", 200 * MHZ)
    ds = args.ds * NS if args.ds is not None else conf.get("ds", 50 * NS)
    k_db = args.k_db if args.k_db is not None else conf.get("k_db", 30.0)
    snr = args.snr if args.snr is not None else conf.get("snr_db", 33.0)
    rho_e = args.rho_e if args.rho_e is not None else conf.get("rho_e", 0.0)
    frames = args.frames or conf.get("n_frames", 5000)
    method = args.method or conf.get("method", "gram")
    base = load_tap_profile(conf["profile_path"]) if conf.get("profile_path") else tdl_e_profile()
    point = SweepPoint(bw, ds, k_db, snr, rho_e)
    ds_ = simulate_rss_dataset(point, frames, args.seed, sim, scale_profile(base, ds, k_db), method)
    path = write_dataset(ds_, Path(args.out) / "rss.csv")
    print(f"wrote {path} ({frames} frames)")
    return 0


def _cmd_dist(args) -> int:
    from .experiments import DistFigureParams, emit_dist_figures

    conf = _load_json(args.config)
    if args.frames:
        conf["n_mc"] = args.frames
    conf["seed"] = args.seed
    for key in ("sigmas", "bins"):
        if key in conf:
            conf[key] = tuple(conf[key])
    ks = emit_dist_figures(args.out, DistFigureParams(**conf))
    for (case, sigma), d in ks.items():
        print(f"case={case} sigma={sigma:g} ks={d:.5f}")
    return 0


def _read_samples(path):
    with open(path, newline="") as fh:
        reader = csv.reader(line for line in fh if line.strip() and not line.startswith("#"))
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path} is empty")
        data = np.array([[float(v) for v in row] for row in reader], dtype=float).reshape(-1, len(header))
    keep = [i for i, n in enumerate(header) if n.strip() != "frame"]
    if len(keep) not in (2, 3):
        raise ValueError("expected two or three sample columns")
    return [(header[i].strip(), data[:, i]) for i in keep]


def _cmd_mi(args) -> int:
    cols = _read_samples(args.input)
    (na, a), (nb, b) = cols[0], cols[1]
    est = (mi_ksg(a, b, args.k, seed=args.seed) if args.alpha == 0 and args.estimator == "ksg"
           else mi_lnc(a, b, args.k, args.alpha, seed=args.seed))
    lines = {"n_samples": est.n_samples, "k": est.k, "alpha": args.alpha,
             "estimator": est.correction, "jitter": est.jitter,
             f"mi_{na}_{nb}_nats": est.nats, f"mi_{na}_{nb}_bits": est.bits}
    if est.flags:
        lines["flags"] = ",".join(est.flags)
    if len(cols) == 3:
        ne, e = cols[2]
        est_e = mi_lnc(a, e, args.k, args.alpha, seed=args.seed + 1)
        rb = skg_bounds(est, est_e)
        lines.update({f"mi_{na}_{ne}_bits": est_e.bits, "skg_lower_bits": rb.lower,
                      "skg_upper_bits": rb.upper, "skg_clamped": int(rb.clamped)})
    for key, val in lines.items():
        print(f"{key}={val}")
    return 0


def _cmd_sweep(args) -> int:
    from .experiments import SweepConfig, describe, run_sweep

    overrides = {"master_seed": args.seed, "output_dir": args.out, "n_frames": args.frames,
                 "k": args.k, "alpha": args.alpha, "jobs": args.jobs}
    if args.config:
        cfg = SweepConfig.from_json(args.config, **overrides)
    else:
        cfg = SweepConfig(**{k: v for k, v in overrides.items() if v is not None})
    print(describe(cfg))
    rows = run_sweep(cfg)
    n_agg = sum(r["kind"] == "aggregate" for r in rows)
    print(f"wrote {Path(cfg.output_dir) / 'sweep.csv'} ({len(rows) - n_agg} seed rows, {n_agg} aggregate rows)")
    return 0


def _cmd_plot(args) -> int:
    from .experiments import emit_trend_figures

    for p in emit_trend_figures(args.input, args.out):
        print(f"wrote {p}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skgsim", description="RSS-based key generation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default="results"):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=0, help="master seed")
        p.add_argument("--out", default=out_default, help="output directory")
        return p

    p = common(sub.add_parser("simulate", help="simulate one RSS dataset"))
    p.add_argument("--frames", type=int)
    p.add_argument("--bw", type=float, help="filter bandwidth in MHz")
    p.add_argument("--ds", type=float, help="RMS delay spread in ns")
    p.add_argument("--k-db", type=float, dest="k_db", help="Rician K-factor in dB")
    p.add_argument("--snr", type=float, help="SNR in dB")
    p.add_argument("--rho-e", type=float, dest="rho_e", help="Alice/Eve channel correlation")
    p.add_argument("--method", choices=["gram", "waveform"])
    p.set_defaults(func=_cmd_simulate)

    p = common(sub.add_parser("dist", help="power distribution figures"))
    p.add_argument("--frames", type=int, help="Monte Carlo sample count")
    p.set_defaults(func=_cmd_dist)

    p = sub.add_parser("mi", help="estimate MI from a sample CSV")
    p.add_argument("input", help="CSV with two or three sample columns")
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--estimator", choices=["lnc", "ksg"], default="lnc")
    p.add_argument("--seed", type=int, default=0, help="jitter seed")
    p.set_defaults(func=_cmd_mi)

    p = sub.add_parser("sweep", help="run a parameter sweep")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--frames", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("plot", help="trend figures from a sweep CSV")
    p.add_argument("input", help="sweep.csv")
    p.add_argument("--out", help="output directory (default: next to the CSV)")
    p.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "mi" and args.estimator == "ksg":
        args.alpha = 0.0
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"skgsim {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
