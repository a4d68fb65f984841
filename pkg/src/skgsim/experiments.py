"""Sweep orchestration, result tables and figure emission."""
from __future__ import annotations

import csv
import hashlib
import json
import os
import subprocess
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .analytic import (HybridBins, NoiseFrameSpec, chan_pdf_fully_resolved, chan_pdf_hybrid,
                       chan_pdf_unresolved, noise_power_pdf, total_power_pdf)
from .chanmodel import load_tap_profile, scale_profile, tdl_e_profile
from .mi import DEFAULT_ALPHA, DEFAULT_K, mi_lnc
from .montecarlo import sample_channel_power, sample_noise_power
from .sigproc import SimConfig, SweepPoint, simulate_rss_dataset
from .skg import skg_bounds

MHZ, NS = 1e6, 1e-9


@dataclass
class SweepConfig:
    """Grid and estimator settings for :func:`run_sweep`.

    Bandwidths are in Hz and delay spreads in seconds. ``master_seed`` and the
    grid point together fix every random stream, so results do not depend on
    ``jobs`` or on which other points are in the grid.
    """

    bw_list: list = field(default_factory=lambda: [50 * MHZ, 100 * MHZ, 200 * MHZ, 300 * MHZ, 400 * MHZ])
    ds_list: list = field(default_factory=lambda: [50 * NS])
    k_db_list: list = field(default_factory=lambda: [30.0])
    snr_db_list: list = field(default_factory=lambda: [float(s) for s in range(0, 34, 3)])
    rho_e: float = 0.0
    n_frames: int = 5000
    n_seeds: int = 10
    master_seed: int = 0
    profile_path: str | None = None
    k: int = DEFAULT_K
    alpha: float = DEFAULT_ALPHA
    method: str = "gram"
    output_dir: str = "results"
    jobs: int = 1
    sim: SimConfig = field(default_factory=SimConfig)

    def __post_init__(self):
        if isinstance(self.sim, dict):
            self.sim = SimConfig(**self.sim)
        for name in ("bw_list", "ds_list", "k_db_list", "snr_db_list"):
            vals = [float(v) for v in getattr(self, name)]
            if not vals:
                raise ValueError(f"{name} must be non-empty")
            setattr(self, name, vals)
        if self.n_seeds < 1:
            raise ValueError("n_seeds must be >= 1")
        if self.n_frames <= self.k:
            raise ValueError("n_frames must exceed k")

    @classmethod
    def from_json(cls, path, **overrides) -> "SweepConfig":
        with open(path) as fh:
            data = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    def points(self) -> list[SweepPoint]:
        return [SweepPoint(bw, ds, kd, snr, self.rho_e)
                for bw in self.bw_list for ds in self.ds_list
                for kd in self.k_db_list for snr in self.snr_db_list]


@lru_cache(maxsize=None)
def version_string() -> str:
    """``git describe`` of the source tree when available, else the package version."""
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=Path(__file__).parent, capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def point_hash(point: SweepPoint) -> int:
    """Stable 64-bit id of a grid point."""
    digest = hashlib.sha256(repr(tuple(float(v) for v in point.key())).encode()).digest()
    return int.from_bytes(digest[:8], "little")


def point_seed(master_seed: int, point: SweepPoint, seed_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(point_hash(point), seed_index))


SEED_COLUMNS = ["kind", "bw_hz", "ds_s", "k_db", "snr_db", "rho_e", "seed_index", "n_seeds",
                "n_frames", "master_seed", "method", "estimator", "k", "alpha", "version",
                "i_ab", "i_ae", "skg_lower", "skg_upper", "corr_ab", "corr_ae", "clamped"]
STAT_COLUMNS = ["i_ab", "i_ae", "skg_lower", "skg_upper", "corr_ab", "corr_ae"]
ALL_COLUMNS = SEED_COLUMNS + [f"{c}_std" for c in STAT_COLUMNS]


def _profile(cfg: SweepConfig):
    return tdl_e_profile() if cfg.profile_path is None else load_tap_profile(cfg.profile_path)


def evaluate_point(cfg: SweepConfig, point: SweepPoint, seed_index: int) -> dict:
    """Simulate one dataset and return its result row."""
    ss = point_seed(cfg.master_seed, point, seed_index)
    sim_ss, mi_ss = ss.spawn(2)
    try:
        prof = scale_profile(_profile(cfg), point.ds, point.k_db)
        ds = simulate_rss_dataset(point, cfg.n_frames, sim_ss, cfg.sim, prof, cfg.method)
    except ValueError as exc:
        raise ValueError(f"grid point {point}: {exc}") from exc
    jitter_seed = int(mi_ss.generate_state(1)[0])
    e_ab = mi_lnc(ds.p_a, ds.p_b, cfg.k, cfg.alpha, seed=jitter_seed)
    e_ae = mi_lnc(ds.p_a, ds.p_e, cfg.k, cfg.alpha, seed=jitter_seed + 1)
    rb = skg_bounds(e_ab, e_ae)
    return {
        **_provenance(cfg, point), "kind": "seed", "seed_index": seed_index,
        "i_ab": rb.i_ab, "i_ae": rb.i_ae, "skg_lower": rb.lower, "skg_upper": rb.upper,
        "corr_ab": float(np.corrcoef(ds.p_a, ds.p_b)[0, 1]),
        "corr_ae": float(np.corrcoef(ds.p_a, ds.p_e)[0, 1]),
        "clamped": int(rb.clamped),
    }


def _provenance(cfg: SweepConfig, point: SweepPoint) -> dict:
    return {"bw_hz": point.bw, "ds_s": point.ds, "k_db": point.k_db, "snr_db": point.snr_db,
            "rho_e": point.rho_e, "n_seeds": cfg.n_seeds, "n_frames": cfg.n_frames,
            "master_seed": cfg.master_seed, "method": cfg.method, "estimator": "lnc",
            "k": cfg.k, "alpha": cfg.alpha, "version": version_string()}


def aggregate(rows: Sequence[dict], cfg: SweepConfig) -> list[dict]:
    """Seed mean and standard deviation per grid point."""
    groups = defaultdict(list)
    for r in rows:
        groups[(r["bw_hz"], r["ds_s"], r["k_db"], r["snr_db"], r["rho_e"])].append(r)
    out = []
    for key in sorted(groups):
        rs = groups[key]
        agg = {**_provenance(cfg, SweepPoint(*key)), "kind": "aggregate", "seed_index": "",
               "clamped": sum(int(r["clamped"]) for r in rs)}
        for c in STAT_COLUMNS:
            v = np.array([r[c] for r in rs], dtype=float)
            agg[c] = float(v.mean())
            agg[f"{c}_std"] = float(v.std(ddof=1)) if v.size > 1 else 0.0
        out.append(agg)
    return out


def _task(args):
    return evaluate_point(*args)


def _check_writable(out: Path) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")


def run_sweep(cfg: SweepConfig, write: bool = True) -> list[dict]:
    """Run every (grid point, seed) pair and return seed plus aggregate rows.

    With ``write`` the table goes to ``<output_dir>/sweep.csv`` and the
    effective config to ``<output_dir>/config.json``.
    """
    out = Path(cfg.output_dir)
    if write:
        _check_writable(out)
    tasks = [(cfg, p, s) for p in cfg.points() for s in range(cfg.n_seeds)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            rows = list(ex.map(_task, tasks))
    else:
        rows = [_task(t) for t in tasks]
    rows.sort(key=lambda r: (r["bw_hz"], r["ds_s"], r["k_db"], r["snr_db"], r["rho_e"], r["seed_index"]))
    table = rows + aggregate(rows, cfg)
    if write:
        write_table(table, out / "sweep.csv")
        with open(out / "config.json", "w") as fh:
            json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
    return table


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def write_table(rows: Sequence[dict], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=ALL_COLUMNS, lineterminator="\n", restval="")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(v) for k, v in r.items()})
    return path


def read_table(path) -> list[dict]:
    """Read a sweep CSV; numeric columns come back as floats."""
    numeric = set(ALL_COLUMNS) - {"kind", "method", "estimator", "version", "seed_index"}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"kind", "bw_hz", "ds_s", "k_db", "snr_db", "i_ab"} - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"malformed sweep CSV, missing columns {sorted(missing)}")
        rows = []
        for line, r in enumerate(reader, start=2):
            try:
                rows.append({k: (float(v) if k in numeric and v != "" else v) for k, v in r.items()})
            except ValueError as exc:
                raise ValueError(f"malformed sweep CSV at line {line}: {exc}") from exc
    return rows


# figures ------------------------------------------------------------------

def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "skgsim"
    plt.rcParams["svg.fonttype"] = "none"
    return plt


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None})
    fig.clf()
    return path


@dataclass(frozen=True)
class DistFigureParams:
    """Parameters of the three power-distribution figures.

    ``sigma_w`` scales the receiver noise; ``None`` ties it to each ``sigma``.
    """

    sigmas: tuple = (5.0, 10.0)
    nu: float = 100.0
    L: int = 14
    bins: tuple = (3, 5, 4, 2)
    frame_samples: int = 10_000
    sigma_w: float | None = None
    n_mc: int = 100_000
    seed: int = 0
    model: str = "per_path"


CASES = ("unresolved", "resolved", "hybrid")


def case_total_pdf(case: str, sigma: float, params: DistFigureParams):
    if case == "unresolved":
        chan = chan_pdf_unresolved(params.L, params.nu, sigma, physical=True)
    elif case == "resolved":
        chan = chan_pdf_fully_resolved(params.L, params.nu, sigma, physical=True)
    elif case == "hybrid":
        chan = chan_pdf_hybrid(HybridBins(params.bins, params.nu, sigma), model=params.model)
    else:
        raise ValueError(f"unknown case {case!r}")
    sw = sigma if params.sigma_w is None else params.sigma_w
    return total_power_pdf(chan, noise_power_pdf(NoiseFrameSpec(params.frame_samples, sw)))


def case_monte_carlo(case: str, sigma: float, params: DistFigureParams, unit_noise: np.ndarray,
                     rng: np.random.Generator) -> np.ndarray:
    """Generative total power; ``unit_noise`` is frame noise power at sigma_w = 1."""
    kw = {"bins": params.bins, "model": params.model} if case == "hybrid" else {"L": params.L}
    sw = sigma if params.sigma_w is None else params.sigma_w
    chan = sample_channel_power(case, params.nu, sigma, unit_noise.size, rng, **kw)
    return chan + sw ** 2 * unit_noise


def emit_dist_figures(out_dir, params: DistFigureParams = DistFigureParams()) -> dict:
    """Write pdf CSVs and one SVG per resolution case with Monte Carlo overlays.

    Returns ``{(case, sigma): ks_distance}``.
    """
    out = Path(out_dir)
    _check_writable(out)
    plt = _pyplot()
    ss = np.random.SeedSequence(params.seed)
    noise_ss, chan_ss = ss.spawn(2)
    unit_noise = sample_noise_power(params.frame_samples, 1.0, params.n_mc, np.random.default_rng(noise_ss))
    rng = np.random.default_rng(chan_ss)
    ks = {}
    titles = {"unresolved": "Unresolved paths", "resolved": "Fully resolved paths",
              "hybrid": f"Hybrid resolution, bins {'/'.join(map(str, params.bins))}"}
    for n, case in enumerate(CASES, start=1):
        fig, ax = plt.subplots(figsize=(6, 4))
        for sigma in params.sigmas:
            pdf = case_total_pdf(case, sigma, params)
            mc = case_monte_carlo(case, sigma, params, unit_noise, rng)
            d = pdf.ks_distance(mc)
            ks[(case, sigma)] = d
            pdf.to_csv(out / f"dist_case{n}_sigma{sigma:g}.csv")
            lo, hi = np.quantile(mc, [1e-4, 1 - 1e-4])
            keep = (pdf.x >= lo) & (pdf.x <= hi)
            line, = ax.plot(pdf.x[keep], pdf.density[keep], label=f"analytic, $\\sigma$={sigma:g}")
            ax.hist(mc, bins=120, range=(lo, hi), density=True, histtype="step",
                    color=line.get_color(), alpha=0.6, label=f"Monte Carlo, KS={d:.4f}")
        ax.set_xlabel("total received power")
        ax.set_ylabel("pdf")
        ax.set_title(titles[case])
        ax.legend(fontsize=8)
        fig.tight_layout()
        _save(fig, out / f"fig_case{n}.svg")
        plt.close(fig)
    return ks


def _agg_rows(rows):
    agg = [r for r in rows if r.get("kind") == "aggregate"]
    if not agg:
        raise ValueError("no aggregate rows to plot")
    return agg


def _curves(rows, x, group, fixed):
    sel = [r for r in rows if all(r[k] == v for k, v in fixed.items())]
    out = defaultdict(list)
    for r in sel:
        out[r[group] if isinstance(group, str) else tuple(r[g] for g in group)].append(r)
    return {g: sorted(rs, key=lambda r: r[x]) for g, rs in sorted(out.items())}


def _trend_plot(plt, curves, x, xscale, xlabel, label, title, path):
    if not curves:
        return None
    fig, ax = plt.subplots(figsize=(6, 4))
    for g, rs in curves.items():
        xs = np.array([r[x] for r in rs]) * xscale
        ax.errorbar(xs, [r["i_ab"] for r in rs], yerr=[r.get("i_ab_std") or 0.0 for r in rs],
                    marker="o", ms=3, capsize=2, label=label(g))
    ax.set_xlabel(xlabel)
    ax.set_ylabel("I(A;B) [bits]")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)
    return path


def emit_trend_figures(csv_path, out_dir=None) -> list[Path]:
    """MI-vs-SNR per bandwidth, MI-vs-SNR per delay spread and MI-vs-K.

    The per-bandwidth plot holds delay spread at its smallest and K at its
    largest value; the per-delay-spread plot uses the bandwidth nearest
    200 MHz. The K plot uses the highest SNR in the table.
    """
    rows = _agg_rows(read_table(csv_path))
    out = Path(out_dir) if out_dir is not None else Path(csv_path).parent
    _check_writable(out)
    plt = _pyplot()
    bws = sorted({r["bw_hz"] for r in rows})
    dss = sorted({r["ds_s"] for r in rows})
    ks = sorted({r["k_db"] for r in rows})
    snr_top = max(r["snr_db"] for r in rows)
    bw_ref = min(bws, key=lambda b: abs(b - 200 * MHZ))
    made = [
        _trend_plot(plt, _curves(rows, "snr_db", "bw_hz", {"ds_s": dss[0], "k_db": ks[-1]}),
                    "snr_db", 1.0, "SNR [dB]", lambda b: f"BW={b / MHZ:g} MHz",
                    f"DS={dss[0] / NS:g} ns, K={ks[-1]:g} dB", out / "trend_snr_bw.svg"),
        _trend_plot(plt, _curves(rows, "snr_db", "ds_s", {"bw_hz": bw_ref, "k_db": ks[-1]}),
                    "snr_db", 1.0, "SNR [dB]", lambda d: f"DS={d / NS:g} ns",
                    f"BW={bw_ref / MHZ:g} MHz, K={ks[-1]:g} dB", out / "trend_snr_ds.svg"),
        _trend_plot(plt, _curves(rows, "k_db", ("bw_hz", "ds_s"), {"snr_db": snr_top}),
                    "k_db", 1.0, "K-factor [dB]", lambda g: f"BW={g[0] / MHZ:g} MHz, DS={g[1] / NS:g} ns",
                    f"SNR={snr_top:g} dB", out / "trend_k.svg"),
    ]
    return [p for p in made if p is not None]


def override(cfg: SweepConfig, **kw) -> SweepConfig:
    """Copy of ``cfg`` with the non-``None`` keyword values replaced."""
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})


def ks_two_sample(x, y) -> float:
    from scipy.stats import ks_2samp
    return float(ks_2samp(x, y).statistic)


def describe(cfg: SweepConfig) -> str:
    n = len(cfg.points())
    return f"{n} grid points x {cfg.n_seeds} seeds, {cfg.n_frames} frames each"

