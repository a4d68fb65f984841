"""Chirp probing, channel/noise application, low-pass filtering and RSS.

Two simulation paths produce an :class:`RssDataset`:

``waveform``
    Per frame: chirp -> CIR -> AWGN -> FIR -> mean |.|^2. Slow, literal.
``gram``
    The same RSS written as a quadratic form in the tap gains. For fixed
    delays and filter the signal term is ``h^H G h`` with ``G`` built once
    from filtered, delayed chirps. The signal-noise cross term is drawn
    exactly from its Gaussian law given ``h``; the noise-only term is drawn
    from a Gamma with its exact mean and variance. Used for sweeps.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import signal

from . import chanmodel
from .chanmodel import CirRealization, LosGainSpec, TapProfile


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=complex))
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True)
class FilterSpec:
    cutoff: float
    bandwidth: float
    num_taps: int
    impulse_response: np.ndarray
    sample_rate: float


def gen_chirp(bandwidth: float, duration: float, sample_rate: float) -> Waveform:
    """Unit-modulus linear-FM chirp sweeping [-bandwidth/2, +bandwidth/2]."""
    if bandwidth < 0 or duration <= 0:
        raise ValueError("bandwidth must be >= 0 and duration > 0")
    if sample_rate < 2 * bandwidth:
        raise ValueError(f"sample_rate {sample_rate} below Nyquist for bandwidth {bandwidth}")
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    slope = bandwidth / duration
    phase = 2 * np.pi * (-0.5 * bandwidth * t + 0.5 * slope * t * t)
    return Waveform(np.exp(1j * phase), sample_rate)


def _delay_samples(delays, sample_rate: float) -> np.ndarray:
    return np.rint(np.asarray(delays) * sample_rate).astype(int)


def apply_channel(x: Waveform, h: CirRealization) -> Waveform:
    """Sum of delayed, scaled copies of ``x``; delays rounded to whole samples."""
    shifts = _delay_samples(h.delays, x.sample_rate)
    n = len(x)
    if np.any(shifts >= n):
        raise ValueError("tap delay exceeds the frame")
    out = np.zeros(n, dtype=complex)
    for g, s in zip(h.gains, shifts):
        out[s:] += g * x.samples[: n - s]
    return Waveform(out, x.sample_rate)


def add_awgn(y: Waveform, snr_db: float, rng: np.random.Generator,
             signal_power: float | None = None) -> Waveform:
    """Add circular complex white noise of variance ``P / 10^(snr_db/10)``.

    ``P`` is ``mean(|y|^2)`` unless ``signal_power`` fixes it. ``snr_db = inf``
    returns the input unchanged.
    """
    if len(y) == 0:
        raise ValueError("empty waveform")
    if math.isinf(snr_db) and snr_db > 0:
        return y
    p = float(np.mean(np.abs(y.samples) ** 2)) if signal_power is None else signal_power
    var = p / 10.0 ** (snr_db / 10.0)
    n = len(y)
    w = math.sqrt(var / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return Waveform(y.samples + w, y.sample_rate)


def design_lowpass(bandwidth: float, sample_rate: float, num_taps: int = 257) -> FilterSpec:
    """Hamming-windowed sinc, cutoff ``bandwidth/2``, DC gain exactly 1."""
    cutoff = bandwidth / 2
    if not 0 < cutoff < sample_rate / 2:
        raise ValueError("cutoff must lie in (0, Nyquist)")
    if num_taps < 3 or num_taps % 2 == 0:
        raise ValueError("num_taps must be odd and >= 3")
    taps = signal.firwin(num_taps, cutoff, fs=sample_rate, window="hamming", scale=False)
    taps = taps / taps.sum()
    return FilterSpec(cutoff, bandwidth, num_taps, taps, sample_rate)


def measure_rss(y: Waveform, f: FilterSpec) -> float:
    """Mean |g * y|^2 over the fully-overlapped output samples."""
    if len(y) < f.num_taps:
        raise ValueError("frame shorter than the filter")
    z = signal.fftconvolve(y.samples, f.impulse_response, mode="valid")
    return float(np.mean(z.real ** 2 + z.imag ** 2))


# --------------------------------------------------------------------------
# dataset simulation


@dataclass(frozen=True)
class SimConfig:
    sample_rate: float = 1e9
    frame_duration: float = 10e-6
    chirp_bandwidth: float = 250e6
    num_taps: int = 257
    theta: float = 0.0

    @property
    def frame_len(self) -> int:
        return int(round(self.frame_duration * self.sample_rate))


@dataclass(frozen=True)
class SweepPoint:
    bw: float  # filter bandwidth B_w, Hz
    ds: float  # scattered RMS delay spread, s
    k_db: float
    snr_db: float
    rho_e: float = 0.0

    def key(self) -> tuple:
        return (self.bw, self.ds, self.k_db, self.snr_db, self.rho_e)


@dataclass
class RssDataset:
    p_a: np.ndarray
    p_b: np.ndarray
    p_e: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.p_a = np.asarray(self.p_a, dtype=float)
        self.p_b = np.asarray(self.p_b, dtype=float)
        self.p_e = np.asarray(self.p_e, dtype=float)
        if not (len(self.p_a) == len(self.p_b) == len(self.p_e)):
            raise ValueError("RSS vectors differ in length")
        if len(self.p_a) and min(self.p_a.min(), self.p_b.min(), self.p_e.min()) <= 0:
            raise ValueError("RSS entries must be positive")

    def __len__(self):
        return len(self.p_a)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            for k, v in self.meta.items():
                fh.write(f"# {k}={v}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["frame", "p_a", "p_b", "p_e"])
            for i, row in enumerate(zip(self.p_a, self.p_b, self.p_e)):
                w.writerow([i, *(repr(float(v)) for v in row)])

    @classmethod
    def from_csv(cls, path) -> "RssDataset":
        meta, lines = {}, []
        with open(path, newline="") as fh:
            for line in fh:
                if line.startswith("#"):
                    k, _, v = line[1:].strip().partition("=")
                    meta[k.strip()] = v.strip()
                elif line.strip():
                    lines.append(line)
        rows = list(csv.DictReader(lines))
        col = lambda name: np.array([float(r[name]) for r in rows])  # noqa: E731
        return cls(col("p_a"), col("p_b"), col("p_e"), meta)


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def point_profile(point: SweepPoint, base: TapProfile | None = None) -> TapProfile:
    base = chanmodel.tdl_e_profile() if base is None else base
    return chanmodel.scale_profile(base, point.ds, point.k_db)


def _expected_channel_power(profile: TapProfile, los: LosGainSpec | None) -> float:
    if los is None:
        return 1.0
    return los.nu ** 2 + profile.num_taps * 2 * los.sigma ** 2


@lru_cache(maxsize=16)
def _chirp(cfg: SimConfig) -> Waveform:
    return gen_chirp(cfg.chirp_bandwidth, cfg.frame_duration, cfg.sample_rate)


@dataclass(frozen=True)
class QuadraticRss:
    """Exact quadratic-form view of the RSS for fixed delays and filter."""

    gram: np.ndarray  # G, (L, L): RSS_signal = h^H G h
    cross_factor: np.ndarray  # M with M M^H = A^H A / T_v^2
    noise_energy: float  # ||g||^2
    noise_trace_sq: float  # tr((Gamma Gamma^H)^2) / T_v^2

    @classmethod
    @lru_cache(maxsize=64)
    def build(cls, shifts: tuple, cfg: SimConfig, bw: float) -> "QuadraticRss":
        x = _chirp(cfg).samples
        g = design_lowpass(bw, cfg.sample_rate, cfg.num_taps).impulse_response
        n = len(x)
        tv = n - len(g) + 1
        U = np.empty((tv, len(shifts)), dtype=complex)
        A = np.empty((n, len(shifts)), dtype=complex)
        for i, s in enumerate(shifts):
            xs = np.zeros(n, dtype=complex)
            xs[s:] = x[: n - s]
            U[:, i] = signal.fftconvolve(xs, g, mode="valid")
            A[:, i] = signal.fftconvolve(U[:, i], np.conj(g[::-1]), mode="full")
        G = U.conj().T @ U / tv
        B = A.conj().T @ A / tv ** 2
        w, V = np.linalg.eigh((B + B.conj().T) / 2)
        M = V * np.sqrt(np.clip(w, 0, None))
        r = np.correlate(g, g, mode="full")  # lags -(ng-1)..(ng-1)
        lags = np.arange(-(len(g) - 1), len(g))
        trace_sq = float(np.sum((tv - np.abs(lags)) * np.abs(r) ** 2)) / tv ** 2
        return cls((G + G.conj().T) / 2, M, float(np.sum(g * g)), trace_sq)

    def signal_power(self, h: np.ndarray) -> np.ndarray:
        return np.einsum("ni,ij,nj->n", h.conj(), self.gram, h).real

    def sample(self, h: np.ndarray, noise_var: float, rng: np.random.Generator) -> np.ndarray:
        """RSS for each row of ``h`` given complex noise variance per sample."""
        sig = self.signal_power(h)
        if noise_var == 0:
            return sig
        n, L = h.shape
        z = (rng.standard_normal((n, L)) + 1j * rng.standard_normal((n, L))) / math.sqrt(2)
        c = math.sqrt(noise_var) * (z @ self.cross_factor.T)
        cross = 2 * np.sum(h.conj() * c, axis=1).real
        mean = noise_var * self.noise_energy
        var = noise_var ** 2 * self.noise_trace_sq
        energy = rng.gamma(mean ** 2 / var, var / mean, size=n)
        return sig + cross + energy


def simulate_rss_dataset(point: SweepPoint, n_frames: int, seed=0, cfg: SimConfig = SimConfig(),
                         profile: TapProfile | None = None, method: str = "gram",
                         los: LosGainSpec | None = None) -> RssDataset:
    """Simulate Alice/Bob/Eve RSS over ``n_frames`` independent channel draws.

    Alice and Bob share each frame's CIR exactly; Eve's CIR is an independent
    draw, optionally mixed with Alice's through ``point.rho_e``. Each receiver
    adds its own noise. ``profile`` is the already-scaled profile; by default
    the bundled TDL-E table scaled to ``point.ds`` and ``point.k_db``.
    """
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    prof = point_profile(point) if profile is None else profile
    ss = _seed_sequence(seed)
    power = _expected_channel_power(prof, los)
    noise_var = 0.0 if math.isinf(point.snr_db) else power / 10.0 ** (point.snr_db / 10.0)
    meta = {**asdict(point), "n_frames": n_frames, "method": method,
            "seed": ss.entropy, "spawn_key": ss.spawn_key}

    if method == "gram":
        s_chan, s_eve, s_a, s_b, s_e = (np.random.default_rng(c) for c in ss.spawn(5))
        h = chanmodel.draw_gains(prof, n_frames, s_chan, los, cfg.theta)
        fresh = chanmodel.draw_gains(prof, n_frames, s_eve, los, cfg.theta)
        h_e = chanmodel.correlated_eve_gains(h, fresh, prof, point.rho_e, los, cfg.theta)
        shifts = tuple(int(s) for s in _delay_samples(prof.delays, cfg.sample_rate))
        if max(shifts) >= cfg.frame_len:
            raise ValueError("tap delay exceeds the frame")
        q = QuadraticRss.build(shifts, cfg, float(point.bw))
        return RssDataset(q.sample(h, noise_var, s_a), q.sample(h, noise_var, s_b),
                          q.sample(h_e, noise_var, s_e), meta)
    if method == "waveform":
        x = _chirp(cfg)
        filt = design_lowpass(point.bw, cfg.sample_rate, cfg.num_taps)
        out = np.empty((3, n_frames))
        for i, frame_ss in enumerate(ss.spawn(n_frames)):
            out[:, i] = _waveform_frame(x, filt, prof, point, power, frame_ss, los, cfg.theta)
        return RssDataset(*out, meta)
    raise ValueError(f"unknown method {method!r}")


def _waveform_frame(x, filt, prof, point, power, ss, los, theta):
    s_chan, s_eve, s_a, s_b, s_e = (np.random.default_rng(c) for c in ss.spawn(5))
    h_a, h_b = chanmodel.draw_reciprocal_pair(prof, s_chan, los, theta)
    fresh = chanmodel.draw_gains(prof, 1, s_eve, los, theta)
    g_e = chanmodel.correlated_eve_gains(h_a.gains[None, :], fresh, prof, point.rho_e, los, theta)
    h_e = CirRealization(g_e[0], prof.delays)
    rss = []
    for h, rng in ((h_a, s_a), (h_b, s_b), (h_e, s_e)):
        y = apply_channel(x, h)
        y = add_awgn(y, point.snr_db, rng, signal_power=power)
        rss.append(measure_rss(y, filt))
    return rss


def write_dataset(ds: RssDataset, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ds.to_csv(path)
    return path
