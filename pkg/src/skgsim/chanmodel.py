"""Tapped-delay-line channel profiles and random CIR draws.

A profile holds one Rician (LoS) tap and any number of Rayleigh taps. The
LoS tap carries a specular part plus an optional scattered part; the split is
fixed by the profile K-factor, defined as specular power over all scattered
power (LoS-tap scattered part included).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np

POWER_TOL = 1e-9


@dataclass(frozen=True)
class Tap:
    delay: float  # seconds
    mean_power: float  # linear
    is_los: bool = False


def _scattered_powers(powers: np.ndarray, los_index: int, k_factor_db: float) -> np.ndarray:
    spec = specular_fraction(k_factor_db) * powers.sum()
    out = powers.copy()
    out[los_index] = max(out[los_index] - spec, 0.0)
    return out


def specular_fraction(k_factor_db: float) -> float:
    """Fraction of total power in the specular LoS component for a given K."""
    if math.isinf(k_factor_db):
        return 1.0 if k_factor_db > 0 else 0.0
    k = 10.0 ** (k_factor_db / 10.0)
    return k / (1.0 + k)


def rms_delay_spread(delays: Sequence[float], powers: Sequence[float]) -> float:
    """Power-weighted RMS delay spread. Returns 0 for zero total power."""
    d = np.asarray(delays, dtype=float)
    p = np.asarray(powers, dtype=float)
    total = p.sum()
    if total <= 0:
        return 0.0
    p = p / total
    mean = float(np.dot(p, d))
    return float(math.sqrt(max(float(np.dot(p, (d - mean) ** 2)), 0.0)))


@dataclass(frozen=True)
class TapProfile:
    """Statistical multipath description.

    ``rms_delay_spread`` is the RMS spread of the scattered power-delay
    profile, i.e. with the specular LoS power removed. That quantity does not
    move when the K-factor is retargeted.
    """

    taps: tuple[Tap, ...]
    rms_delay_spread: float
    k_factor_db: float
    name: str = ""

    def __post_init__(self):
        taps = tuple(self.taps)
        object.__setattr__(self, "taps", taps)
        if not taps:
            raise ValueError("profile needs at least one tap")
        los = [i for i, t in enumerate(taps) if t.is_los]
        if len(los) != 1:
            raise ValueError(f"exactly one LoS tap required, got {len(los)}")
        if los[0] != 0:
            raise ValueError("LoS tap must be the first (earliest) tap")
        delays = self.delays
        if np.any(delays < 0):
            raise ValueError("delays must be non-negative")
        if len(taps) > 1 and not delays[1] > delays[0]:
            raise ValueError("LoS tap must have the strictly smallest delay")
        if np.any(np.diff(delays) < 0):
            raise ValueError("delays must be increasing")
        powers = self.powers
        if np.any(powers < 0):
            raise ValueError("tap powers must be non-negative")
        if abs(powers.sum() - 1.0) > POWER_TOL:
            raise ValueError(f"tap powers must sum to 1, got {powers.sum()!r}")
        if self.los_specular_power > powers[0] * (1 + 1e-9) + 1e-15:
            raise ValueError("K-factor asks for more specular power than the LoS tap holds")
        recomputed = rms_delay_spread(delays, self.scattered_powers)
        if not math.isclose(recomputed, self.rms_delay_spread, rel_tol=1e-6, abs_tol=1e-15):
            raise ValueError(
                f"rms_delay_spread {self.rms_delay_spread!r} does not match taps ({recomputed!r})"
            )

    @property
    def num_taps(self) -> int:
        return len(self.taps)

    @property
    def delays(self) -> np.ndarray:
        return np.array([t.delay for t in self.taps], dtype=float)

    @property
    def powers(self) -> np.ndarray:
        return np.array([t.mean_power for t in self.taps], dtype=float)

    @property
    def los_specular_power(self) -> float:
        return specular_fraction(self.k_factor_db)

    @property
    def scattered_powers(self) -> np.ndarray:
        """Per-tap power of the zero-mean (Rayleigh) components."""
        return _scattered_powers(self.powers, 0, self.k_factor_db)

    @classmethod
    def from_arrays(cls, delays, powers, k_factor_db: float, name: str = "") -> "TapProfile":
        """Build a profile from LoS-first arrays; powers are normalized here."""
        d = np.asarray(delays, dtype=float)
        p = np.asarray(powers, dtype=float)
        p = p / p.sum()
        taps = tuple(Tap(float(di), float(pi), i == 0) for i, (di, pi) in enumerate(zip(d, p)))
        ds = rms_delay_spread(d, _scattered_powers(p, 0, k_factor_db))
        return cls(taps, ds, float(k_factor_db), name)


@dataclass(frozen=True)
class LosGainSpec:
    """Explicit Gaussian parameters of the generative model.

    The LoS path is nu*exp(i*theta) + CN(0, 2 sigma^2); every other path is
    CN(0, 2 sigma^2).
    """

    nu: float
    sigma: float
    theta: float = 0.0

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError("nu must be >= 0")
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")


@dataclass(frozen=True)
class CirRealization:
    gains: np.ndarray  # complex
    delays: np.ndarray  # seconds

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=complex)
        d = np.asarray(self.delays, dtype=float)
        if g.shape != d.shape or g.ndim != 1:
            raise ValueError("gains and delays must be 1-D and the same length")
        if np.any(d < 0) or np.any(np.diff(d) < 0):
            raise ValueError("delays must be non-negative and increasing")
        object.__setattr__(self, "gains", g)
        object.__setattr__(self, "delays", d)

    def __eq__(self, other):
        if not isinstance(other, CirRealization):
            return NotImplemented
        return np.array_equal(self.gains, other.gains) and np.array_equal(self.delays, other.delays)

    __hash__ = None


# --------------------------------------------------------------------------
# loading


def _rows_from_source(source: Any) -> tuple[list[dict], dict]:
    if isinstance(source, (str, Path)):
        with open(source) as fh:
            source = json.load(fh)
    if isinstance(source, dict):
        meta = {k: v for k, v in source.items() if k != "taps"}
        rows = source.get("taps")
    else:
        meta, rows = {}, source
    if not rows:
        raise ValueError("tap source lists no taps")
    return list(rows), meta


def load_tap_profile(source: Any, allow_coincident: bool | None = None) -> TapProfile:
    """Load a profile from a JSON path, a dict with ``taps`` or a list of rows.

    Each row is ``{delay_ns, power_db, los}`` (a linear ``power`` may stand
    in for ``power_db``). Rayleigh rows that share the
    LoS delay become the scattered part of the LoS tap. Other rows with
    equal delays raise unless ``allow_coincident`` (or the source's own
    ``allow_coincident`` key) is set.
    """
    rows, meta = _rows_from_source(source)
    if allow_coincident is None:
        allow_coincident = bool(meta.get("allow_coincident", False))

    parsed = []
    for r in rows:
        try:
            delay = float(r["delay_ns"]) * 1e-9
            if "power_db" in r:
                power = 10.0 ** (float(r["power_db"]) / 10.0)
            else:
                power = float(r["power"])
        except KeyError as exc:
            raise ValueError(f"tap row missing field {exc}") from None
        if not (power > 0 and math.isfinite(power)):
            raise ValueError("tap powers must be positive")
        if delay < 0:
            raise ValueError("tap delays must be non-negative")
        parsed.append((delay, power, bool(r.get("los", False))))

    los_rows = [p for p in parsed if p[2]]
    if not los_rows:
        raise ValueError("tap source has no LoS tap")
    if len(los_rows) > 1:
        raise ValueError("tap source has more than one LoS tap")
    los_delay, los_spec_power, _ = los_rows[0]

    folded = [p for p in parsed if not p[2] and p[0] == los_delay]
    rest = sorted((p for p in parsed if not p[2] and p[0] != los_delay), key=lambda p: p[0])
    if any(p[0] < los_delay for p in rest):
        raise ValueError("LoS tap must be the earliest tap")
    if not allow_coincident:
        ds = [p[0] for p in rest]
        if len(set(ds)) != len(ds):
            raise ValueError("duplicate tap delays")

    los_scattered = sum(p[1] for p in folded)
    scattered_total = los_scattered + sum(p[1] for p in rest)
    k_db = math.inf if scattered_total == 0 else 10 * math.log10(los_spec_power / scattered_total)
    delays = [los_delay] + [p[0] for p in rest]
    powers = [los_spec_power + los_scattered] + [p[1] for p in rest]
    return TapProfile.from_arrays(delays, powers, k_db, name=str(meta.get("name", "")))


def tdl_e_profile() -> TapProfile:
    """The bundled 3GPP TDL-E table (14 taps, first tap LoS)."""
    ref = resources.files("skgsim") / "data" / "tdl_e.json"
    with ref.open() as fh:
        return load_tap_profile(json.load(fh))


def single_tap_profile() -> TapProfile:
    return TapProfile((Tap(0.0, 1.0, True),), 0.0, math.inf, "single")


# --------------------------------------------------------------------------
# transformations


def scale_profile(p: TapProfile, target_ds: float, target_k_db: float) -> TapProfile:
    """Retarget K-factor and RMS delay spread; total power stays 1."""
    if target_ds < 0:
        raise ValueError("target_ds must be >= 0")
    scattered = p.scattered_powers
    spec_new = specular_fraction(target_k_db)
    if scattered.sum() <= 0 and spec_new < 1:
        raise ValueError("profile has no scattered power to retarget K")
    if scattered.sum() > 0:
        scattered = scattered * (1.0 - spec_new) / scattered.sum()
    powers = scattered.copy()
    powers[0] += spec_new

    delays = p.delays
    current = rms_delay_spread(delays, scattered)
    if current == 0:
        if target_ds > 0:
            raise ValueError("cannot impose a delay spread on a profile with no spread")
    elif target_ds == 0:
        raise ValueError("target_ds = 0 would collapse distinct taps")
    elif target_ds != current:
        delays = delays * (target_ds / current)
    taps = tuple(Tap(float(d), float(w), t.is_los) for d, w, t in zip(delays, powers, p.taps))
    ds = rms_delay_spread(delays, scattered)
    return replace(p, taps=taps, rms_delay_spread=ds, k_factor_db=float(target_k_db))


# --------------------------------------------------------------------------
# random draws


def draw_gains(p: TapProfile, n: int, rng: np.random.Generator,
               los: LosGainSpec | None = None, theta: float = 0.0) -> np.ndarray:
    """Draw ``n`` independent tap-gain vectors, shape ``(n, num_taps)``.

    Without ``los`` the tap powers come from the profile: the LoS tap mean
    is sqrt(specular power), every zero-mean part matches its scattered power.
    With ``los`` every path uses the same sigma and the LoS mean is nu.
    """
    L = p.num_taps
    z = rng.standard_normal((n, L)) + 1j * rng.standard_normal((n, L))
    if los is None:
        std = np.sqrt(p.scattered_powers / 2.0)
        mean = math.sqrt(p.los_specular_power) * np.exp(1j * theta)
    else:
        std = np.full(L, los.sigma)
        mean = los.nu * np.exp(1j * los.theta)
    g = z * std
    g[:, 0] += mean
    return g


def draw_cir(p: TapProfile, rng: np.random.Generator, los: LosGainSpec | None = None,
             theta: float = 0.0) -> CirRealization:
    return CirRealization(draw_gains(p, 1, rng, los, theta)[0], p.delays)


def draw_reciprocal_pair(p: TapProfile, rng: np.random.Generator, los: LosGainSpec | None = None,
                         theta: float = 0.0) -> tuple[CirRealization, CirRealization]:
    """Alice and Bob see the same CIR; the copy is exact."""
    h = draw_cir(p, rng, los, theta)
    return h, CirRealization(h.gains.copy(), h.delays.copy())


def correlated_eve_gains(alice: np.ndarray, fresh: np.ndarray, p: TapProfile, rho: float,
                         los: LosGainSpec | None = None, theta: float = 0.0) -> np.ndarray:
    """Mix Eve's zero-mean tap components with Alice's.

    ``fresh`` is an independent draw from :func:`draw_gains`. The specular
    LoS mean is common to both and is left alone, so ``rho = 0`` returns
    ``fresh`` unchanged.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    if rho == 0.0:
        return fresh
    if los is None:
        mean = math.sqrt(p.los_specular_power) * np.exp(1j * theta)
    else:
        mean = los.nu * np.exp(1j * los.theta)
    offset = np.zeros(p.num_taps, dtype=complex)
    offset[0] = mean
    return offset + rho * (alice - offset) + math.sqrt(1.0 - rho * rho) * (fresh - offset)


def empirical_k_factor_db(gains: np.ndarray) -> float:
    """|mean LoS gain|^2 over mean total scattered power, in dB."""
    los_mean = gains[:, 0].mean()
    scattered = gains.copy()
    scattered[:, 0] -= los_mean
    return 10 * math.log10(abs(los_mean) ** 2 / np.mean(np.sum(np.abs(scattered) ** 2, axis=1)))
