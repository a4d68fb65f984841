"""Generative samplers for channel and noise power.

These draw the underlying complex Gaussians and add them up; they never
touch the closed-form densities, so they serve as the independent check on
:mod:`skgsim.analytic`.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .chanmodel import LosGainSpec, TapProfile, draw_gains

CHUNK = 20_000


def _flat_profile(L: int) -> TapProfile:
    return TapProfile.from_arrays(np.arange(L) * 1e-9, np.ones(L), k_factor_db=-np.inf)


def sample_path_gains(L: int, nu: float, sigma: float, n: int, rng: np.random.Generator):
    """``n`` draws of the L path gains, LoS first: shape ``(n, L)``."""
    return draw_gains(_flat_profile(L), n, rng, LosGainSpec(nu, sigma))


def sample_channel_power(case: str, nu: float, sigma: float, n: int, rng: np.random.Generator,
                         L: int | None = None, bins: Sequence[int] | None = None,
                         model: str = "per_path") -> np.ndarray:
    """Physical channel power ``Z^2`` for one resolution case.

    ``case`` is ``unresolved``, ``resolved`` or ``hybrid`` (needs ``bins``).
    In the hybrid case the first bin sums coherently; ``model`` picks whether
    the later bins add path powers (``per_path``) or sum coherently per bin
    (``per_bin``).
    """
    if case == "hybrid":
        if not bins:
            raise ValueError("hybrid case needs bins")
        L = sum(bins)
    if L is None:
        raise ValueError("L is required")
    out = np.empty(n)
    for start in range(0, n, CHUNK):
        m = min(CHUNK, n - start)
        g = sample_path_gains(L, nu, sigma, m, rng)
        if case == "unresolved":
            p = np.abs(g.sum(axis=1)) ** 2
        elif case == "resolved":
            p = np.sum(np.abs(g) ** 2, axis=1)
        elif case == "hybrid":
            edges = np.cumsum([0, *bins])
            p = np.abs(g[:, : edges[1]].sum(axis=1)) ** 2
            for lo, hi in zip(edges[1:-1], edges[2:]):
                if model == "per_path":
                    p += np.sum(np.abs(g[:, lo:hi]) ** 2, axis=1)
                else:
                    p += np.abs(g[:, lo:hi].sum(axis=1)) ** 2
        else:
            raise ValueError(f"unknown case {case!r}")
        out[start:start + m] = p
    return out


def sample_noise_power(C: int, sigma_w: float, n: int, rng: np.random.Generator,
                       chunk_samples: int = 20_000_000) -> np.ndarray:
    """Per-frame noise power from C real samples of variance 2 sigma_w^2.

    Power is the sample variance (mean removed, C-1 degrees of freedom).
    """
    out = np.empty(n)
    rows = max(1, chunk_samples // C)
    std = np.sqrt(2.0) * sigma_w
    for start in range(0, n, rows):
        m = min(rows, n - start)
        w = rng.standard_normal((m, C))
        w *= std
        out[start:start + m] = np.var(w, axis=1, ddof=1)
    return out


def sample_total_power(case: str, nu: float, sigma: float, n: int, rng: np.random.Generator,
                       C: int, sigma_w: float, **kw) -> np.ndarray:
    return sample_channel_power(case, nu, sigma, n, rng, **kw) + sample_noise_power(C, sigma_w, n, rng)
