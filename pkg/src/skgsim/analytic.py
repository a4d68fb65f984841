"""Closed-form RSS power densities and grid convolution.

All densities live on uniform grids (:class:`GridPdf`). Channel-power cases:

* unresolved: every path lands in one delay bin, ``|sum Z_i|^2``;
* fully resolved: every path in its own bin, ``sum |Z_i|^2``;
* hybrid: the LoS bin sums coherently, later bins add their powers.

Noise power per frame follows Gamma((C-1)/2, 4 sigma^2/(C-1)). Totals are
channel and noise densities convolved numerically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import signal, special, stats

DEFAULT_POINTS = 2 ** 14
SPAN_STDS = 12.0
TAIL_MASS = 1e-12  # grids extend at least to this upper-tail quantile


def _weights(n: int, dx: float) -> np.ndarray:
    """Cell widths: interior cells are centred on their node, end cells are half cells."""
    w = np.full(n, dx)
    w[[0, -1]] = dx / 2
    return w


@dataclass(frozen=True)
class GridPdf:
    """Density tabulated at ``x0 + i*dx``.

    Node ``i`` owns the cell ``[x_i - dx/2, x_i + dx/2]`` clipped to the grid
    ends and carries that cell's probability, ``density[i] * width_i``. The
    total is the trapezoid integral of ``density``; moments and convolution
    treat the grid as this discrete measure, so convolving adds means and
    variances exactly.
    """

    x0: float
    dx: float
    density: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.density, dtype=float)
        if not self.dx > 0:
            raise ValueError("dx must be positive")
        if d.ndim != 1 or len(d) < 2:
            raise ValueError("density must be a 1-D array of length >= 2")
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            raise ValueError("density must be finite and non-negative")
        object.__setattr__(self, "density", d)

    @classmethod
    def normalized(cls, x0: float, dx: float, density) -> "GridPdf":
        d = np.clip(np.asarray(density, dtype=float), 0.0, None)
        total = float(np.sum(d * _weights(len(d), dx)))
        if not total > 0:
            raise ValueError("density has no mass on the grid")
        return cls(x0, dx, d / total)

    @classmethod
    def from_masses(cls, x0: float, dx: float, masses) -> "GridPdf":
        m = np.clip(np.asarray(masses, dtype=float), 0.0, None)
        return cls.normalized(x0, dx, m / _weights(len(m), dx))

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(len(self.density))

    @property
    def masses(self) -> np.ndarray:
        return self.density * _weights(len(self.density), self.dx)

    def __len__(self):
        return len(self.density)

    def integral(self) -> float:
        return float(np.sum(self.masses))

    def mean(self) -> float:
        return float(np.sum(self.x * self.masses))

    def var(self) -> float:
        m = self.mean()
        return float(np.sum((self.x - m) ** 2 * self.masses))

    def _edges(self) -> tuple[np.ndarray, np.ndarray]:
        n = len(self)
        e = self.x0 + self.dx * (np.arange(n + 1) - 0.5)
        e[0], e[-1] = self.x0, self.x0 + self.dx * (n - 1)
        c = np.concatenate(([0.0], np.cumsum(self.masses)))
        return e, c / c[-1]

    def cdf_values(self) -> np.ndarray:
        """CDF at the nodes."""
        return self.cdf(self.x)

    def cdf(self, x) -> np.ndarray:
        """CDF with probability spread uniformly across each cell."""
        e, c = self._edges()
        return np.interp(x, e, c, left=0.0, right=1.0)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Inverse-CDF draws."""
        e, c = self._edges()
        keep = np.concatenate(([True], np.diff(c) > 0))
        return np.interp(rng.random(n), c[keep], e[keep])

    def ks_distance(self, samples) -> float:
        """One-sample Kolmogorov-Smirnov distance to empirical ``samples``."""
        s = np.sort(np.asarray(samples, dtype=float))
        n = len(s)
        f = self.cdf(s)
        i = np.arange(1, n + 1)
        return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))

    def rescale(self, factor: float) -> "GridPdf":
        """Density of ``factor * X``."""
        if not factor > 0:
            raise ValueError("factor must be positive")
        return GridPdf(self.x0 * factor, self.dx * factor, self.density / factor)

    def resample(self, dx: float, x0: float | None = None) -> "GridPdf":
        """Move onto a grid of step ``dx``, keeping total mass and mean.

        Each source node's probability is split linearly between the two
        target nodes around it, so a density narrower than ``dx`` collapses
        onto one or two nodes.
        """
        x0 = self.x0 if x0 is None else x0
        t = (self.x - x0) / dx
        if t[0] < -1e-9:
            raise ValueError("target grid starts above the density's support")
        t = np.maximum(t, 0.0)
        j = np.floor(t).astype(int)
        frac = t - j
        n = max(int(j[-1]) + 2, 2)
        m = self.masses
        out = np.bincount(j, m * (1 - frac), minlength=n) + np.bincount(j + 1, m * frac, minlength=n)
        return GridPdf.from_masses(x0, dx, out[:n])

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("x,density\n")
            for xi, di in zip(self.x, self.density):
                fh.write(f"{xi!r},{di!r}\n")


def _cell_masses(cdf, x0: float, dx: float, n: int, sf=None) -> np.ndarray:
    """Probability of each clipped cell of an ``n``-node grid.

    With ``sf`` the upper half of the grid differences the survival function,
    which keeps far-tail cells accurate.
    """
    e = x0 + dx * (np.arange(n + 1) - 0.5)
    e[0], e[-1] = x0, x0 + dx * (n - 1)
    c = np.asarray(cdf(e), dtype=float)
    m = np.diff(c)
    if sf is not None:
        upper = e[:-1] > e[n // 2]
        m_sf = -np.diff(np.asarray(sf(e), dtype=float))
        m = np.where(upper, m_sf, m)
    return np.clip(m, 0.0, None)


@dataclass(frozen=True)
class HybridBins:
    bin_sizes: tuple[int, ...]
    nu: float
    sigma: float

    def __post_init__(self):
        sizes = tuple(int(b) for b in self.bin_sizes)
        object.__setattr__(self, "bin_sizes", sizes)
        if len(sizes) < 2:
            raise ValueError("hybrid resolution needs M >= 2 bins")
        if any(b < 1 for b in sizes):
            raise ValueError("every bin holds at least one path")
        if self.nu < 0 or not self.sigma > 0:
            raise ValueError("need nu >= 0 and sigma > 0")

    @property
    def num_paths(self) -> int:
        return sum(self.bin_sizes)


@dataclass(frozen=True)
class NoiseFrameSpec:
    C: int
    sigma_w: float

    def __post_init__(self):
        if self.C < 2:
            raise ValueError("C must be >= 2")
        if not self.sigma_w > 0:
            raise ValueError("sigma_w must be > 0")

    @property
    def shape(self) -> float:
        return (self.C - 1) / 2

    @property
    def scale(self) -> float:
        return 4 * self.sigma_w ** 2 / (self.C - 1)


# --------------------------------------------------------------------------
# point densities


def gamma_pdf(x, shape: float, scale: float):
    """Gamma density, shape/scale convention, evaluated in log space.

    At ``x = 0`` the density is ``inf`` for ``shape < 1``. Grids never
    evaluate it there: they are built from cell probabilities.
    """
    if not (shape > 0 and scale > 0):
        raise ValueError("shape and scale must be positive")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be >= 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        logf = (shape - 1) * np.log(x) - x / scale - special.gammaln(shape) - shape * math.log(scale)
        out = np.exp(logf)
    at0 = x == 0
    if np.any(at0):
        out = np.where(at0, np.inf if shape < 1 else (1 / scale if shape == 1 else 0.0), out)
    return out[()] if out.ndim == 0 else out


def ncx2_pdf(x, dof: float, noncentrality: float):
    """Noncentral chi-square density via the exponentially scaled Bessel I."""
    k, lam = float(dof), float(noncentrality)
    if k < 1 or lam < 0:
        raise ValueError("need dof >= 1 and noncentrality >= 0")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be >= 0")
    if lam == 0:
        return gamma_pdf(x, k / 2, 2.0)
    v = k / 2 - 1
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.sqrt(lam * x)
        scaled = special.ive(v, z)
        # small-argument form where the scaled Bessel value underflows
        log_iv = np.where(scaled > 0, np.log(scaled) + z,
                          v * np.log(z / 2) - special.gammaln(v + 1))
        logf = -math.log(2) - (x + lam) / 2 + (v / 2) * np.log(x / lam) + log_iv
        out = np.exp(logf)
    at0 = x == 0
    if np.any(at0):
        edge = 0.5 * math.exp(-lam / 2) if k == 2 else (np.inf if k < 2 else 0.0)
        out = np.where(at0, edge, out)
    return out[()] if out.ndim == 0 else out


def ncx2_moments(dof: float, noncentrality: float) -> tuple[float, float]:
    return dof + noncentrality, 2 * (dof + 2 * noncentrality)


def welch_satterthwaite(shapes: Sequence[float], scales: Sequence[float]) -> tuple[float, float]:
    """Single Gamma (shape, scale) matching the mean and variance of a Gamma sum."""
    k = np.asarray(shapes, dtype=float)
    t = np.asarray(scales, dtype=float)
    mean = float(np.sum(k * t))
    var = float(np.sum(k * t * t))
    return mean * mean / var, var / mean


# --------------------------------------------------------------------------
# grids


def _grid(mean: float, std: float, n_points: int, upper: float = 0.0) -> tuple[float, float]:
    lo = mean - SPAN_STDS * std
    x0 = lo if lo > 0 else 0.0
    hi = max(mean + SPAN_STDS * std, upper)
    return x0, (hi - x0) / (n_points - 1)


def _from_cdf(cdf, sf, x0: float, dx: float, n: int) -> GridPdf:
    return GridPdf.from_masses(x0, dx, _cell_masses(cdf, x0, dx, n, sf))


def gamma_grid(shape: float, scale: float, n_points: int = DEFAULT_POINTS,
               dx: float | None = None) -> GridPdf:
    if not (shape > 0 and scale > 0):
        raise ValueError("shape and scale must be positive")
    mean, std = shape * scale, math.sqrt(shape) * scale
    upper = max(mean + SPAN_STDS * std, float(special.gammainccinv(shape, TAIL_MASS)) * scale)
    x0, step = _grid(mean, std, n_points, upper)
    if dx is not None:
        x0, step = 0.0, dx
        n_points = int(math.ceil(upper / dx)) + 1
    return _from_cdf(lambda x: special.gammainc(shape, x / scale),
                     lambda x: special.gammaincc(shape, x / scale), x0, step, n_points)


def ncx2_grid(dof: float, noncentrality: float, n_points: int = DEFAULT_POINTS,
              dx: float | None = None) -> GridPdf:
    if dof < 1 or noncentrality < 0:
        raise ValueError("need dof >= 1 and noncentrality >= 0")
    mean, var = ncx2_moments(dof, noncentrality)
    std = math.sqrt(var)
    if noncentrality == 0:
        dist = stats.chi2(dof)
    else:
        dist = stats.ncx2(dof, noncentrality)
    upper = max(mean + SPAN_STDS * std, float(dist.isf(TAIL_MASS)))
    x0, step = _grid(mean, std, n_points, upper)
    if dx is not None:
        x0, step = 0.0, dx
        n_points = int(math.ceil(upper / dx)) + 1
    return _from_cdf(dist.cdf, dist.sf, x0, step, n_points)


# --------------------------------------------------------------------------
# channel power cases


def chan_pdf_unresolved(L: int, nu: float, sigma: float, physical: bool = False,
                        n_points: int = DEFAULT_POINTS) -> GridPdf:
    """``|sum Z_i|^2 / (L sigma^2) ~ ncx2(2, nu^2/(L sigma^2))``."""
    _check_paths(L, nu, sigma)
    scale = L * sigma ** 2
    pdf = ncx2_grid(2, nu ** 2 / scale, n_points)
    return pdf.rescale(scale) if physical else pdf


def chan_pdf_fully_resolved(L: int, nu: float, sigma: float, physical: bool = False,
                            n_points: int = DEFAULT_POINTS) -> GridPdf:
    """``sum |Z_i|^2 / sigma^2 ~ ncx2(2L, nu^2/sigma^2)``."""
    _check_paths(L, nu, sigma)
    pdf = ncx2_grid(2 * L, nu ** 2 / sigma ** 2, n_points)
    return pdf.rescale(sigma ** 2) if physical else pdf


def diffuse_gamma(sizes: Sequence[int], sigma: float, model: str = "per_path") -> tuple[float, float]:
    """Gamma (shape, scale) for the power collected in the non-LoS bins.

    ``per_path``: every path's power adds, exactly Gamma(sum L_i, 2 sigma^2).
    ``per_bin``: each bin sums coherently to Gamma(1, 2 L_i sigma^2); the sum
    of those is moment-matched to one Gamma.
    """
    sizes = list(sizes)
    if model == "per_path":
        return float(sum(sizes)), 2 * sigma ** 2
    if model == "per_bin":
        return welch_satterthwaite([1.0] * len(sizes), [2 * s * sigma ** 2 for s in sizes])
    raise ValueError(f"unknown diffuse model {model!r}")


def hybrid_pdf(first_bin: int, diffuse_sizes: Sequence[int], nu: float, sigma: float,
               model: str = "per_path", n_points: int = DEFAULT_POINTS) -> GridPdf:
    """Physical power density: coherent LoS bin plus diffuse bins.

    ``diffuse_sizes`` may be empty, which leaves only the LoS bin.
    """
    _check_paths(first_bin, nu, sigma)
    s1 = first_bin * sigma ** 2
    lam = nu ** 2 / s1
    m1, v1 = ncx2_moments(2, lam)
    m1, v1 = m1 * s1, v1 * s1 ** 2
    if not diffuse_sizes:
        return ncx2_grid(2, lam, n_points).rescale(s1)
    shape, scale = diffuse_gamma(diffuse_sizes, sigma, model)
    mean = m1 + shape * scale
    std = math.sqrt(v1 + shape * scale ** 2)
    dx = (mean + SPAN_STDS * std) / (n_points - 1)
    first = ncx2_grid(2, lam, dx=dx / s1).rescale(s1)
    rest = gamma_grid(shape, scale, dx=dx)
    return convolve_pdfs(first, rest)


def chan_pdf_hybrid(bins: HybridBins, physical: bool = True, model: str = "per_path",
                    n_points: int = DEFAULT_POINTS) -> GridPdf:
    pdf = hybrid_pdf(bins.bin_sizes[0], bins.bin_sizes[1:], bins.nu, bins.sigma, model, n_points)
    return pdf if physical else pdf.rescale(1 / bins.sigma ** 2)


def _check_paths(L, nu, sigma):
    if L < 1:
        raise ValueError("need at least one path")
    if nu < 0 or not sigma > 0:
        raise ValueError("need nu >= 0 and sigma > 0")


def resolvable_bins(delay_spread: float, period: float) -> int:
    """ceil(T_m / T), at least 1; ratios within 1e-9 of an integer snap to it."""
    if not period > 0:
        raise ValueError("period must be positive")
    if delay_spread < 0:
        raise ValueError("delay spread must be >= 0")
    r = delay_spread / period
    nearest = round(r)
    if abs(r - nearest) <= 1e-9 * max(1.0, r):
        r = nearest
    return max(1, math.ceil(r))


def noise_power_pdf(spec: NoiseFrameSpec, n_points: int = DEFAULT_POINTS) -> GridPdf:
    """Gamma((C-1)/2, 4 sigma_w^2/(C-1)) on a grid around its mass."""
    return gamma_grid(spec.shape, spec.scale, n_points)


# --------------------------------------------------------------------------
# convolution


def convolve_pdfs(p: GridPdf, q: GridPdf) -> GridPdf:
    """Density of the sum of independent variables with densities ``p``, ``q``.

    Grids with different steps are brought to the coarser step by
    mass-preserving resampling of the finer one.
    """
    if not math.isclose(p.dx, q.dx, rel_tol=1e-9):
        if p.dx > q.dx:
            q = q.resample(p.dx)
        else:
            p = p.resample(q.dx)
    out = signal.fftconvolve(p.masses, q.masses)
    return GridPdf.from_masses(p.x0 + q.x0, p.dx, out)


def total_power_pdf(chan: GridPdf, noise: GridPdf) -> GridPdf:
    return convolve_pdfs(chan, noise)
