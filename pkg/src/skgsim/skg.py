"""Secret-key rate bounds from mutual information estimates."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

from .mi import MiEstimate


@dataclass(frozen=True)
class RateBounds:
    """``lower <= R <= upper`` in bits per observation."""

    lower: float
    upper: float
    i_ab: float
    i_ae: float
    clamped: bool = False

    def __post_init__(self):
        if not 0 <= self.lower <= self.upper:
            raise ValueError("need 0 <= lower <= upper")


def _bits(x) -> float:
    return x.bits if isinstance(x, MiEstimate) else float(x)


def skg_bounds(i_ab, i_ae) -> RateBounds:
    """Bounds ``I(A;B) - I(A;E) <= R <= I(A;B)``.

    Accepts :class:`MiEstimate` objects or plain values in bits. A negative
    lower bound is vacuous; it is reported as 0 with ``clamped=True``.
    """
    if isinstance(i_ab, MiEstimate) and isinstance(i_ae, MiEstimate) \
            and i_ab.n_samples != i_ae.n_samples:
        warnings.warn(f"sample counts differ: {i_ab.n_samples} vs {i_ae.n_samples}", stacklevel=2)
    ab, ae = _bits(i_ab), _bits(i_ae)
    gap = ab - ae
    return RateBounds(max(gap, 0.0), ab, ab, ae, clamped=gap < 0)
