"""Limiting spectral laws: Marchenko-Pastur, semicircle, and the D-bar map.

All functions are pure.  Complex arguments are plain Python ``complex``;
densities accept scalars or arrays.
"""

from __future__ import annotations

import cmath
import math
from typing import NamedTuple

import numpy as np

from .errors import DomainError

__all__ = [
    "CLOSED_FORM_TOL",
    "SupportInterval",
    "mp_support",
    "mp_density",
    "mp_atom_at_zero",
    "mp_stieltjes",
    "semicircle_support",
    "semicircle_density",
    "semicircle_stieltjes",
    "dbar",
    "dbar_inv",
]

# Default absolute tolerance for closed-form identities.
CLOSED_FORM_TOL = 1e-12


class SupportInterval(NamedTuple):
    lower: float
    upper: float


def _check_ratio(gamma: float, name: str = "gamma") -> float:
    gamma = float(gamma)
    if not math.isfinite(gamma) or gamma <= 0.0:
        raise DomainError(f"{name} must be finite and positive, got {gamma!r}")
    return gamma


def mp_support(gamma: float) -> SupportInterval:
    """Support ``[(1-sqrt(g))^2, (1+sqrt(g))^2]`` of the continuous MP part."""
    g = _check_ratio(gamma)
    r = math.sqrt(g)
    return SupportInterval((1.0 - r) ** 2, (1.0 + r) ** 2)


def mp_atom_at_zero(gamma: float) -> float:
    """Mass of the MP point mass at the origin (nonzero only for gamma > 1)."""
    g = _check_ratio(gamma)
    return max(0.0, 1.0 - 1.0 / g)


def mp_density(x, gamma: float):
    """Continuous part of the Marchenko-Pastur density with unit variance.

    The atom at zero for ``gamma > 1`` is not included; see
    :func:`mp_atom_at_zero`.
    """
    g = _check_ratio(gamma)
    lo, hi = mp_support(g)
    xa = np.asarray(x, dtype=float)
    inside = (xa > lo) & (xa < hi) & (xa > 0.0)
    safe = np.where(inside, xa, 1.0)
    val = np.sqrt(np.clip((hi - safe) * (safe - lo), 0.0, None)) / (2.0 * math.pi * g * safe)
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


def _on_real_segment(z: complex, lo: float, hi: float, *, closed_lo: bool, closed_hi: bool) -> bool:
    if z.imag != 0.0:
        return False
    x = z.real
    above_lo = x >= lo if closed_lo else x > lo
    below_hi = x <= hi if closed_hi else x < hi
    return above_lo and below_hi


def mp_stieltjes(z: complex, gamma: float) -> complex:
    """Stieltjes transform ``s(z) = int (x - z)^{-1} dF(x)`` of the MP law.

    Closed form ``(1 - g - z + R(z)) / (2 g z)`` where ``R(z)`` is the
    branch of ``sqrt((1 + g - z)^2 - 4g)`` that is analytic off the
    support and behaves like ``z`` at infinity.  It is evaluated as
    ``sqrt(z - l-) * sqrt(z - l+)`` with principal roots; for real
    ``z > l+`` this is the positive real root.
    """
    g = _check_ratio(gamma)
    z = complex(z)
    if not (cmath.isfinite(z)):
        raise DomainError(f"z must be finite, got {z!r}")
    lo, hi = mp_support(g)
    # The upper edge is accepted as a one-sided limit; the rest of the
    # support (and the origin, where the atom or 1/z sits) is rejected.
    if _on_real_segment(z, lo, hi, closed_lo=True, closed_hi=False):
        raise DomainError(f"z={z} lies on the support [{lo}, {hi}]")
    if z == 0:
        raise DomainError("z=0 is not in the domain of the MP Stieltjes transform")
    root = cmath.sqrt(z - lo) * cmath.sqrt(z - hi)
    return (1.0 - g - z + root) / (2.0 * g * z)


def semicircle_support() -> SupportInterval:
    return SupportInterval(-2.0, 2.0)


def semicircle_density(x):
    """Semicircle density ``(2 pi)^{-1} sqrt((4 - x^2)_+)``."""
    xa = np.asarray(x, dtype=float)
    out = np.sqrt(np.clip(4.0 - xa * xa, 0.0, None)) / (2.0 * math.pi)
    return float(out) if out.ndim == 0 else out


def semicircle_stieltjes(z: complex) -> complex:
    """Stieltjes transform ``(-z + sqrt(z^2 - 4)) / 2`` of the semicircle law.

    Uses ``sqrt(z - 2) * sqrt(z + 2)`` so the transform is odd under
    ``z -> -z`` on the real axis.  The edges ``+-2`` are accepted as
    one-sided limits.
    """
    z = complex(z)
    if not cmath.isfinite(z):
        raise DomainError(f"z must be finite, got {z!r}")
    if _on_real_segment(z, -2.0, 2.0, closed_lo=False, closed_hi=False):
        raise DomainError(f"z={z} lies inside the support (-2, 2)")
    root = cmath.sqrt(z - 2.0) * cmath.sqrt(z + 2.0)
    return (-z + root) / 2.0


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not (0.0 < beta < 1.0):
        raise DomainError(f"beta must lie in (0, 1), got {beta!r}")
    return beta


def dbar(z: float, beta: float) -> float:
    """D-bar map, decreasing from ``beta^{-1/2}`` at the bulk edge to 0.

    ``z`` must satisfy ``z >= (1 + sqrt(beta))^2``; the edge itself is
    evaluated as the closed-form limit.
    """
    b = _check_beta(beta)
    z = float(z)
    edge = (1.0 + math.sqrt(b)) ** 2
    if not math.isfinite(z) or z < edge:
        raise DomainError(f"z={z} must be at or beyond the bulk edge {edge}")
    # Extended precision keeps z - edge accurate when z sits next to the
    # edge, where the map is steep.  The conjugate form of
    # -(1 + b - z + sqrt(disc)) / (2b) avoids cancellation for large z.
    zl = np.longdouble(z)
    bl = np.longdouble(b)
    rb = np.sqrt(bl)
    disc = (zl - (1 - rb) ** 2) * (zl - (1 + rb) ** 2)
    return float(2 / (zl - 1 - bl + np.sqrt(max(disc, np.longdouble(0)))))


def dbar_inv(t: float, beta: float) -> float:
    """Compositional inverse ``(t + 1)(beta t + 1) / t`` of :func:`dbar`."""
    b = _check_beta(beta)
    t = float(t)
    if not (0.0 < t < 1.0 / math.sqrt(b)):
        raise DomainError(f"t={t} must lie in (0, {1.0 / math.sqrt(b)})")
    tl = np.longdouble(t)
    return float((tl + 1) * (np.longdouble(b) * tl + 1) / tl)
