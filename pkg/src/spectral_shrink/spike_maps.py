"""Eigenvalue bias maps, their partial inverses, and eigenvector cosines.

Four regimes are covered, each with its own coordinate system for the spike:

* ``proportional`` (raw spike ``l``, aspect ratio ``gamma`` fixed),
* ``dzero``  (gamma -> 0, hat scale ``l_hat``),
* ``dinf``   (gamma -> infinity, bar scale ``l_bar``),
* ``wigner`` (spiked Wigner, signal strength ``theta``, any sign).

Functions are vectorized over the spike/eigenvalue argument.  A bare
float or array is interpreted in the framework's native scale; a
:class:`SpikeValue` is checked against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from .errors import ContractError, DomainError

__all__ = [
    "Scale",
    "FrameworkKind",
    "Framework",
    "SpikeValue",
    "CoordinateMaps",
    "eigmap",
    "eigmap_inv",
    "cosine2",
    "transition_point",
    "bulk_edge",
    "signal_plus_noise_eigenvalue",
    "signal_plus_noise_cosines",
    "signal_plus_noise_normalized_limit",
    "to_hat",
    "from_hat",
    "psi_hat",
    "to_bar",
    "from_bar",
]


class Scale(str, Enum):
    RAW = "raw"
    HAT = "hat"
    BAR = "bar"
    THETA = "theta"


class FrameworkKind(str, Enum):
    PROPORTIONAL = "proportional"
    DZERO = "dzero"
    DINF = "dinf"
    WIGNER = "wigner"


_NATIVE_SCALE = {
    FrameworkKind.PROPORTIONAL: Scale.RAW,
    FrameworkKind.DZERO: Scale.HAT,
    FrameworkKind.DINF: Scale.BAR,
    FrameworkKind.WIGNER: Scale.THETA,
}


@dataclass(frozen=True)
class Framework:
    """Asymptotic regime.  ``gamma`` is set only for the proportional one."""

    kind: FrameworkKind
    gamma: float | None = None

    def __post_init__(self) -> None:
        kind = FrameworkKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is FrameworkKind.PROPORTIONAL:
            if self.gamma is None:
                raise DomainError("proportional framework needs gamma")
            g = float(self.gamma)
            if not math.isfinite(g) or g <= 0.0:
                raise DomainError(f"gamma must be finite and positive, got {self.gamma!r}")
            object.__setattr__(self, "gamma", g)
        elif self.gamma is not None:
            raise DomainError(f"{kind.value} framework does not take gamma")

    @classmethod
    def proportional(cls, gamma: float) -> Framework:
        return cls(FrameworkKind.PROPORTIONAL, gamma)

    @classmethod
    def dzero(cls) -> Framework:
        return cls(FrameworkKind.DZERO)

    @classmethod
    def dinf(cls) -> Framework:
        return cls(FrameworkKind.DINF)

    @classmethod
    def wigner(cls) -> Framework:
        return cls(FrameworkKind.WIGNER)

    @classmethod
    def parse(cls, text: str) -> Framework:
        """Parse ``prop:<gamma>``, ``dzero``, ``dinf`` or ``wigner``."""
        t = text.strip().lower()
        if t.startswith("prop:"):
            try:
                g = float(t[5:])
            except ValueError as exc:
                raise DomainError(f"bad gamma in framework {text!r}") from exc
            return cls.proportional(g)
        try:
            kind = FrameworkKind(t)
        except ValueError as exc:
            raise DomainError(f"unknown framework {text!r}") from exc
        if kind is FrameworkKind.PROPORTIONAL:
            raise DomainError("use prop:<gamma> for the proportional framework")
        return cls(kind)

    @property
    def scale(self) -> Scale:
        return _NATIVE_SCALE[self.kind]

    def label(self) -> str:
        if self.kind is FrameworkKind.PROPORTIONAL:
            return f"prop:{self.gamma!r}"
        return self.kind.value


@dataclass(frozen=True)
class SpikeValue:
    value: float | np.ndarray
    scale: Scale

    def __post_init__(self) -> None:
        object.__setattr__(self, "scale", Scale(self.scale))


SpikeLike = Union[SpikeValue, float, np.ndarray]


def _unwrap(spike: SpikeLike, fw: Framework) -> tuple[np.ndarray, bool]:
    if isinstance(spike, SpikeValue):
        if spike.scale is not fw.scale:
            raise ContractError(
                f"spike on {spike.scale.value} scale used with {fw.label()} "
                f"framework (expects {fw.scale.value})"
            )
        spike = spike.value
    arr = np.asarray(spike)
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(float)
    if np.any(np.isnan(arr)):
        raise DomainError("spike is NaN")
    return arr, arr.ndim == 0


def _wrap(out: np.ndarray, scalar: bool):
    return out[()] if scalar else out


def transition_point(fw: Framework) -> float:
    """Critical spike below which eigenvalues stick to the bulk edge."""
    if fw.kind is FrameworkKind.PROPORTIONAL:
        return 1.0 + math.sqrt(fw.gamma)
    if fw.kind is FrameworkKind.DINF:
        return 0.0
    return 1.0


def bulk_edge(fw: Framework) -> float:
    """Upper bulk edge on the framework's eigenvalue scale."""
    if fw.kind is FrameworkKind.PROPORTIONAL:
        return (1.0 + math.sqrt(fw.gamma)) ** 2
    if fw.kind is FrameworkKind.DINF:
        return 1.0
    return 2.0


def eigmap(spike: SpikeLike, fw: Framework):
    """Almost-sure limit of the leading eigenvalue for a given spike."""
    x, scalar = _unwrap(spike, fw)
    kind = fw.kind
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind is FrameworkKind.PROPORTIONAL:
            g = fw.gamma
            sup = x > 1.0 + math.sqrt(g)
            out = np.where(sup, x + g * x / (x - 1.0), (1.0 + math.sqrt(g)) ** 2)
        elif kind is FrameworkKind.DZERO:
            out = np.where(x > 1.0, x + 1.0 / x, 2.0)
        elif kind is FrameworkKind.DINF:
            out = 1.0 + x
        else:
            out = np.where(np.abs(x) > 1.0, x + 1.0 / x, 2.0 * np.sign(x))
    return _wrap(np.asarray(out, dtype=x.dtype), scalar)


def eigmap_inv(lam, fw: Framework) -> SpikeValue:
    """Partial inverse of :func:`eigmap`; clamps to the transition below the edge.

    For the Wigner framework eigenvalues inside ``[-2, 2]`` map to 0.
    """
    lam_arr = np.asarray(lam)
    if not np.issubdtype(lam_arr.dtype, np.floating):
        lam_arr = lam_arr.astype(float)
    scalar = lam_arr.ndim == 0
    x = lam_arr
    kind = fw.kind
    with np.errstate(invalid="ignore"):
        if kind is FrameworkKind.PROPORTIONAL:
            g = fw.gamma
            r = math.sqrt(g)
            sup = x > (1.0 + r) ** 2
            # (x - 1 - g)^2 - 4g factored as (x - lower)(x - upper)
            disc = np.where(sup, (x - (1.0 - r) ** 2) * (x - (1.0 + r) ** 2), 0.0)
            out = np.where(sup, (x + 1.0 - g + np.sqrt(disc)) / 2.0, 1.0 + r)
        elif kind is FrameworkKind.DZERO:
            sup = x > 2.0
            disc = np.where(sup, (x - 2.0) * (x + 2.0), 0.0)
            out = np.where(sup, (x + np.sqrt(disc)) / 2.0, 1.0)
        elif kind is FrameworkKind.DINF:
            out = x - 1.0
        else:
            sup = np.abs(x) > 2.0
            disc = np.where(sup, (np.abs(x) - 2.0) * (np.abs(x) + 2.0), 0.0)
            out = np.where(sup, (x + np.sign(x) * np.sqrt(disc)) / 2.0, 0.0)
    out = np.asarray(out, dtype=x.dtype)
    return SpikeValue(_wrap(out, scalar), fw.scale)


def cosine2(spike: SpikeLike, fw: Framework):
    """Limiting squared cosine between leading sample and population eigenvectors."""
    x, scalar = _unwrap(spike, fw)
    kind = fw.kind
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind is FrameworkKind.PROPORTIONAL:
            g = fw.gamma
            sup = x > 1.0 + math.sqrt(g)
            d = np.where(sup, x - 1.0, 1.0)
            out = np.where(sup, (1.0 - g / d**2) / (1.0 + g / d), 0.0)
        elif kind is FrameworkKind.DZERO:
            out = np.where(x > 1.0, 1.0 - 1.0 / x**2, 0.0)
        elif kind is FrameworkKind.DINF:
            if np.any(x < 0.0):
                raise DomainError("bar-scale spike must be nonnegative")
            out = x / (1.0 + x)
        else:
            out = np.where(np.abs(x) > 1.0, 1.0 - 1.0 / x**2, 0.0)
    return _wrap(np.asarray(out, dtype=x.dtype), scalar)


# -- signal-plus-noise model ------------------------------------------------


def _check_tau(tau) -> np.ndarray:
    t = np.asarray(tau, dtype=float)
    if np.any(~(t > 0.0)):
        raise DomainError(f"tau must be positive, got {tau!r}")
    return t


def signal_plus_noise_eigenvalue(tau, beta: float):
    """Limit of the squared leading singular value of ``X~ / sqrt(m)``.

    Returns the bulk edge ``(1 + sqrt(beta))^2`` when ``tau <= 1``.
    """
    t = _check_tau(tau)
    b = float(beta)
    if not (0.0 < b < 1.0):
        raise DomainError(f"beta must lie in (0, 1), got {beta!r}")
    rb = math.sqrt(b)
    out = np.where(t > 1.0, 1.0 + (t**2 + t**-2) * rb + b, (1.0 + rb) ** 2)
    return out[()] if out.ndim == 0 else out


def signal_plus_noise_normalized_limit(tau):
    """Small-beta limit of ``(lambda - 1) / sqrt(beta)``: ``tau^2 + tau^-2`` or 2."""
    t = _check_tau(tau)
    out = np.where(t > 1.0, t**2 + t**-2, 2.0)
    return out[()] if out.ndim == 0 else out


def signal_plus_noise_cosines(tau):
    """Limiting (left, right) squared cosines as beta -> 0."""
    t = _check_tau(tau)
    left = np.where(t > 1.0, 1.0 - t**-4, 0.0)
    right = np.zeros_like(left)
    if left.ndim == 0:
        return float(left), float(right)
    return left, right


# -- normalized coordinates --------------------------------------------------


def _check_gamma_n(gamma_n: float) -> float:
    g = float(gamma_n)
    if not math.isfinite(g) or g <= 0.0:
        raise DomainError(f"gamma_n must be finite and positive, got {gamma_n!r}")
    return g


def to_hat(x, gamma_n: float):
    g = _check_gamma_n(gamma_n)
    x = np.asarray(x) if np.ndim(x) else x
    return (x - 1.0 - g) / math.sqrt(g)


def from_hat(x_hat, gamma_n: float):
    g = _check_gamma_n(gamma_n)
    x_hat = np.asarray(x_hat) if np.ndim(x_hat) else x_hat
    return 1.0 + math.sqrt(g) * x_hat + g


def psi_hat(x, gamma_n: float):
    """Shrinker output on the hat scale: ``(x - 1) / sqrt(gamma_n)``."""
    g = _check_gamma_n(gamma_n)
    x = np.asarray(x) if np.ndim(x) else x
    return (x - 1.0) / math.sqrt(g)


def to_bar(x, gamma_n: float):
    g = _check_gamma_n(gamma_n)
    x = np.asarray(x) if np.ndim(x) else x
    return (x - 1.0) / g


def from_bar(x_bar, gamma_n: float):
    g = _check_gamma_n(gamma_n)
    x_bar = np.asarray(x_bar) if np.ndim(x_bar) else x_bar
    return 1.0 + g * x_bar


@dataclass(frozen=True)
class CoordinateMaps:
    """Affine rescalings tied to one dataset's aspect ratio."""

    gamma_n: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "gamma_n", _check_gamma_n(self.gamma_n))

    def to_hat(self, x):
        return to_hat(x, self.gamma_n)

    def from_hat(self, x_hat):
        return from_hat(x_hat, self.gamma_n)

    def psi_hat(self, x):
        return psi_hat(x, self.gamma_n)

    def to_bar(self, x):
        return to_bar(x, self.gamma_n)

    def from_bar(self, x_bar):
        return from_bar(x_bar, self.gamma_n)
