"""Asymptotic losses, optimal shrinkers, hard thresholds and shrinkage rules.

Losses and shrinker outputs live on the normalized scale of their
framework (hat for ``dzero``, bar for ``dinf``, theta for ``wigner``); the
proportional framework works on the raw scale.  :func:`shrink_eigenvalue`
is the only function here that takes raw eigenvalues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .errors import ContractError, DomainError, NumericError
from .spike_maps import (
    Framework,
    FrameworkKind,
    SpikeLike,
    _unwrap,
    _wrap,
    cosine2,
    eigmap,
    eigmap_inv,
    from_bar,
    from_hat,
    to_bar,
    to_hat,
)

__all__ = [
    "Norm",
    "Flavor",
    "LossSpec",
    "RuleKind",
    "ShrinkageRule",
    "two_by_two_loss",
    "optimal_eta_formal",
    "optimal_loss_formal",
    "rank_aware_loss",
    "null_loss",
    "regret_and_improvement",
    "optimal_threshold",
    "threshold_crossing_spike",
    "agnostic_threshold",
    "agnostic_threshold_spike",
    "agnostic_eta",
    "rule_descriptor",
    "theory_loss",
    "raw_threshold",
    "shrink_eigenvalue",
]


class Norm(str, Enum):
    F = "F"
    O = "O"  # noqa: E741
    N = "N"

    @classmethod
    def parse(cls, text: str) -> Norm:
        key = text.strip().upper()
        aliases = {"FROBENIUS": "F", "OPERATOR": "O", "NUCLEAR": "N"}
        try:
            return cls(aliases.get(key, key))
        except ValueError as exc:
            raise DomainError(f"unknown norm {text!r}") from exc


class Flavor(str, Enum):
    # A(l) = diag(l, 1) against B = I + (eta - 1) u u'
    PROPORTIONAL_A = "proportional"
    # A(l) = diag(l, 0) against B = eta u u'
    TILDE_A = "tilde"


@dataclass(frozen=True)
class LossSpec:
    norm: Norm
    pivot: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "norm", Norm(self.norm))
        if self.pivot not in (1, 2, 3, 4, 5):
            raise DomainError(f"pivot must be in 1..5, got {self.pivot!r}")

    def check(self, fw: Framework) -> None:
        """Pivots 2..5 have no meaning for the gamma -> infinity and Wigner regimes."""
        if self.pivot != 1 and fw.kind in (FrameworkKind.DINF, FrameworkKind.WIGNER):
            raise ContractError(f"pivot {self.pivot} is not defined for the {fw.label()} framework")

    def label(self) -> str:
        return f"{self.norm.value}{self.pivot}"

    @classmethod
    def parse(cls, text: str) -> LossSpec:
        t = text.strip()
        if len(t) >= 2 and t[-1].isdigit():
            return cls(Norm.parse(t[:-1]), int(t[-1]))
        return cls(Norm.parse(t))


# -- 2x2 losses --------------------------------------------------------------


def _norms_from_sym2(a11, a12, a22, norm: Norm):
    """Norm of the symmetric 2x2 matrix [[a11, a12], [a12, a22]]."""
    if norm is Norm.F:
        return np.sqrt(a11 * a11 + a22 * a22 + 2 * a12 * a12)
    tr = a11 + a22
    root = np.sqrt((a11 - a22) ** 2 + 4 * a12 * a12)
    if norm is Norm.O:
        return (np.abs(tr) + root) / 2
    det = a11 * a22 - a12 * a12
    # eigenvalues of opposite sign: |l+| + |l-| = l+ - l-
    return np.where(det <= 0, root, np.abs(tr))


def two_by_two_loss(spike, c2, eta, norm: Norm | str, flavor: Flavor | str = Flavor.TILDE_A):
    """Norm of ``A(spike) - B(eta, c)`` for the 2x2 reduction of a rank-one loss.

    Vectorized; the result keeps the widest floating dtype of the inputs so
    that ``np.longdouble`` arguments are evaluated in extended precision.
    """
    norm = Norm(norm)
    flavor = Flavor(flavor)
    dtype = np.result_type(np.asarray(spike), np.asarray(c2), np.asarray(eta), np.float64)
    ell = np.asarray(spike, dtype=dtype)
    c2a = np.asarray(c2, dtype=dtype)
    et = np.asarray(eta, dtype=dtype)
    if np.any((c2a < 0) | (c2a > 1)) or np.any(np.isnan(c2a)):
        raise DomainError("c2 must lie in [0, 1]")
    s2 = 1 - c2a
    if flavor is Flavor.TILDE_A:
        d = ell - et
        if norm is Norm.F:
            out = np.sqrt(d * d + 2 * et * ell * s2)
        else:
            q = et * ell * s2
            root = np.sqrt(d * d + 4 * q)
            if norm is Norm.O:
                out = (np.abs(d) + root) / 2
            else:
                out = np.where(q >= 0, root, np.abs(d))
    else:
        cs = np.sqrt(c2a * s2)
        h = et - 1
        a11 = ell - 1 - h * c2a
        a12 = -h * cs
        a22 = -h * s2
        out = _norms_from_sym2(a11, a12, a22, norm)
    return out[()] if out.ndim == 0 else out


# -- formally optimal shrinkers ------------------------------------------------


def _pos(x):
    return np.maximum(x, 0)


def _dzero_eta(x, norm: Norm):
    with np.errstate(divide="ignore", invalid="ignore"):
        if norm is Norm.F:
            return np.where(x > 1, _pos(x - 1 / x), 0 * x)
        if norm is Norm.O:
            return np.where(x > 1, x, 0 * x)
        return np.where(x > 1, _pos(x - 2 / x), 0 * x)


def _dzero_loss(x, norm: Norm):
    with np.errstate(divide="ignore", invalid="ignore"):
        if norm is Norm.F:
            return np.where(x > 1, np.sqrt(np.abs(2 - 1 / (x * x))), x)
        if norm is Norm.O:
            return np.where(x > 1, 1 + 0 * x, x)
        return np.where(x > math.sqrt(2), 2 * np.sqrt(np.abs(1 - 1 / (x * x))), x)


def _proportional_eta(x, c2, norm: Norm, sup):
    s2 = 1 - c2
    if norm is Norm.F:
        return x * c2 + s2
    if norm is Norm.O:
        return np.where(sup, x, 1 + 0 * x)
    return 1 + (x - 1) * _pos(1 - 2 * s2)


def _proportional_loss(x, c2, norm: Norm):
    s2 = 1 - c2
    s = np.sqrt(s2)
    if norm is Norm.F:
        return (x - 1) * s * np.sqrt(2 - s2)
    if norm is Norm.O:
        return (x - 1) * s
    return np.where(c2 > s2, 2 * (x - 1) * s * np.sqrt(c2), x - 1)


def optimal_eta_formal(spike: SpikeLike, norm: Norm | str, fw: Framework):
    """Closed-form minimizer of the asymptotic rank-one loss.

    Where the operator-norm minimizer is not unique (below the transition)
    the canonical choice 0 is returned (1 on the proportional raw scale).
    """
    norm = Norm(norm)
    x, scalar = _unwrap(spike, fw)
    kind = fw.kind
    if kind is FrameworkKind.DZERO:
        out = _dzero_eta(x, norm)
    elif kind is FrameworkKind.WIGNER:
        out = np.sign(x) * _dzero_eta(np.abs(x), norm)
    elif kind is FrameworkKind.DINF:
        if np.any(x < 0):
            raise DomainError("bar-scale spike must be nonnegative")
        if norm is Norm.F:
            out = x * x / (1 + x)
        elif norm is Norm.O:
            out = x.copy()
        else:
            out = x * _pos((x - 1) / (x + 1))
    else:
        if np.any(x < 1):
            raise DomainError("raw spike must be at least 1")
        c2 = cosine2(x, fw)
        out = _proportional_eta(x, c2, norm, x > 1 + math.sqrt(fw.gamma))
    return _wrap(np.asarray(out), scalar)


def optimal_loss_formal(spike: SpikeLike, norm: Norm | str, fw: Framework):
    """Asymptotic loss attained by :func:`optimal_eta_formal`."""
    norm = Norm(norm)
    x, scalar = _unwrap(spike, fw)
    kind = fw.kind
    if kind is FrameworkKind.DZERO:
        out = _dzero_loss(x, norm)
    elif kind is FrameworkKind.WIGNER:
        out = _dzero_loss(np.abs(x), norm)
    elif kind is FrameworkKind.DINF:
        if np.any(x < 0):
            raise DomainError("bar-scale spike must be nonnegative")
        if norm is Norm.F:
            out = x * np.sqrt(2 * x + 1) / (x + 1)
        elif norm is Norm.O:
            out = x / np.sqrt(1 + x)
        else:
            out = np.where(x > 1, 2 * x * np.sqrt(x) / (x + 1), x)
    else:
        if np.any(x < 1):
            raise DomainError("raw spike must be at least 1")
        out = _proportional_loss(x, cosine2(x, fw), norm)
    return _wrap(np.asarray(out), scalar)


def rank_aware_loss(spike: SpikeLike, norm: Norm | str, fw: Framework):
    """Asymptotic loss of keeping the leading eigenvalue unchanged."""
    norm = Norm(norm)
    x, scalar = _unwrap(spike, fw)
    kind = fw.kind
    if kind in (FrameworkKind.DZERO, FrameworkKind.WIGNER):
        a = np.abs(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            if norm is Norm.F:
                out = np.where(a < 1, np.sqrt(a * a + 4), np.sqrt(2 + 3 / (a * a)))
            elif norm is Norm.O:
                out = np.where(a < 1, 2 + 0 * a, (1 + np.sqrt(5 + 4 * a * a)) / (2 * a))
            else:
                out = np.where(a < 1, a + 2, np.sqrt(4 + 5 / (a * a)))
    elif kind is FrameworkKind.DINF:
        if np.any(x < 0):
            raise DomainError("bar-scale spike must be nonnegative")
        if norm is Norm.F:
            out = np.sqrt(1 + 2 * x)
        elif norm is Norm.O:
            out = (1 + np.sqrt(1 + 4 * x)) / 2
        else:
            out = np.sqrt(1 + 4 * x)
    else:
        if np.any(x < 1):
            raise DomainError("raw spike must be at least 1")
        out = two_by_two_loss(x, cosine2(x, fw), eigmap(x, fw), norm, Flavor.PROPORTIONAL_A)
    return _wrap(np.asarray(out), scalar)


def null_loss(spike: SpikeLike, norm: Norm | str, fw: Framework):
    """Loss of discarding the component (shrinking to the noise level)."""
    x, scalar = _unwrap(spike, fw)
    out = np.abs(x) if fw.kind is not FrameworkKind.PROPORTIONAL else x - 1
    return _wrap(np.asarray(out), scalar)


def regret_and_improvement(spike: SpikeLike, norm: Norm | str, fw: Framework):
    """Absolute regret of the rank-aware rule and the fraction recovered by the optimum."""
    ra = rank_aware_loss(spike, norm, fw)
    opt = optimal_loss_formal(spike, norm, fw)
    regret = ra - opt
    return regret, regret / ra


# -- hard thresholds -------------------------------------------------------------

_CROSSING = {
    (FrameworkKind.DZERO, Norm.F): math.sqrt(3.0),
    (FrameworkKind.DZERO, Norm.O): math.sqrt(1.0 + math.sqrt(2.0)),
    (FrameworkKind.DZERO, Norm.N): math.sqrt(5.0),
    (FrameworkKind.DINF, Norm.F): 1.0 + math.sqrt(2.0),
    (FrameworkKind.DINF, Norm.O): 2.0,
    (FrameworkKind.DINF, Norm.N): 2.0 + math.sqrt(5.0),
}

_THRESHOLD = {
    (FrameworkKind.DZERO, Norm.F): 4.0 / math.sqrt(3.0),
    (FrameworkKind.DZERO, Norm.O): math.sqrt(2.0 * (1.0 + math.sqrt(2.0))),
    (FrameworkKind.DZERO, Norm.N): 6.0 / math.sqrt(5.0),
    (FrameworkKind.DINF, Norm.F): 2.0 + math.sqrt(2.0),
    (FrameworkKind.DINF, Norm.O): 3.0,
    (FrameworkKind.DINF, Norm.N): 3.0 + math.sqrt(5.0),
}


def _threshold_kind(fw: Framework) -> FrameworkKind:
    # the Wigner regime shares the gamma -> 0 thresholds
    if fw.kind is FrameworkKind.WIGNER:
        return FrameworkKind.DZERO
    if fw.kind is FrameworkKind.PROPORTIONAL:
        raise ContractError("use agnostic_threshold for the proportional framework")
    return fw.kind


def threshold_crossing_spike(norm: Norm | str, fw: Framework) -> float:
    """Spike at which keeping and discarding the eigenvalue lose equally."""
    return _CROSSING[(_threshold_kind(fw), Norm(norm))]


def optimal_threshold(norm: Norm | str, fw: Framework) -> float:
    """Optimal hard threshold on the framework's normalized eigenvalue scale."""
    return _THRESHOLD[(_threshold_kind(fw), Norm(norm))]


def _agnostic_residual(x: float, g: float, norm: Norm) -> float:
    # x = theta - 1 > sqrt(g); work with excess spike to keep small-gamma accuracy
    lam1 = x + g * (1.0 + x) / x
    c2 = (1.0 - g / (x * x)) / (1.0 + g / x)
    if norm is Norm.F:
        # scaled by 1/x^2 so the tolerance is relative
        return ((lam1 - 2.0 * x * c2) * lam1) / (x * x)
    ra = float(two_by_two_loss(x, c2, lam1, norm, Flavor.TILDE_A))
    return (ra - x) / x


def agnostic_threshold_spike(gamma: float, norm: Norm | str = Norm.F) -> float:
    """Raw spike at which the rank-aware and null rules lose equally at aspect ratio gamma."""
    norm = Norm(norm)
    g = float(gamma)
    if not math.isfinite(g) or g <= 0.0:
        raise DomainError(f"gamma must be finite and positive, got {gamma!r}")
    r = math.sqrt(g)
    lo, hi = r + 1e-9 * max(1.0, r), 1e3 * (1.0 + g)
    f_lo = _agnostic_residual(lo, g, norm)
    f_hi = _agnostic_residual(hi, g, norm)
    if not (f_lo > 0.0 > f_hi):
        raise NumericError(f"agnostic threshold not bracketed for gamma={g!r}")
    x = brentq(_agnostic_residual, lo, hi, args=(g, norm), xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return 1.0 + x


def agnostic_threshold(gamma: float, norm: Norm | str = Norm.F) -> float:
    """Framework-agnostic hard threshold on the raw eigenvalue scale."""
    theta = agnostic_threshold_spike(gamma, norm)
    return float(eigmap(theta, Framework.proportional(gamma)))


# -- observable rules --------------------------------------------------------------


class RuleKind(str, Enum):
    IDENTITY = "identity"
    RANK_AWARE = "rank_aware"
    OPTIMAL = "optimal"
    HARD_THRESHOLD = "threshold"
    AGNOSTIC = "agnostic"


@dataclass(frozen=True)
class ShrinkageRule:
    """An eigenvalue shrinkage rule together with the context it needs.

    ``p`` is the matrix dimension, needed only by the operator-norm rules
    that threshold at ``2 + p^(-2/3 + operator_epsilon)`` on the hat scale;
    ``operator_bulk_edge`` replaces that threshold with the bulk edge.
    ``threshold`` (raw scale) overrides the optimal hard threshold.
    """

    kind: RuleKind
    framework: Framework
    gamma_n: float
    rank_r: int = 1
    norm: Norm | None = None
    operator_epsilon: float = 0.1
    p: int | None = None
    threshold: float | None = None
    operator_bulk_edge: bool = False

    def __post_init__(self) -> None:
        kind = RuleKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.norm is not None:
            object.__setattr__(self, "norm", Norm(self.norm))
        g = float(self.gamma_n)
        if not math.isfinite(g) or g <= 0.0:
            raise DomainError(f"gamma_n must be finite and positive, got {self.gamma_n!r}")
        object.__setattr__(self, "gamma_n", g)
        if int(self.rank_r) != self.rank_r or self.rank_r < 0:
            raise DomainError(f"rank_r must be a nonnegative integer, got {self.rank_r!r}")
        if kind in (RuleKind.OPTIMAL, RuleKind.AGNOSTIC) and self.norm is None:
            raise ContractError(f"{kind.value} rule needs a norm")
        if kind is RuleKind.HARD_THRESHOLD and self.norm is None and self.threshold is None:
            raise ContractError("threshold rule needs a norm or an explicit threshold")
        if not self.operator_epsilon > 0.0:
            raise DomainError("operator_epsilon must be positive")

    def label(self) -> str:
        if self.kind in (RuleKind.IDENTITY, RuleKind.RANK_AWARE):
            return self.kind.value
        if self.kind is RuleKind.HARD_THRESHOLD and self.norm is None:
            return f"threshold({self.threshold!r})"
        return f"{self.kind.value}({self.norm.value})"

    def with_context(self, **changes) -> ShrinkageRule:
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return ShrinkageRule(**fields)


def _operator_hat_cutoff(rule: ShrinkageRule) -> float:
    if rule.operator_bulk_edge:
        return 2.0
    if rule.p is None:
        raise ContractError("operator-norm rule needs the dimension p (or operator_bulk_edge)")
    return 2.0 + float(rule.p) ** (-2.0 / 3.0 + rule.operator_epsilon)


def agnostic_eta(lam, norm: Norm | str, gamma: float):
    """Proportional-regime optimal shrinker applied at aspect ratio ``gamma``.

    The operator-norm version here is unthresholded (``l(lam)`` above the
    bulk edge, 1 below); :func:`shrink_eigenvalue` adds the finite-p cutoff.
    """
    norm = Norm(norm)
    fw = Framework.proportional(gamma)
    ell = np.asarray(eigmap_inv(lam, fw).value)
    c2 = cosine2(ell, fw)
    sup = np.asarray(lam) > (1.0 + math.sqrt(fw.gamma)) ** 2
    out = _proportional_eta(ell, c2, norm, sup)
    return out[()] if np.ndim(out) == 0 else out


def raw_threshold(rule: ShrinkageRule) -> float:
    """Hard threshold of ``rule`` on the raw eigenvalue scale."""
    if rule.threshold is not None:
        return float(rule.threshold)
    fw = rule.framework
    if fw.kind is FrameworkKind.PROPORTIONAL:
        return agnostic_threshold(rule.gamma_n, rule.norm)
    t = optimal_threshold(rule.norm, fw)
    if fw.kind is FrameworkKind.DZERO:
        return float(from_hat(t, rule.gamma_n))
    if fw.kind is FrameworkKind.DINF:
        return float(from_bar(t, rule.gamma_n))
    return t


def shrink_eigenvalue(lam, rule: ShrinkageRule):
    """Apply ``rule`` to raw eigenvalue(s) ``lam``.

    For the Wigner framework the noise level is 0 rather than 1 and the
    rule is applied with odd symmetry.
    """
    la = np.asarray(lam, dtype=float)
    scalar = la.ndim == 0
    fw = rule.framework
    wig = fw.kind is FrameworkKind.WIGNER
    if not wig and np.any(la < 0):
        raise DomainError("eigenvalues must be nonnegative")
    g = rule.gamma_n
    kind = rule.kind
    norm = rule.norm

    if kind in (RuleKind.IDENTITY, RuleKind.RANK_AWARE):
        out = la.copy()
    elif kind is RuleKind.HARD_THRESHOLD:
        tau = raw_threshold(rule)
        if wig:
            out = np.where(np.abs(la) >= tau, la, 0.0)
        else:
            out = np.where(la >= tau, la, 1.0)
    elif kind is RuleKind.AGNOSTIC or (kind is RuleKind.OPTIMAL and fw.kind is FrameworkKind.PROPORTIONAL):
        gamma = g if kind is RuleKind.AGNOSTIC else fw.gamma
        out = np.asarray(agnostic_eta(la, norm, gamma), dtype=float)
        if norm is Norm.O:
            cut = (1.0 + math.sqrt(gamma)) ** 2 + (_operator_hat_cutoff(rule) - 2.0) * math.sqrt(gamma)
            keep = la >= cut if not rule.operator_bulk_edge else la > cut
            out = np.where(keep, out, 1.0)
    elif fw.kind is FrameworkKind.DZERO:
        xh = np.asarray(to_hat(la, g))
        ell = np.asarray(eigmap_inv(xh, fw).value)
        eta = _dzero_eta(ell, norm)
        if norm is Norm.O:
            cut = _operator_hat_cutoff(rule)
            keep = xh > cut if rule.operator_bulk_edge else xh >= cut
            eta = np.where(keep, ell, 0.0)
        out = 1.0 + math.sqrt(g) * eta
    elif fw.kind is FrameworkKind.DINF:
        ell = np.maximum(np.asarray(to_bar(la, g)) - 1.0, 0.0)
        out = 1.0 + g * np.asarray(optimal_eta_formal(ell, norm, fw))
    else:
        theta = np.asarray(eigmap_inv(la, fw).value)
        out = np.asarray(optimal_eta_formal(theta, norm, fw), dtype=float)
    return float(out) if scalar else out


# -- theory descriptors -------------------------------------------------------------


def rule_descriptor(kind: RuleKind | str, norm: Norm | str | None, spike: SpikeLike, fw: Framework):
    """Limit of a rule's output at the leading eigenvalue, on the framework scale."""
    kind = RuleKind(kind)
    x, scalar = _unwrap(spike, fw)
    lam = np.asarray(eigmap(x, fw))
    if kind in (RuleKind.IDENTITY, RuleKind.RANK_AWARE):
        out = lam
    elif kind is RuleKind.OPTIMAL or kind is RuleKind.AGNOSTIC:
        out = np.asarray(optimal_eta_formal(x, norm, fw))
    else:
        if fw.kind is FrameworkKind.PROPORTIONAL:
            tau = agnostic_threshold(fw.gamma, norm)
            out = np.where(lam >= tau, lam, 1.0)
        else:
            tau = optimal_threshold(norm, fw)
            out = np.where(np.abs(lam) >= tau, lam, 0.0)
    return _wrap(out, scalar)


def theory_loss(kind: RuleKind | str, rule_norm: Norm | str | None, loss_norm: Norm | str, spike: SpikeLike, fw: Framework):
    """Asymptotic rank-one loss of a rule under ``loss_norm``."""
    x, scalar = _unwrap(spike, fw)
    eta = rule_descriptor(kind, rule_norm, x, fw)
    c2 = cosine2(x, fw)
    if fw.kind is FrameworkKind.PROPORTIONAL:
        out = two_by_two_loss(x, c2, eta, loss_norm, Flavor.PROPORTIONAL_A)
    else:
        out = two_by_two_loss(x, c2, eta, loss_norm, Flavor.TILDE_A)
    return _wrap(np.asarray(out), scalar)
