"""Matrix-level estimators built on the scalar shrinkage rules."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DomainError, NumericError
from .shrinkage import Norm, RuleKind, ShrinkageRule, shrink_eigenvalue
from .spike_maps import Framework, eigmap_inv, to_hat

__all__ = [
    "ORTHO_TOL",
    "SYMMETRY_TOL",
    "EDGE_TOL",
    "EigenSystem",
    "SvdSystem",
    "SpikeEstimate",
    "sample_covariance",
    "cov_shrink",
    "wigner_denoise",
    "estimate_spikes",
    "calibrate_noise",
]

ORTHO_TOL = 1e-8
SYMMETRY_TOL = 1e-8
EDGE_TOL = 1e-12


def _check_orthonormal(vectors: np.ndarray, name: str) -> None:
    k = vectors.shape[1]
    err = np.max(np.abs(vectors.T @ vectors - np.eye(k))) if k else 0.0
    if err > ORTHO_TOL:
        raise DomainError(f"{name} are not orthonormal (max deviation {err:.3g})")


def _check_symmetric(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{name} has non-finite entries")
    asym = np.max(np.abs(m - m.T)) if m.size else 0.0
    if asym > SYMMETRY_TOL:
        raise DomainError(f"{name} is not symmetric (max |S - S'| = {asym:.3g})")
    return m


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues in descending order with matching orthonormal columns."""

    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        vecs = np.asarray(self.vectors, dtype=float)
        if vecs.ndim != 2 or vecs.shape[1] != vals.shape[0]:
            raise DomainError("vectors must have one column per eigenvalue")
        if np.any(np.diff(vals) > 0):
            raise DomainError("eigenvalues must be sorted in descending order")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "vectors", vecs)

    @classmethod
    def checked(cls, values, vectors) -> EigenSystem:
        es = cls(values, vectors)
        _check_orthonormal(es.vectors, "eigenvectors")
        return es

    @classmethod
    def from_symmetric(cls, s: np.ndarray) -> EigenSystem:
        s = _check_symmetric(s)
        try:
            w, v = np.linalg.eigh(s)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"eigendecomposition failed: {exc}") from exc
        return cls(w[::-1].copy(), v[:, ::-1].copy())

    @classmethod
    def from_data(cls, x: np.ndarray) -> EigenSystem:
        """Nonzero spectrum of ``S = X X' / n`` for a p x n data matrix.

        Only the leading ``min(p, n)`` eigenpairs are returned; the rest
        are zero.  Uses a thin SVD when ``p > n``.
        """
        x = np.asarray(x, dtype=float)
        if x.ndim != 2:
            raise DomainError("data must be a 2-D array")
        p, n = x.shape
        if p <= n:
            return cls.from_symmetric(sample_covariance(x))
        try:
            u, sv, _ = np.linalg.svd(x, full_matrices=False)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"SVD failed: {exc}") from exc
        return cls(sv**2 / n, u)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True)
class SvdSystem:
    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray

    def __post_init__(self) -> None:
        sv = np.asarray(self.singular_values, dtype=float)
        if np.any(sv < 0) or np.any(np.diff(sv) > 0):
            raise DomainError("singular values must be nonnegative and descending")
        object.__setattr__(self, "singular_values", sv)

    @classmethod
    def from_matrix(cls, x: np.ndarray) -> SvdSystem:
        x = np.asarray(x, dtype=float)
        try:
            u, sv, vt = np.linalg.svd(x, full_matrices=False)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"SVD failed: {exc}") from exc
        return cls(sv, u, vt.T)


@dataclass(frozen=True)
class SpikeEstimate:
    tau_hat: float
    lambda_observed: float
    normalized: float
    predicted_left_c2: float
    predicted_right_c2: float
    supercritical: bool


def sample_covariance(x: np.ndarray) -> np.ndarray:
    """``X X' / n`` for a p x n data matrix, symmetrized exactly."""
    x = np.asarray(x, dtype=float)
    n = x.shape[1]
    if n == 0:
        raise DomainError("data matrix has no columns")
    s = (x @ x.T) / n
    return (s + s.T) / 2.0


def cov_shrink(s: np.ndarray, rule: ShrinkageRule, from_data: bool = False):
    """Shrink the leading ``rule.rank_r`` eigenvalues of a covariance matrix.

    Returns ``(sigma_hat, shrunk_values)`` where ``sigma_hat`` is
    ``I + sum_i (eta_i - 1) v_i v_i'`` over the leading eigenvectors.
    With ``from_data`` the input is a p x n data matrix.
    """
    es = EigenSystem.from_data(s) if from_data else EigenSystem.from_symmetric(s)
    p = es.dim
    r = rule.rank_r
    if r > p or r > es.values.shape[0]:
        raise ContractError(f"rank_r={r} exceeds the available eigenvalues ({min(p, es.values.shape[0])})")
    if rule.p is None and rule.norm is Norm.O and rule.kind in (RuleKind.OPTIMAL, RuleKind.AGNOSTIC):
        rule = rule.with_context(p=p)
    lead = es.values[:r]
    if np.any(lead < 0):
        # tiny negative eigenvalues from roundoff on PSD input
        if np.min(lead) < -1e-10 * max(1.0, float(np.max(np.abs(es.values)))):
            raise DomainError("covariance has negative eigenvalues")
        lead = np.maximum(lead, 0.0)
    eta = np.asarray(shrink_eigenvalue(lead, rule), dtype=float) if r else np.zeros(0)
    if np.any(eta < 0):
        raise NumericError("shrinkage rule produced a negative eigenvalue")
    vecs = es.vectors[:, :r]
    sigma_hat = np.eye(p) + (vecs * (eta - 1.0)) @ vecs.T
    sigma_hat = (sigma_hat + sigma_hat.T) / 2.0
    shrunk = np.ones(p)
    shrunk[:r] = eta
    return sigma_hat, shrunk


def wigner_denoise(y: np.ndarray, norm: Norm | str, r_plus: int, r_minus: int):
    """Optimal shrinkage denoiser for a spiked Wigner matrix.

    The top ``r_plus`` and bottom ``r_minus`` eigenvalues are shrunk with
    the bilateral optimal rule; all others are set to zero.  Returns
    ``(theta_hat, shrunk_values)`` with values in descending eigen-order.
    """
    es = EigenSystem.from_symmetric(y)
    n = es.dim
    if r_plus < 0 or r_minus < 0 or r_plus + r_minus > n:
        raise ContractError(f"need 0 <= r_plus + r_minus <= {n}")
    rule = ShrinkageRule(RuleKind.OPTIMAL, Framework.wigner(), 1.0, rank_r=r_plus + r_minus, norm=Norm(norm))
    idx = np.r_[np.arange(r_plus), np.arange(n - r_minus, n)].astype(int)
    shrunk = np.zeros(n)
    if idx.size:
        shrunk[idx] = shrink_eigenvalue(es.values[idx], rule)
    vecs = es.vectors[:, idx]
    theta_hat = (vecs * shrunk[idx]) @ vecs.T
    return (theta_hat + theta_hat.T) / 2.0, shrunk


def estimate_spikes(svd: SvdSystem, n: int, m: int, r: int) -> list[SpikeEstimate]:
    """Invert the signal-plus-noise eigenvalue limit for the top ``r`` components.

    ``svd`` is the SVD of ``X~ / sqrt(m)`` for an n x m observation.
    """
    if n <= 0 or m <= 0:
        raise DomainError("n and m must be positive")
    if r < 0 or r > min(n, m) or r > svd.singular_values.shape[0]:
        raise ContractError(f"r={r} exceeds min(n, m)")
    beta = n / m
    dz = Framework.dzero()
    out = []
    for sv in svd.singular_values[:r]:
        lam = float(sv) ** 2
        z = float(to_hat(lam, beta))
        # roundoff at the bulk edge must not read as a spike
        sup = z > 2.0 + EDGE_TOL
        ell = float(eigmap_inv(z, dz).value) if sup else 1.0
        tau = math.sqrt(ell)
        left = 1.0 - tau**-4 if sup else 0.0
        out.append(SpikeEstimate(tau, lam, z, left, 0.0, sup))
    return out


def calibrate_noise(values, shape: tuple[int, int]) -> float:
    """Noise variance estimate: lower median of the top ``min(n, p)`` eigenvalues."""
    vals = np.sort(np.asarray(values, dtype=float).ravel())[::-1]
    if vals.size == 0:
        raise DomainError("no eigenvalues to calibrate from")
    n, p = shape
    k = min(int(n), int(p), vals.size)
    if k <= 0:
        raise DomainError(f"bad shape {shape!r}")
    top = np.sort(vals[:k])
    return float(top[(k + 1) // 2 - 1])
