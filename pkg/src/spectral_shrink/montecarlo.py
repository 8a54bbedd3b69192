"""Seeded spiked-model generators, finite-matrix losses and the experiment runner.

Random streams: replicate ``k`` of a run with base seed ``s`` draws from
``Philox(SeedSequence(s, spawn_key=(k,)))``, so a replicate's numbers do
not depend on how many threads run or in which order.  Every sweep point
of a replicate reuses that stream (common random numbers across spikes).
Gaussian variates come from numpy's ``Generator.standard_normal``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError, ContractError, DomainError
from .estimators import EigenSystem
from .shrinkage import (
    LossSpec,
    Norm,
    RuleKind,
    ShrinkageRule,
    shrink_eigenvalue,
    theory_loss,
)
from .spike_maps import (
    Framework,
    FrameworkKind,
    bulk_edge,
    cosine2,
    eigmap,
    signal_plus_noise_cosines,
    signal_plus_noise_normalized_limit,
    to_bar,
    to_hat,
)

__all__ = [
    "THREADS_ENV",
    "ModelKind",
    "SpikedModelSpec",
    "Draw",
    "RuleSpec",
    "Assertion",
    "AssertionResult",
    "ExperimentConfig",
    "SimulationReport",
    "replicate_rng",
    "replicate_seed",
    "random_orthonormal",
    "gen_spiked_cov_data",
    "gen_signal_plus_noise",
    "gen_spiked_wigner",
    "empirical_loss",
    "low_rank_loss",
    "run_experiment",
    "evaluate_assertions",
    "thread_count",
]

THREADS_ENV = "SPECTRAL_SHRINK_THREADS"
_U64 = 2**64


class ModelKind(str, Enum):
    SPIKED_COVARIANCE = "spiked_covariance"
    SIGNAL_PLUS_NOISE = "signal_plus_noise"
    SPIKED_WIGNER = "spiked_wigner"


@dataclass(frozen=True)
class SpikedModelSpec:
    """Generative description of one spiked ensemble.

    ``p_or_m`` is the dimension p for covariance data (data is p x n), the
    column count m for signal-plus-noise (data is n x m), and is ignored
    for Wigner (n x n).  Spikes are raw ``l`` for covariance, ``tau`` for
    signal-plus-noise and ``theta`` for Wigner.
    """

    kind: ModelKind
    n: int
    p_or_m: int
    spikes: tuple[float, ...] = ()
    seed: int = 0
    replicates: int = 1
    rotate: bool = False
    bilateral: bool = False

    def __post_init__(self) -> None:
        kind = ModelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        spikes = tuple(float(s) for s in self.spikes)
        object.__setattr__(self, "spikes", spikes)
        if kind is ModelKind.SPIKED_WIGNER:
            object.__setattr__(self, "p_or_m", int(self.n))
        if self.n < 1 or self.p_or_m < 1:
            raise DomainError("dimensions must be positive")
        if not (0 <= int(self.seed) < _U64):
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.replicates < 1:
            raise DomainError("replicates must be at least 1")
        if any(not math.isfinite(s) for s in spikes):
            raise DomainError("spikes must be finite")
        if any(a < b for a, b in zip(spikes, spikes[1:])):
            raise DomainError("spikes must be sorted in descending order")
        r = len(spikes)
        if kind is ModelKind.SPIKED_COVARIANCE:
            floor_ok = all(s > 0 for s in spikes) if self.bilateral else all(s >= 1 for s in spikes)
            if not floor_ok:
                raise DomainError("covariance spikes must be >= 1 (or > 0 with bilateral)")
            if r > self.p_or_m:
                raise DomainError("more spikes than dimensions")
        elif kind is ModelKind.SIGNAL_PLUS_NOISE:
            if any(s < 0 for s in spikes):
                raise DomainError("signal strengths must be nonnegative")
            if r > min(self.n, self.p_or_m):
                raise DomainError("more spikes than min(n, m)")
        elif r > self.n:
            raise DomainError("more spikes than dimensions")

    @property
    def rank(self) -> int:
        return len(self.spikes)

    @property
    def aspect(self) -> float | None:
        """gamma = p / n for covariance, beta = n / m for signal-plus-noise."""
        if self.kind is ModelKind.SPIKED_COVARIANCE:
            return self.p_or_m / self.n
        if self.kind is ModelKind.SIGNAL_PLUS_NOISE:
            return self.n / self.p_or_m
        return None

    def with_spikes(self, spikes) -> SpikedModelSpec:
        return SpikedModelSpec(
            self.kind, self.n, self.p_or_m, tuple(spikes), self.seed, self.replicates, self.rotate, self.bilateral
        )


@dataclass(frozen=True)
class Draw:
    """One generated matrix with the true signal directions."""

    matrix: np.ndarray
    u: np.ndarray
    v: np.ndarray | None = None


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(replicate),))))


def replicate_seed(seed: int, replicate: int) -> int:
    """64-bit fingerprint of a replicate's stream, recorded in reports."""
    words = np.random.SeedSequence(int(seed), spawn_key=(int(replicate),)).generate_state(2, np.uint32)
    return int(words[0]) | (int(words[1]) << 32)


def random_orthonormal(rng: np.random.Generator, d: int, r: int) -> np.ndarray:
    """d x r orthonormal columns: QR of a Gaussian matrix with R's diagonal made positive."""
    if r == 0:
        return np.zeros((d, 0))
    q, rr = np.linalg.qr(rng.standard_normal((d, r)))
    signs = np.sign(np.diag(rr))
    signs[signs == 0] = 1.0
    return q * signs


def _require(spec: SpikedModelSpec, kind: ModelKind) -> None:
    if spec.kind is not kind:
        raise ContractError(f"expected a {kind.value} spec, got {spec.kind.value}")


def gen_spiked_cov_data(spec: SpikedModelSpec, replicate: int = 0) -> Draw:
    """p x n Gaussian data with covariance ``diag(l_1..l_r, 1..1)`` (optionally rotated)."""
    _require(spec, ModelKind.SPIKED_COVARIANCE)
    rng = replicate_rng(spec.seed, replicate)
    p, n, r = spec.p_or_m, spec.n, spec.rank
    q = random_orthonormal(rng, p, p) if spec.rotate else None
    z = rng.standard_normal((p, n))
    scale = np.ones(p)
    scale[:r] = np.sqrt(spec.spikes)
    x = z * scale[:, None]
    if q is not None:
        x = q @ x
        u = q[:, :r].copy()
    else:
        u = np.eye(p)[:, :r]
    return Draw(x, u)


def gen_signal_plus_noise(spec: SpikedModelSpec, replicate: int = 0) -> Draw:
    """n x m matrix ``X~`` with ``X~ / sqrt(m) = sum theta_i u_i v_i' + X / sqrt(m)``.

    ``theta_i = tau_i (n/m)^(1/4)``; u and v are random orthonormal sets.
    """
    _require(spec, ModelKind.SIGNAL_PLUS_NOISE)
    rng = replicate_rng(spec.seed, replicate)
    n, m, r = spec.n, spec.p_or_m, spec.rank
    u = random_orthonormal(rng, n, r)
    v = random_orthonormal(rng, m, r)
    noise = rng.standard_normal((n, m))
    theta = np.asarray(spec.spikes) * (n / m) ** 0.25
    signal = (u * (theta * math.sqrt(m))) @ v.T
    return Draw(signal + noise, u, v)


def gen_spiked_wigner(spec: SpikedModelSpec, replicate: int = 0) -> Draw:
    """``Y = sum theta_i u_i u_i' + W / sqrt(n)`` with W symmetric, N(0,1) on and above the diagonal."""
    _require(spec, ModelKind.SPIKED_WIGNER)
    rng = replicate_rng(spec.seed, replicate)
    n, r = spec.n, spec.rank
    u = random_orthonormal(rng, n, r)
    g = rng.standard_normal((n, n))
    w = np.triu(g) + np.triu(g, 1).T
    y = (u * np.asarray(spec.spikes)) @ u.T + w / math.sqrt(n)
    y = (y + y.T) / 2.0
    return Draw(y, u)


# -- finite-matrix losses -------------------------------------------------------


def _inverse_checked(m: np.ndarray, name: str) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
    if w.size and np.min(np.abs(w)) <= 1e-12 * scale:
        raise DomainError(f"{name} is singular; pivots 2-5 need invertible matrices")
    return (v / w) @ v.T


def _matrix_norm(d: np.ndarray, norm: Norm) -> float:
    if d.size == 0:
        return 0.0
    if norm is Norm.F:
        return float(np.linalg.norm(d, "fro"))
    sv = np.linalg.svd(d, compute_uv=False)
    return float(sv[0]) if norm is Norm.O else float(np.sum(sv))


def empirical_loss(sigma: np.ndarray, sigma_hat: np.ndarray, spec: LossSpec) -> float:
    """``||pivot_k(Sigma, Sigma_hat)||`` for the five pivots and three norms (unnormalized)."""
    a = np.asarray(sigma, dtype=float)
    b = np.asarray(sigma_hat, dtype=float)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"matrices must be square and the same shape, got {a.shape} and {b.shape}")
    k = spec.pivot
    eye = np.eye(a.shape[0])
    if k == 1:
        d = a - b
    elif k == 2:
        d = _inverse_checked(a, "Sigma") - _inverse_checked(b, "Sigma_hat")
    elif k == 3:
        _inverse_checked(b, "Sigma_hat")
        d = _inverse_checked(a, "Sigma") @ b - eye
    elif k == 4:
        _inverse_checked(a, "Sigma")
        d = _inverse_checked(b, "Sigma_hat") @ a - eye
    else:
        _inverse_checked(b, "Sigma_hat")
        w, v = np.linalg.eigh(a)
        if np.min(w) <= 1e-12 * max(1.0, float(np.max(w))):
            raise DomainError("Sigma must be positive definite for pivot 5")
        r = (v / np.sqrt(w)) @ v.T
        d = r @ b @ r - eye
    return _matrix_norm(d, spec.norm)


def low_rank_loss(base: float, u: np.ndarray, a_vals, v: np.ndarray, b_vals, spec: LossSpec) -> float:
    """Loss between ``base*I + U diag(a - base) U'`` and ``base*I + V diag(b - base) V'``.

    Both matrices act as ``base*I`` off ``span[U, V]``, where every pivot
    vanishes, so the loss is evaluated exactly on that span.
    """
    stacked = np.hstack([u, v])
    if stacked.shape[1] == 0:
        return 0.0
    q, sv, _ = np.linalg.svd(stacked, full_matrices=False)
    q = q[:, sv > 1e-10 * sv[0]]
    uc = q.T @ u
    vc = q.T @ v
    k = q.shape[1]
    a = base * np.eye(k) + (uc * (np.asarray(a_vals, dtype=float) - base)) @ uc.T
    b = base * np.eye(k) + (vc * (np.asarray(b_vals, dtype=float) - base)) @ vc.T
    return empirical_loss((a + a.T) / 2.0, (b + b.T) / 2.0, spec)


# -- configuration ---------------------------------------------------------------------


@dataclass(frozen=True)
class RuleSpec:
    kind: RuleKind
    norm: Norm | None = None
    threshold: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", RuleKind(self.kind))
        if self.norm is not None:
            object.__setattr__(self, "norm", Norm(self.norm))

    def label(self) -> str:
        if self.kind in (RuleKind.IDENTITY, RuleKind.RANK_AWARE):
            return self.kind.value
        if self.norm is None:
            return f"{self.kind.value}({self.threshold!r})"
        return f"{self.kind.value}({self.norm.value})"


@dataclass(frozen=True)
class Assertion:
    """A check on aggregate results.

    ``range``: mean of ``metric`` lies in ``[lo, hi]``.
    ``dominance``: mean loss of ``rule`` <= that of ``baseline``, and if
    ``sigmas`` > 0 the gap exceeds ``sigmas`` combined standard errors.
    ``improvement``: ``1 - mean(rule) / mean(baseline) >= lo``.
    """

    kind: str
    point: int = 0
    metric: str = "loss"
    index: int = 0
    rule: str | None = None
    baseline: str | None = None
    loss: str | None = None
    lo: float = -math.inf
    hi: float = math.inf
    sigmas: float = 0.0
    label: str = ""


@dataclass(frozen=True)
class AssertionResult:
    assertion: Assertion
    passed: bool
    value: float
    detail: str


@dataclass(frozen=True)
class ExperimentConfig:
    """A spike sweep over one model with a set of rules and losses.

    ``points`` holds one spike vector per sweep point on ``spike_scale``
    (``raw``/``hat``/``bar`` for covariance, converted with gamma = p/n;
    ``tau`` or ``theta`` for the other models).  ``framework`` selects the
    normalization and theory columns for covariance models.
    """

    model: SpikedModelSpec
    points: tuple[tuple[float, ...], ...]
    spike_scale: str = "raw"
    framework: Framework | None = None
    rules: tuple[RuleSpec, ...] = ()
    losses: tuple[LossSpec, ...] = ()
    rank: int | None = None
    operator_epsilon: float = 0.1
    operator_bulk_edge: bool = False
    assertions: tuple[Assertion, ...] = ()
    name: str = "experiment"

    def __post_init__(self) -> None:
        kind = self.model.kind
        if not self.points:
            raise ConfigError(["at least one sweep point is required"])
        problems = []
        allowed = {
            ModelKind.SPIKED_COVARIANCE: ("raw", "hat", "bar"),
            ModelKind.SIGNAL_PLUS_NOISE: ("tau",),
            ModelKind.SPIKED_WIGNER: ("theta",),
        }[kind]
        if self.spike_scale not in allowed:
            problems.append(f"spike_scale {self.spike_scale!r} not valid for {kind.value} (use {', '.join(allowed)})")
        if kind is ModelKind.SPIKED_COVARIANCE:
            if self.framework is None or self.framework.kind is FrameworkKind.WIGNER:
                problems.append("covariance experiments need a proportional, dzero or dinf framework")
        elif kind is ModelKind.SPIKED_WIGNER:
            if self.framework is not None and self.framework.kind is not FrameworkKind.WIGNER:
                problems.append("Wigner experiments use the wigner framework")
        elif self.rules:
            problems.append("signal-plus-noise experiments take no shrinkage rules")
        fw = self.framework
        for loss in self.losses:
            if fw is not None:
                try:
                    loss.check(fw)
                except ContractError as exc:
                    problems.append(str(exc))
            if kind is ModelKind.SPIKED_WIGNER and loss.pivot != 1:
                problems.append("Wigner losses use pivot 1 only")
        for rule in self.rules:
            if rule.kind in (RuleKind.OPTIMAL, RuleKind.AGNOSTIC, RuleKind.HARD_THRESHOLD) and rule.norm is None:
                if not (rule.kind is RuleKind.HARD_THRESHOLD and rule.threshold is not None):
                    problems.append(f"rule {rule.kind.value} needs a norm")
            if kind is ModelKind.SPIKED_WIGNER and rule.kind is RuleKind.AGNOSTIC:
                problems.append("agnostic rules apply to covariance models only")
        if problems:
            raise ConfigError(problems)
        # raw spikes must satisfy the model's own checks
        for i in range(len(self.points)):
            self.point_model(i)

    def point_model(self, i: int) -> SpikedModelSpec:
        pts = sorted((float(x) for x in self.points[i]), reverse=True)
        if self.spike_scale == "hat":
            g = self.model.p_or_m / self.model.n
            raw = [1.0 + x * math.sqrt(g) for x in pts]
        elif self.spike_scale == "bar":
            g = self.model.p_or_m / self.model.n
            raw = [1.0 + x * g for x in pts]
        else:
            raw = pts
        return self.model.with_spikes(raw)

    def rule_rank(self, spec: SpikedModelSpec) -> int:
        return spec.rank if self.rank is None else int(self.rank)


# -- report --------------------------------------------------------------------------


def _mean_stderr(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    mean = float(np.mean(arr))
    se = float(np.std(arr, ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return mean, se


@dataclass
class SimulationReport:
    name: str
    base_seed: int
    replicate_seeds: list[int]
    losses: list[dict] = field(default_factory=list)
    spectra: list[dict] = field(default_factory=list)
    loss_summary: list[dict] = field(default_factory=list)
    spectra_summary: list[dict] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def summarize(self) -> None:
        """(Re)build aggregate rows from the per-replicate rows."""
        groups: dict[tuple, list[float]] = {}
        keys: dict[tuple, dict] = {}
        for row in self.losses:
            k = (row["point"], row["rule"], row["loss"])
            groups.setdefault(k, []).append(row["value"])
            keys.setdefault(k, {"point": row["point"], "spike": row["spike"], "rule": row["rule"], "loss": row["loss"]})
        theory = {(t["point"], t["rule"], t["loss"]): t["theory"] for t in self.loss_summary}
        self.loss_summary = []
        for k, vals in groups.items():
            mean, se = _mean_stderr(vals)
            self.loss_summary.append({**keys[k], "mean": mean, "stderr": se, "theory": theory.get(k)})

        sgroups: dict[tuple, list[float]] = {}
        skeys: dict[tuple, dict] = {}
        for row in self.spectra:
            for metric in ("eigenvalue", "left_c2", "right_c2"):
                if row.get(metric) is None:
                    continue
                k = (row["point"], row["index"], metric)
                sgroups.setdefault(k, []).append(row[metric])
                skeys.setdefault(k, {"point": row["point"], "spike": row["spike"], "index": row["index"], "metric": metric})
        stheory = {(t["point"], t["index"], t["metric"]): t["theory"] for t in self.spectra_summary}
        self.spectra_summary = []
        for k, vals in sgroups.items():
            mean, se = _mean_stderr(vals)
            self.spectra_summary.append({**skeys[k], "mean": mean, "stderr": se, "theory": stheory.get(k)})

    def loss_stat(self, point: int, rule: str, loss: str) -> dict:
        for row in self.loss_summary:
            if row["point"] == point and row["rule"] == rule and row["loss"] == loss:
                return row
        raise KeyError((point, rule, loss))

    def spectrum_stat(self, point: int, metric: str, index: int = 0) -> dict:
        for row in self.spectra_summary:
            if row["point"] == point and row["metric"] == metric and row["index"] == index:
                return row
        raise KeyError((point, metric, index))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "metadata": self.metadata,
            "seeds": {"base": self.base_seed, "replicates": self.replicate_seeds},
            "aggregate": {"losses": self.loss_summary, "spectra": self.spectra_summary},
        }


# -- runner ------------------------------------------------------------------------------


def thread_count(explicit: int | None = None) -> int:
    if explicit is not None:
        n = explicit
    else:
        raw = os.environ.get(THREADS_ENV, "").strip()
        if not raw:
            return 1
        try:
            n = int(raw)
        except ValueError as exc:
            raise ConfigError([f"{THREADS_ENV} must be an integer, got {raw!r}"]) from exc
    if n < 1:
        raise ConfigError([f"thread count must be at least 1, got {n}"])
    return n


def _loss_normalizer(fw: Framework | None, gamma: float | None) -> float:
    if fw is None or gamma is None:
        return 1.0
    if fw.kind is FrameworkKind.DZERO:
        return math.sqrt(gamma)
    if fw.kind is FrameworkKind.DINF:
        return gamma
    return 1.0


def _eig_normalize(lam, fw: Framework | None, gamma: float | None):
    if fw is None or gamma is None:
        return lam
    if fw.kind is FrameworkKind.DZERO:
        return to_hat(lam, gamma)
    if fw.kind is FrameworkKind.DINF:
        return to_bar(lam, gamma)
    return lam


def _framework_spikes(cfg: ExperimentConfig, i: int) -> list[float]:
    """Spikes of sweep point i on the framework's own scale."""
    spec = cfg.point_model(i)
    fw = cfg.framework
    if spec.kind is not ModelKind.SPIKED_COVARIANCE:
        return list(spec.spikes)
    if cfg.spike_scale == fw.scale.value:
        # avoid a raw round trip that can nudge a spike across the transition
        return sorted((float(x) for x in cfg.points[i]), reverse=True)
    g = spec.aspect
    if fw.kind is FrameworkKind.DZERO:
        return [(s - 1.0) / math.sqrt(g) for s in spec.spikes]
    if fw.kind is FrameworkKind.DINF:
        return [(s - 1.0) / g for s in spec.spikes]
    return list(spec.spikes)


def _combine(values: list[float], norm: Norm) -> float:
    if not values:
        return 0.0
    if norm is Norm.F:
        return math.sqrt(sum(v * v for v in values))
    if norm is Norm.O:
        return max(values)
    return sum(values)


def _theory(cfg: ExperimentConfig, i: int) -> tuple[list[dict], list[dict]]:
    spec = cfg.point_model(i)
    spikes = _framework_spikes(cfg, i)
    lead = float(cfg.points[i][0]) if cfg.points[i] else 0.0
    n_idx = max(spec.rank, 1)
    spectra = []
    losses = []
    if spec.kind is ModelKind.SIGNAL_PLUS_NOISE:
        for j in range(n_idx):
            if j < spec.rank and spikes[j] > 0:
                ev = float(signal_plus_noise_normalized_limit(spikes[j]))
                left, right = signal_plus_noise_cosines(spikes[j])
            else:
                ev, left, right = 2.0, (0.0 if j < spec.rank else None), (0.0 if j < spec.rank else None)
            spectra += [
                {"point": i, "spike": lead, "index": j, "metric": "eigenvalue", "theory": ev},
                {"point": i, "spike": lead, "index": j, "metric": "left_c2", "theory": left},
                {"point": i, "spike": lead, "index": j, "metric": "right_c2", "theory": right},
            ]
        return spectra, losses

    fw = cfg.framework or Framework.wigner()
    for j in range(n_idx):
        if j < spec.rank:
            ev = float(eigmap(spikes[j], fw))
            c2 = float(cosine2(spikes[j], fw))
        else:
            ev, c2 = bulk_edge(fw), None
        spectra += [
            {"point": i, "spike": lead, "index": j, "metric": "eigenvalue", "theory": ev},
            {"point": i, "spike": lead, "index": j, "metric": "left_c2", "theory": c2},
        ]
    if cfg.rule_rank(spec) == spec.rank:
        for rule in cfg.rules:
            for loss in cfg.losses:
                if loss.pivot != 1 and fw.kind is not FrameworkKind.DZERO:
                    value = None
                elif rule.norm is None and rule.kind is RuleKind.HARD_THRESHOLD:
                    value = None
                else:
                    kind = RuleKind.RANK_AWARE if rule.kind is RuleKind.IDENTITY else rule.kind
                    per_spike = [float(theory_loss(kind, rule.norm, loss.norm, s, fw)) for s in spikes]
                    value = _combine(per_spike, loss.norm)
                losses.append({"point": i, "rule": rule.label(), "loss": loss.label(), "theory": value})
    return spectra, losses


def _run_replicate(cfg: ExperimentConfig, rep: int) -> tuple[list[dict], list[dict]]:
    loss_rows: list[dict] = []
    spec_rows: list[dict] = []
    for i in range(len(cfg.points)):
        spec = cfg.point_model(i)
        lead = float(cfg.points[i][0]) if cfg.points[i] else 0.0
        if spec.kind is ModelKind.SPIKED_COVARIANCE:
            _cov_replicate(cfg, spec, i, lead, rep, loss_rows, spec_rows)
        elif spec.kind is ModelKind.SIGNAL_PLUS_NOISE:
            _spn_replicate(spec, i, lead, rep, spec_rows)
        else:
            _wigner_replicate(cfg, spec, i, lead, rep, loss_rows, spec_rows)
    return loss_rows, spec_rows


def _cov_replicate(cfg, spec, i, lead, rep, loss_rows, spec_rows) -> None:
    fw = cfg.framework
    g = spec.aspect
    p = spec.p_or_m
    draw = gen_spiked_cov_data(spec, rep)
    es = EigenSystem.from_data(draw.matrix)
    r = spec.rank
    n_idx = max(r, 1)
    norm_eigs = np.asarray(_eig_normalize(es.values[:n_idx], fw, g), dtype=float)
    for j in range(n_idx):
        c2 = float(np.dot(es.vectors[:, j], draw.u[:, j]) ** 2) if j < r else None
        spec_rows.append(
            {"point": i, "spike": lead, "replicate": rep, "index": j,
             "eigenvalue": float(norm_eigs[j]), "left_c2": c2, "right_c2": None}
        )
    rank = cfg.rule_rank(spec)
    if rank > es.values.shape[0]:
        raise ContractError(f"rule rank {rank} exceeds the {es.values.shape[0]} available eigenvalues")
    scale = _loss_normalizer(fw, g)
    vals = np.maximum(es.values[:rank], 0.0)
    vecs = es.vectors[:, :rank]
    for rule in cfg.rules:
        srule = ShrinkageRule(
            rule.kind, fw, g, rank_r=rank, norm=rule.norm, operator_epsilon=cfg.operator_epsilon,
            p=p, threshold=rule.threshold, operator_bulk_edge=cfg.operator_bulk_edge,
        )
        eta = np.asarray(shrink_eigenvalue(vals, srule), dtype=float) if rank else np.zeros(0)
        for loss in cfg.losses:
            value = low_rank_loss(1.0, draw.u, spec.spikes, vecs, eta, loss) / scale
            loss_rows.append(
                {"point": i, "spike": lead, "replicate": rep, "rule": rule.label(), "loss": loss.label(), "value": value}
            )


def _spn_replicate(spec, i, lead, rep, spec_rows) -> None:
    draw = gen_signal_plus_noise(spec, rep)
    n, m = spec.n, spec.p_or_m
    beta = n / m
    u, sv, vt = np.linalg.svd(draw.matrix / math.sqrt(m), full_matrices=False)
    r = spec.rank
    for j in range(max(r, 1)):
        lam = float(sv[j]) ** 2
        left = float(np.dot(u[:, j], draw.u[:, j]) ** 2) if j < r else None
        right = float(np.dot(vt[j], draw.v[:, j]) ** 2) if j < r else None
        spec_rows.append(
            {"point": i, "spike": lead, "replicate": rep, "index": j,
             "eigenvalue": (lam - 1.0) / math.sqrt(beta), "left_c2": left, "right_c2": right}
        )


def _wigner_replicate(cfg, spec, i, lead, rep, loss_rows, spec_rows) -> None:
    draw = gen_spiked_wigner(spec, rep)
    es = EigenSystem.from_symmetric(draw.matrix)
    n = spec.n
    spikes = np.asarray(spec.spikes)
    r = spec.rank
    r_plus = int(np.sum(spikes >= 0))
    # spike j pairs with the j-th largest eigenvalue if nonnegative, else counted from the bottom
    idx = np.array([j if j < r_plus else n - r + j for j in range(r)], dtype=int)
    for j in range(max(r, 1)):
        k = idx[j] if j < r else 0
        c2 = float(np.dot(es.vectors[:, k], draw.u[:, j]) ** 2) if j < r else None
        spec_rows.append(
            {"point": i, "spike": lead, "replicate": rep, "index": j,
             "eigenvalue": float(es.values[k]), "left_c2": c2, "right_c2": None}
        )
    vals = es.values[idx]
    vecs = es.vectors[:, idx]
    fw = Framework.wigner()
    for rule in cfg.rules:
        srule = ShrinkageRule(rule.kind, fw, 1.0, rank_r=r, norm=rule.norm, threshold=rule.threshold)
        eta = np.asarray(shrink_eigenvalue(vals, srule), dtype=float) if r else np.zeros(0)
        for loss in cfg.losses:
            value = low_rank_loss(0.0, draw.u, spikes, vecs, eta, loss)
            loss_rows.append(
                {"point": i, "spike": lead, "replicate": rep, "rule": rule.label(), "loss": loss.label(), "value": value}
            )


def run_experiment(cfg: ExperimentConfig, threads: int | None = None) -> SimulationReport:
    """Run every replicate of every sweep point and assemble the report.

    Replicates may run concurrently; rows are reduced in replicate order
    so the report does not depend on scheduling.
    """
    nthreads = thread_count(threads)
    reps = range(cfg.model.replicates)
    if nthreads == 1:
        results = [_run_replicate(cfg, k) for k in reps]
    else:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            results = list(pool.map(lambda k: _run_replicate(cfg, k), reps))
    report = SimulationReport(
        name=cfg.name,
        base_seed=int(cfg.model.seed),
        replicate_seeds=[replicate_seed(cfg.model.seed, k) for k in reps],
    )
    for loss_rows, spec_rows in results:
        report.losses.extend(loss_rows)
        report.spectra.extend(spec_rows)
    order_l = {(r.label(), l.label()): n for n, (r, l) in enumerate((r, l) for r in cfg.rules for l in cfg.losses)}
    report.losses.sort(key=lambda row: (row["point"], order_l[(row["rule"], row["loss"])], row["replicate"]))
    report.spectra.sort(key=lambda row: (row["point"], row["index"], row["replicate"]))
    for i in range(len(cfg.points)):
        spectra, losses = _theory(cfg, i)
        report.spectra_summary.extend(spectra)
        report.loss_summary.extend(losses)
    report.summarize()
    report.metadata = {
        "model": cfg.model.kind.value,
        "n": cfg.model.n,
        "p_or_m": cfg.model.p_or_m,
        "replicates": cfg.model.replicates,
        "framework": cfg.framework.label() if cfg.framework else None,
        "spike_scale": cfg.spike_scale,
        "points": [list(p) for p in cfg.points],
        "rules": [r.label() for r in cfg.rules],
        "losses": [l.label() for l in cfg.losses],
    }
    return report


def evaluate_assertions(report: SimulationReport, assertions) -> list[AssertionResult]:
    out = []
    for a in assertions:
        if a.kind == "range":
            if a.metric == "loss":
                row = report.loss_stat(a.point, a.rule, a.loss)
            else:
                row = report.spectrum_stat(a.point, a.metric, a.index)
            value = row["mean"]
            ok = a.lo <= value <= a.hi
            detail = f"mean {a.metric}={value:.6g} in [{a.lo:g}, {a.hi:g}]"
        elif a.kind == "dominance":
            x = report.loss_stat(a.point, a.rule, a.loss)
            y = report.loss_stat(a.point, a.baseline, a.loss)
            gap = y["mean"] - x["mean"]
            se = math.hypot(x["stderr"], y["stderr"])
            value = gap / se if se > 0 else math.inf
            ok = gap >= 0 and (a.sigmas <= 0 or gap > a.sigmas * se)
            detail = f"{a.rule} {x['mean']:.6g} vs {a.baseline} {y['mean']:.6g} ({value:.3g} se)"
        elif a.kind == "improvement":
            x = report.loss_stat(a.point, a.rule, a.loss)
            y = report.loss_stat(a.point, a.baseline, a.loss)
            value = 1.0 - x["mean"] / y["mean"]
            ok = value >= a.lo
            detail = f"improvement {value:.4g} >= {a.lo:g}"
        else:
            raise ConfigError([f"unknown assertion kind {a.kind!r}"])
        out.append(AssertionResult(a, bool(ok), float(value), a.label + (": " if a.label else "") + detail))
    return out

