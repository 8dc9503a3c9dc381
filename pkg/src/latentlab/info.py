"""Information-theoretic estimators and exact desk-scale computations.

Plug-in entropy/MI estimators for empirical columns, exact conditional
entropies by full enumeration of small generative systems, the posterior
softmax over latent configurations (the optimal predictor), and the Chernoff /
Fano machinery that quantifies how fast latent decoding improves with the
number of predictors.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .generate import GenerativeSpec
from .observe import ObservationSpec, observed_channel_matrix

__all__ = [
    "InfoError",
    "PosteriorTable",
    "EfficiencyReport",
    "entropy_bits",
    "binary_entropy_bits",
    "mutual_information_empirical",
    "conditional_entropy_exact",
    "total_correlation",
    "phi_latent_predictor",
    "exact_posterior",
    "optimal_prediction",
    "chernoff_information",
    "efficiency_rate",
]

LOG2 = math.log(2.0)
MAX_ENUM_CELLS = 2**24


class InfoError(ValueError):
    """Raised on invalid distributions or infeasible enumeration sizes."""


def entropy_bits(dist: Sequence[float]) -> float:
    """Shannon entropy -sum p log2 p with 0 log 0 = 0."""
    p = np.asarray(dist, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise InfoError("distribution must be a nonempty 1-D sequence")
    if (p < -1e-12).any():
        raise InfoError("negative probability")
    if abs(p.sum() - 1.0) > 1e-9:
        raise InfoError(f"probabilities sum to {p.sum()}, not 1")
    p = p[p > 0]
    h = float(-(p * np.log2(p)).sum())
    return 0.0 if h < 0 else h


def binary_entropy_bits(p) -> float | np.ndarray:
    """H_b(p) in bits, elementwise, with H_b(0) = H_b(1) = 0."""
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    inside = (p > 0) & (p < 1)
    q = p[inside]
    out[inside] = -(q * np.log2(q) + (1 - q) * np.log2(1 - q))
    return float(out) if out.ndim == 0 else out


def mutual_information_empirical(x: np.ndarray, y: np.ndarray) -> float:
    """Plug-in mutual information (bits) from the joint contingency table."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape or x.ndim != 1:
        raise InfoError("x and y must be 1-D arrays of equal length")
    _, xi = np.unique(x, return_inverse=True)
    _, yi = np.unique(y, return_inverse=True)
    nx = int(xi.max()) + 1
    ny = int(yi.max()) + 1
    joint = np.bincount(xi * ny + yi, minlength=nx * ny).reshape(nx, ny) / x.size
    px = joint.sum(axis=1, keepdims=True)
    py = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    return float((joint[nz] * np.log2(joint[nz] / (px @ py)[nz])).sum())


def _channel_matrix(
    gen_spec: GenerativeSpec,
    obs_spec: ObservationSpec | None,
    config_probs=None,
) -> np.ndarray:
    """P(X'_j = 1 | configuration) for every predictor, shape (2^k, m)."""
    eff = gen_spec.effective_gamma_table(config_probs)
    if obs_spec is None:
        return eff
    return observed_channel_matrix(eff, obs_spec)


def _pattern_likelihoods(channel: np.ndarray, columns: Sequence[int]) -> np.ndarray:
    """P(observed pattern | configuration) for all 2^g patterns of the columns.

    Returns shape (2^k_configs, 2^g); pattern bit j corresponds to columns[j].
    """
    cols = list(columns)
    g = len(cols)
    n_cfg = channel.shape[0]
    if n_cfg * (2**g) > MAX_ENUM_CELLS:
        raise InfoError(f"enumeration of {n_cfg * 2**g} cells exceeds {MAX_ENUM_CELLS}")
    lik = np.ones((n_cfg, 2**g))
    patterns = np.arange(2**g)
    for j, col in enumerate(cols):
        bit = (patterns >> j) & 1
        q = channel[:, col : col + 1]
        lik *= np.where(bit[None, :] == 1, q, 1.0 - q)
    return lik


def conditional_entropy_exact(
    gen_spec: GenerativeSpec,
    config_probs: Sequence[float],
    target: str,
    given: Sequence[int],
    obs_spec: ObservationSpec | None = None,
) -> float:
    """Exact H(target | observed subset) in bits by full marginalization.

    target is "s1" (the latent configuration) or "y". given lists observed
    predictor indices; an empty subset returns the prior entropy. The
    observation channel defaults to the identity (clean predictors).
    """
    priors = np.asarray(config_probs, dtype=float)
    if priors.shape[0] != 2**gen_spec.k:
        raise InfoError("config_probs must cover all 2^k configuration codes")
    if target not in ("s1", "y"):
        raise InfoError(f"unknown target {target!r}")
    channel = _channel_matrix(gen_spec, obs_spec, priors)
    lik = _pattern_likelihoods(channel, given)
    joint = priors[:, None] * lik  # (2^k, 2^g)
    p_obs = joint.sum(axis=0)
    nz = p_obs > 0
    if target == "s1":
        post = joint[:, nz] / p_obs[None, nz]
        with np.errstate(divide="ignore", invalid="ignore"):
            plogp = np.where(post > 0, post * np.log2(post), 0.0)
        return float(-(p_obs[nz] * plogp.sum(axis=0)).sum())
    p_y = gen_spec.delta_table @ (joint[:, nz] / p_obs[None, nz])
    return float((p_obs[nz] * binary_entropy_bits(p_y)).sum())


def total_correlation(
    columns: np.ndarray, exact_limit: int = 20
) -> tuple[float, float, bool]:
    """Total correlation of binary columns and its relative-redundancy ratio.

    Returns (tc_bits, relative_redundancy, exact). Up to exact_limit columns
    the joint entropy is computed from the full empirical joint; beyond that a
    pairwise mutual-information lower bound is used and flagged exact=False.
    """
    x = np.ascontiguousarray(columns, dtype=np.int64)
    if x.ndim != 2:
        raise InfoError("columns must be a 2-D array (rows x columns)")
    n, m = x.shape
    marginals = np.array(
        [entropy_bits(np.bincount(x[:, j], minlength=2) / n) for j in range(m)]
    )
    sum_marginals = float(marginals.sum())
    if m <= exact_limit:
        codes = x @ (1 << np.arange(m))
        _, counts = np.unique(codes, return_counts=True)
        joint = entropy_bits(counts / n)
        tc = sum_marginals - joint
        exact = True
    else:
        tc = 0.0
        for a in range(m):
            for b in range(a + 1, m):
                tc += mutual_information_empirical(x[:, a], x[:, b])
        exact = False
    tc = max(tc, 0.0)
    rel = tc / sum_marginals if sum_marginals > 0 else 0.0
    return float(tc), float(rel), exact


def phi_latent_predictor(p_latent: float, gamma1: float, gamma0: float) -> float:
    """Phi correlation between a latent state and the predictor it drives.

    phi = (gamma1 - gamma0) * sqrt(p(1-p) / (p_j(1-p_j))) with the predictor
    marginal p_j = gamma1 p + gamma0 (1-p).
    """
    for name, v in (("p_latent", p_latent), ("gamma1", gamma1), ("gamma0", gamma0)):
        if not 0.0 < v < 1.0:
            raise InfoError(f"{name}={v} outside (0, 1)")
    p_j = gamma1 * p_latent + gamma0 * (1.0 - p_latent)
    if not 0.0 < p_j < 1.0:
        raise InfoError(f"degenerate predictor marginal {p_j}")
    return (gamma1 - gamma0) * math.sqrt(
        p_latent * (1.0 - p_latent) / (p_j * (1.0 - p_j))
    )


@dataclass(frozen=True)
class PosteriorTable:
    """Posterior over realized latent configurations given one observed row."""

    codes: np.ndarray  # realized configuration codes
    log_joint: np.ndarray  # LPJ_p, up to a shared constant
    posterior: np.ndarray

    def __post_init__(self):
        for name in ("codes", "log_joint", "posterior"):
            arr = np.ascontiguousarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def exact_posterior(
    observed_row: np.ndarray,
    gen_spec: GenerativeSpec,
    obs_spec: ObservationSpec | None,
    config_probs: Sequence[float],
    columns: Sequence[int] | None = None,
) -> PosteriorTable:
    """Softmax posterior over realized configurations for one observed row.

    Accumulates the per-configuration log joint score (log prior plus the sum
    of per-predictor log channel probabilities) and normalizes with a
    log-sum-exp shift, so m in the thousands cannot underflow. Systematic
    error regimes are out of scope here: the score is only a plain sum under
    the baseline channel.
    """
    if obs_spec is not None and obs_spec.serg:
        raise InfoError("exact_posterior assumes the baseline (regime-free) channel")
    priors = np.asarray(config_probs, dtype=float)
    realized = np.flatnonzero(priors > 0)
    channel = _channel_matrix(gen_spec, obs_spec, priors)[realized, :]
    row = np.asarray(observed_row, dtype=np.int8)
    cols = np.arange(row.size) if columns is None else np.asarray(list(columns))
    if row.size != cols.size:
        raise InfoError("observed row length must match the column list")
    q = channel[:, cols]
    lpj = np.log(priors[realized]) + np.where(
        row[None, :] == 1, np.log(q), np.log1p(-q)
    ).sum(axis=1)
    shifted = lpj - lpj.max()
    w = np.exp(shifted)
    return PosteriorTable(codes=realized, log_joint=lpj, posterior=w / w.sum())


def optimal_prediction(
    observed_row: np.ndarray,
    gen_spec: GenerativeSpec,
    obs_spec: ObservationSpec | None,
    config_probs: Sequence[float],
    columns: Sequence[int] | None = None,
) -> float:
    """P(Y = 1 | observed row): the delta table averaged under the posterior."""
    table = exact_posterior(observed_row, gen_spec, obs_spec, config_probs, columns)
    return float(gen_spec.delta_table[table.codes] @ table.posterior)


def chernoff_information(p: float, q: float, tol: float = 1e-10) -> float:
    """Chernoff information (nats) between Bernoulli(p) and Bernoulli(q).

    C(P,Q) = -min_{lambda in [0,1]} log(p^l q^(1-l) + (1-p)^l (1-q)^(1-l));
    the objective is convex in lambda, minimized by golden-section search.
    """
    if not (0.0 < p < 1.0 and 0.0 < q < 1.0):
        raise InfoError("Bernoulli parameters must lie in (0, 1)")
    if p == q:
        return 0.0

    def overlap(lam: float) -> float:
        return math.log(
            p**lam * q ** (1 - lam) + (1 - p) ** lam * (1 - q) ** (1 - lam)
        )

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = 0.0, 1.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = overlap(c), overlap(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = overlap(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = overlap(d)
    return -min(fc, fd)


@dataclass(frozen=True)
class EfficiencyReport:
    """Pairwise distinguishability of latent configurations from m predictors."""

    codes: np.ndarray  # realized configuration codes
    chernoff_matrix: np.ndarray  # average pairwise Chernoff information (nats)
    rate: float  # min pair average, the efficiency rate R
    m: int
    error_bound: float  # exp(-m R)
    union_bound: float  # K^2 exp(-m R)
    p_error_exact: float  # exact MAP error by enumeration (when feasible)
    p_error_empirical: float  # MAP decoding error on fresh samples
    fano_bound_bits: float  # H_b(P_e) + P_e log2(K - 1), from exact P_e
    cond_entropy_bits: float  # exact H(S1 | observed subset)

    def to_json(self) -> str:
        return json.dumps(
            {
                "codes": self.codes.tolist(),
                "chernoff_matrix": self.chernoff_matrix.tolist(),
                "rate": self.rate,
                "m": self.m,
                "error_bound": self.error_bound,
                "union_bound": self.union_bound,
                "p_error_exact": self.p_error_exact,
                "p_error_empirical": self.p_error_empirical,
                "fano_bound_bits": self.fano_bound_bits,
                "cond_entropy_bits": self.cond_entropy_bits,
            }
        )

    def chernoff_matrix_csv(self, path) -> None:
        np.savetxt(path, self.chernoff_matrix, delimiter=",")


def efficiency_rate(
    gen_spec: GenerativeSpec,
    obs_spec: ObservationSpec | None,
    config_probs: Sequence[float],
    m_prefix: int,
    decode_trials: int = 0,
    seed: int = 0,
) -> EfficiencyReport:
    """Chernoff efficiency rate of the first m_prefix observed predictors.

    The rate R is the minimum over configuration pairs of the average
    per-predictor Chernoff information of their observation channels; MAP
    decoding error is computed exactly by enumeration and optionally estimated
    on decode_trials fresh samples.
    """
    priors = np.asarray(config_probs, dtype=float)
    realized = np.flatnonzero(priors > 0)
    channel = _channel_matrix(gen_spec, obs_spec, priors)[realized, :m_prefix]
    k_r = realized.size
    avg = np.zeros((k_r, k_r))
    for a in range(k_r):
        for b in range(a + 1, k_r):
            total = sum(
                chernoff_information(channel[a, j], channel[b, j])
                for j in range(m_prefix)
            )
            avg[a, b] = avg[b, a] = total / m_prefix
    pairs = avg[np.triu_indices(k_r, k=1)]
    rate = float(pairs.min()) if pairs.size else 0.0

    lik = _pattern_likelihoods(channel, range(m_prefix))
    joint = priors[realized][:, None] * lik
    map_idx = joint.argmax(axis=0)
    p_error_exact = float(1.0 - joint[map_idx, np.arange(joint.shape[1])].sum())

    p_error_emp = p_error_exact
    if decode_trials > 0:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
        true_cfg = rng.choice(k_r, size=decode_trials, p=priors[realized] / priors[realized].sum())
        obs = rng.random((decode_trials, m_prefix)) < channel[true_cfg, :]
        weights = 1 << np.arange(m_prefix)
        patterns = obs.astype(np.int64) @ weights
        p_error_emp = float((map_idx[patterns] != true_cfg).mean())

    h_cond = conditional_entropy_exact(
        gen_spec, priors, "s1", list(range(m_prefix)), obs_spec
    )
    fano = float(
        binary_entropy_bits(p_error_exact)
        + (p_error_exact * math.log2(k_r - 1) if k_r > 2 else 0.0)
    )
    return EfficiencyReport(
        codes=realized,
        chernoff_matrix=avg,
        rate=rate,
        m=m_prefix,
        error_bound=math.exp(-m_prefix * rate),
        union_bound=k_r**2 * math.exp(-m_prefix * rate),
        p_error_exact=p_error_exact,
        p_error_empirical=p_error_emp,
        fano_bound_bits=fano,
        cond_entropy_bits=h_cond,
    )
