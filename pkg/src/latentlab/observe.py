"""Observation layer: corrupt true predictors under per-variable error rates.

The baseline model flips each cell independently with per-predictor
sensitivity alpha_j = P(X'=1|X=1) and specificity beta_j = P(X'=0|X=0).
A systematic error regime (SERg) adds a per-row latent switch L; when active,
every affected predictor shares one (alpha_c, beta_c) pair while error
realizations stay conditionally independent given (X, L).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .generate import TrueDataset

__all__ = [
    "ObservationError",
    "SergSpec",
    "ObservationSpec",
    "RegimeDecomposition",
    "default_fidelity",
    "observe",
    "observed_channel_matrix",
    "regime_entropy_decomposition",
]

DEFAULT_FIDELITY_RANGE = (0.875, 0.925)
MAX_ENUM_CELLS = 2**24


class ObservationError(ValueError):
    """Raised on invalid observation specifications or infeasible sizes."""


@dataclass(frozen=True)
class SergSpec:
    """One systematic error regime: prior, affected set, shared parameters."""

    pi: float
    affected: tuple[int, ...]
    alpha_c: float
    beta_c: float

    def __post_init__(self):
        object.__setattr__(self, "affected", tuple(int(j) for j in self.affected))
        if not 0.0 <= self.pi <= 1.0:
            raise ObservationError(f"pi={self.pi} outside [0, 1]")
        if len(set(self.affected)) != len(self.affected):
            raise ObservationError("affected indices must be distinct")
        for v, name in ((self.alpha_c, "alpha_c"), (self.beta_c, "beta_c")):
            if not 0.0 < v < 1.0:
                raise ObservationError(f"{name}={v} outside (0, 1)")


@dataclass(frozen=True)
class ObservationSpec:
    """Per-predictor fidelity pairs plus optional systematic error regimes."""

    alphas: np.ndarray
    betas: np.ndarray
    serg: tuple[SergSpec, ...] = ()
    seed: int = 0

    def __post_init__(self):
        a = np.ascontiguousarray(self.alphas, dtype=float)
        b = np.ascontiguousarray(self.betas, dtype=float)
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "betas", b)
        if isinstance(self.serg, SergSpec):
            object.__setattr__(self, "serg", (self.serg,))
        else:
            object.__setattr__(self, "serg", tuple(self.serg))
        if a.shape != b.shape or a.ndim != 1:
            raise ObservationError("alphas and betas must be 1-D and equal length")
        if ((a <= 0) | (a >= 1) | (b <= 0) | (b >= 1)).any():
            raise ObservationError("every alpha_j, beta_j must lie in (0, 1)")
        seen: set[int] = set()
        for s in self.serg:
            idx = set(s.affected)
            if idx & seen:
                raise ObservationError("overlapping affected sets are not supported")
            if idx and (min(idx) < 0 or max(idx) >= a.size):
                raise ObservationError("affected index out of range")
            seen |= idx

    @property
    def m(self) -> int:
        return self.alphas.size


def default_fidelity(m: int, seed: int = 0) -> ObservationSpec:
    """Independent alpha_j, beta_j ~ U(0.875, 0.925): 10% error on average."""
    if m < 1:
        raise ObservationError(f"m must be >= 1, got {m}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    lo, hi = DEFAULT_FIDELITY_RANGE
    return ObservationSpec(
        alphas=rng.uniform(lo, hi, size=m),
        betas=rng.uniform(lo, hi, size=m),
        seed=seed,
    )


def observe(
    true_data: TrueDataset, spec: ObservationSpec
) -> tuple[np.ndarray, np.ndarray | None]:
    """Corrupt s2 into the observed matrix; returns (observed, regime_labels).

    Rows draw one Bernoulli(pi) label per regime; affected columns use the
    regime's shared (alpha_c, beta_c) when active. Labels are None without any
    SERg, else an (N, n_regimes) 0/1 array.
    """
    x = true_data.s2
    if x.shape[1] != spec.m:
        raise ObservationError(
            f"observation spec has m={spec.m}, data has m={x.shape[1]}"
        )
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([spec.seed, x.shape[0], x.shape[1]]))
    )
    n = x.shape[0]
    alphas = np.broadcast_to(spec.alphas, x.shape)
    betas = np.broadcast_to(spec.betas, x.shape)
    p_one = np.where(x == 1, alphas, 1.0 - betas)
    labels = None
    if spec.serg:
        labels = np.empty((n, len(spec.serg)), dtype=np.uint8)
        p_one = np.array(p_one)
        for r, s in enumerate(spec.serg):
            lab = (rng.random(n) < s.pi).astype(np.uint8)
            labels[:, r] = lab
            if s.affected:
                cols = np.asarray(s.affected)
                sub = x[:, cols]
                regime_p = np.where(sub == 1, s.alpha_c, 1.0 - s.beta_c)
                active = lab.astype(bool)
                base = p_one[:, cols]
                base[active] = regime_p[active]
                p_one[:, cols] = base
    observed = (rng.random(x.shape) < p_one).astype(np.uint8)
    return observed, labels


def observed_channel_matrix(
    effective_gamma: np.ndarray, spec: ObservationSpec, regime: int | None = None
) -> np.ndarray:
    """P(X'_j = 1 | configuration) after the error channel, shape (K, m).

    With SERg present, regime selects the channel: None marginalizes over pi,
    0 forces baseline, 1 forces every regime active.
    """
    g = np.asarray(effective_gamma, dtype=float)
    if g.shape[1] != spec.m:
        raise ObservationError("gamma column count does not match spec")

    def channel(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
        return g * alpha[None, :] + (1.0 - g) * (1.0 - beta[None, :])

    base = channel(spec.alphas, spec.betas)
    if not spec.serg:
        return base
    alphas1 = np.array(spec.alphas)
    betas1 = np.array(spec.betas)
    for s in spec.serg:
        cols = np.asarray(s.affected, dtype=int)
        alphas1[cols] = s.alpha_c
        betas1[cols] = s.beta_c
    active = channel(alphas1, betas1)
    if regime == 0:
        return base
    if regime == 1:
        return active
    if regime is None:
        if len(spec.serg) != 1:
            raise ObservationError("marginal channel requires a single regime")
        pi = spec.serg[0].pi
        return pi * active + (1.0 - pi) * base
    raise ObservationError(f"unknown regime {regime!r}")


@dataclass(frozen=True)
class RegimeDecomposition:
    """Exact uncertainty decomposition under a single SERg.

    h_total = H(S1|S'), h0/h1 the regime-conditional entropies, penalty the
    conditional mutual information I(S1;L|S'); identity_residual is
    |h_total - (pi h1 + (1-pi) h0 + H(L|S') - H(L|S1,S'))|.
    """

    h_total: float
    h0: float
    h1: float
    penalty: float
    h_l_given_obs: float
    h_l_given_s1_obs: float
    identity_residual: float


def regime_entropy_decomposition(
    gen_spec,
    config_probs: Sequence[float],
    obs_spec: ObservationSpec,
    columns: Sequence[int] | None = None,
) -> RegimeDecomposition:
    """Exact entropy decomposition by enumerating (configuration, L, pattern).

    Requires a single SERg and a small system: configurations times observed
    patterns at most 2^24 cells.
    """
    if len(obs_spec.serg) != 1:
        raise ObservationError("decomposition requires exactly one SERg")
    pi = obs_spec.serg[0].pi
    priors = np.asarray(config_probs, dtype=float)
    eff = gen_spec.effective_gamma_table(priors)
    cols = list(range(eff.shape[1])) if columns is None else list(columns)
    g = len(cols)
    if priors.size * 2**g * 2 > MAX_ENUM_CELLS:
        raise ObservationError("system too large for exact enumeration")

    def likelihoods(channel: np.ndarray) -> np.ndarray:
        lik = np.ones((priors.size, 2**g))
        patterns = np.arange(2**g)
        for j, col in enumerate(cols):
            bit = (patterns >> j) & 1
            q = channel[:, col : col + 1]
            lik *= np.where(bit[None, :] == 1, q, 1.0 - q)
        return lik

    lik = {
        0: likelihoods(observed_channel_matrix(eff, obs_spec, regime=0)),
        1: likelihoods(observed_channel_matrix(eff, obs_spec, regime=1)),
    }
    # joint[l] has shape (K, 2^g): P(s, L=l, pattern)
    joint = {0: (1.0 - pi) * priors[:, None] * lik[0], 1: pi * priors[:, None] * lik[1]}

    def h_of(posterior_rows: np.ndarray, weights: np.ndarray) -> float:
        with np.errstate(divide="ignore", invalid="ignore"):
            plogp = np.where(posterior_rows > 0, posterior_rows * np.log2(posterior_rows), 0.0)
        return float(-(weights * plogp.sum(axis=0)).sum())

    # H(S1 | S'): marginalize L.
    p_s_obs = joint[0] + joint[1]
    p_obs = p_s_obs.sum(axis=0)
    nz = p_obs > 0
    h_total = h_of(p_s_obs[:, nz] / p_obs[None, nz], p_obs[nz])

    # H(S1 | S', L = l) for each regime.
    h_cond = {}
    for l in (0, 1):
        w = joint[l].sum(axis=0)
        total = w.sum()
        if total <= 0:
            h_cond[l] = 0.0
            continue
        nzl = w > 0
        h_cond[l] = h_of(joint[l][:, nzl] / w[None, nzl], w[nzl] / total)

    # H(L | S') and H(L | S1, S').
    p_l1_obs = joint[1].sum(axis=0)
    h_l_obs = float(
        np.sum(
            p_obs[nz]
            * _binary_entropy(p_l1_obs[nz] / p_obs[nz])
        )
    )
    flat0 = joint[0].ravel()
    flat1 = joint[1].ravel()
    tot = flat0 + flat1
    nzt = tot > 0
    h_l_s1_obs = float(np.sum(tot[nzt] * _binary_entropy(flat1[nzt] / tot[nzt])))

    penalty = h_l_obs - h_l_s1_obs
    identity = pi * h_cond[1] + (1.0 - pi) * h_cond[0] + penalty
    return RegimeDecomposition(
        h_total=h_total,
        h0=h_cond[0],
        h1=h_cond[1],
        penalty=penalty,
        h_l_given_obs=h_l_obs,
        h_l_given_s1_obs=h_l_s1_obs,
        identity_residual=abs(h_total - identity),
    )


def _binary_entropy(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    inside = (p > 0) & (p < 1)
    q = p[inside]
    out[inside] = -(q * np.log2(q) + (1 - q) * np.log2(1 - q))
    return out
