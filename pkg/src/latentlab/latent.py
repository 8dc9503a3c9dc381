"""First-stage latent layer: correlated binary states and their complexity metrics.

The k binary states are sampled by thresholding an exchangeable multivariate
Gaussian, so marginal prevalences are exact and a single scalar rho controls
the correlation level. Complexity is summarized by the number of realized
configurations (k_rlzd), the joint entropy in bits, and the entropic
configuration count k_eff = 2**H.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import norm

__all__ = [
    "CorrelationLevel",
    "LatentSpec",
    "LatentMatrix",
    "ComplexityReport",
    "InvalidSpecError",
    "correlation_rho_for_level",
    "correlation_matrix_for_level",
    "sample_latent",
    "enumerate_configs",
    "complexity",
    "complexity_from_probs",
    "exact_config_probs",
    "n_target",
]

# Off-diagonal correlation of the latent Gaussian per named level. Calibrated
# so that the k_eff spread across levels matches the reference simulation;
# override via LatentSpec.rho_override.
LEVEL_RHO = {"none": 0.0, "low": 0.2, "medium": 0.45, "high": 0.7}

WORST_CASE_N_TARGET = 1537  # ceil((1.96 / 0.025)**2 * 0.25)


class InvalidSpecError(ValueError):
    """Raised when a latent specification violates its invariants."""


class CorrelationLevel(str, enum.Enum):
    NONE = "none"
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"

    @property
    def rho(self) -> float:
        return LEVEL_RHO[self.value]


def correlation_rho_for_level(level: CorrelationLevel | str) -> float:
    return CorrelationLevel(level).rho


def correlation_matrix_for_level(level: CorrelationLevel | str, k: int) -> np.ndarray:
    """Exchangeable k x k correlation matrix for a named level.

    Positive definiteness requires rho > -1/(k-1); all named levels are
    nonnegative so the matrix is PD for every k >= 1.
    """
    rho = correlation_rho_for_level(level)
    if k < 1:
        raise InvalidSpecError(f"k must be >= 1, got {k}")
    if k > 1 and rho <= -1.0 / (k - 1):
        raise InvalidSpecError(f"exchangeable matrix not positive definite: rho={rho}, k={k}")
    mat = np.full((k, k), rho, dtype=float)
    np.fill_diagonal(mat, 1.0)
    return mat


@dataclass(frozen=True)
class LatentSpec:
    """Specification of the k binary first-stage states."""

    k: int
    prevalences: tuple[float, ...]
    correlation_level: CorrelationLevel = CorrelationLevel.NONE
    seed: int = 0
    rho_override: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "prevalences", tuple(float(p) for p in self.prevalences))
        object.__setattr__(self, "correlation_level", CorrelationLevel(self.correlation_level))
        if self.k < 1:
            raise InvalidSpecError(f"k must be >= 1, got {self.k}")
        if len(self.prevalences) != self.k:
            raise InvalidSpecError(
                f"expected {self.k} prevalences, got {len(self.prevalences)}"
            )
        for p in self.prevalences:
            if not 0.0 < p < 1.0:
                raise InvalidSpecError(f"prevalence {p} outside (0, 1)")

    @property
    def rho(self) -> float:
        if self.rho_override is not None:
            return self.rho_override
        return self.correlation_level.rho

    def thresholds(self) -> np.ndarray:
        """Gaussian thresholds t_i with P(Z > t_i) = prevalence_i."""
        return norm.ppf(1.0 - np.asarray(self.prevalences))


@dataclass(frozen=True)
class LatentMatrix:
    """An N x k binary realization of a LatentSpec."""

    values: np.ndarray
    spec: LatentSpec

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.uint8)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1]

    def config_codes(self) -> np.ndarray:
        """Per-row configuration code in 0..2^k-1 (bit i = state i)."""
        return config_codes(self.values)

    def to_csv(self, path) -> None:
        """Headerless CSV of 0/1 values."""
        np.savetxt(path, self.values, fmt="%d", delimiter=",")


def config_codes(values: np.ndarray) -> np.ndarray:
    k = values.shape[1]
    weights = (1 << np.arange(k)).astype(np.int64)
    return values.astype(np.int64) @ weights


def sample_latent(spec: LatentSpec, n: int) -> LatentMatrix:
    """Sample n rows of correlated binaries by thresholding an exchangeable MVN.

    Z_i = sqrt(rho) * W + sqrt(1 - rho) * eps_i, X_i = 1{Z_i > t_i}; the shared
    factor W induces the exchangeable correlation while the thresholds keep the
    marginals exact. Deterministic under (spec.seed, n).
    """
    if n < 1:
        raise InvalidSpecError(f"n must be >= 1, got {n}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed)))
    rho = spec.rho
    t = spec.thresholds()
    w = rng.standard_normal(n)
    eps = rng.standard_normal((n, spec.k))
    z = math.sqrt(rho) * w[:, None] + math.sqrt(1.0 - rho) * eps
    return LatentMatrix(values=(z > t).astype(np.uint8), spec=spec)


def enumerate_configs(m: LatentMatrix) -> list[tuple[tuple[int, ...], float]]:
    """Realized configurations with their empirical probabilities.

    Probabilities sum to one; the table length is k_rlzd.
    """
    if m.rows == 0:
        raise InvalidSpecError("empty latent matrix")
    codes = m.config_codes()
    uniq, counts = np.unique(codes, return_counts=True)
    n = codes.shape[0]
    out = []
    for code, c in zip(uniq, counts):
        bits = tuple((int(code) >> i) & 1 for i in range(m.k))
        out.append((bits, c / n))
    return out


@dataclass(frozen=True)
class ComplexityReport:
    """Configuration-level complexity of a latent sample."""

    k_rlzd: int
    joint_entropy_bits: float
    k_eff: float
    n_target: int
    n_ballpark: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "k_rlzd": self.k_rlzd,
                "joint_entropy_bits": self.joint_entropy_bits,
                "k_eff": self.k_eff,
                "n_target": self.n_target,
                "n_ballpark": self.n_ballpark,
            }
        )


def n_target(p: float, me: float, z: float) -> int:
    """Binomial sample-size requirement ceil((z/me)^2 * p * (1-p))."""
    if not 0.0 < p < 1.0:
        raise InvalidSpecError(f"p={p} outside (0, 1)")
    if me <= 0.0:
        raise InvalidSpecError(f"margin of error must be positive, got {me}")
    return math.ceil((z / me) ** 2 * p * (1.0 - p))


def complexity_from_probs(probs: Sequence[float]) -> ComplexityReport:
    """Complexity metrics from a configuration distribution.

    Entropy is the maximum-likelihood plug-in in bits; k_eff is its perplexity.
    The ballpark sample size multiplies the worst-case binomial cost (1537)
    by k_eff.
    """
    p = np.asarray(probs, dtype=float)
    p = p[p > 0]
    h = float(-(p * np.log2(p)).sum())
    if h < 0:  # -0.0 guard for degenerate distributions
        h = 0.0
    k_eff = float(2.0**h)
    return ComplexityReport(
        k_rlzd=int(p.size),
        joint_entropy_bits=h,
        k_eff=k_eff,
        n_target=WORST_CASE_N_TARGET,
        n_ballpark=math.ceil(WORST_CASE_N_TARGET * k_eff),
    )


def complexity(m: LatentMatrix) -> ComplexityReport:
    """Plug-in complexity metrics of a sampled latent matrix."""
    table = enumerate_configs(m)
    return complexity_from_probs([prob for _, prob in table])


def exact_config_probs(spec: LatentSpec, quad_points: int = 96) -> np.ndarray:
    """Exact configuration distribution of the thresholded-Gaussian model.

    Conditioning on the shared factor W makes the states independent, so the
    orthant probabilities reduce to a one-dimensional Gauss-Hermite quadrature:
    P(x) = E_W[ prod_i q_i(W)^x_i (1 - q_i(W))^(1-x_i) ] with
    q_i(w) = Phi((sqrt(rho) w - t_i) / sqrt(1 - rho)).

    Returns an array of length 2^k indexed by configuration code.
    """
    k = spec.k
    t = spec.thresholds()
    rho = spec.rho
    if rho == 0.0:
        probs = np.ones(2**k)
        prevs = np.asarray(spec.prevalences)
        for i in range(k):
            bit = (np.arange(2**k) >> i) & 1
            probs *= np.where(bit == 1, prevs[i], 1.0 - prevs[i])
        return probs
    nodes, weights = np.polynomial.hermite_e.hermegauss(quad_points)
    weights = weights / math.sqrt(2.0 * math.pi)
    q = norm.cdf((math.sqrt(rho) * nodes[:, None] - t[None, :]) / math.sqrt(1.0 - rho))
    probs = np.ones((quad_points, 2**k))
    for i in range(k):
        bit = (np.arange(2**k) >> i) & 1
        probs *= np.where(bit[None, :] == 1, q[:, i : i + 1], 1.0 - q[:, i : i + 1])
    return weights @ probs
