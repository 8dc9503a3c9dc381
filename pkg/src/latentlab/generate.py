"""Second-stage generative process: conditional-probability tables and sampling.

Each predictor (and the outcome) is defined by one conditional probability per
latent configuration. Consistent mode derives those probabilities from a
decaying-interaction design over the latent states, so predictors act as noisy
proxies of individual states; chaotic mode draws every cell independently, so
predictors identify whole configurations. Pure-noise predictors reuse the same
copula-mapped value pool but are assigned to rows at random, which makes them
marginally indistinguishable from signal predictors.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.stats import norm

from .latent import LatentMatrix

__all__ = [
    "GenerativeSpec",
    "TrueDataset",
    "GenerativeError",
    "copula_map",
    "build_consistent_spec",
    "build_chaotic_spec",
    "generate_noise",
    "sample_dataset",
]

PREDICTOR_RANGE = (0.25, 0.75)
OUTCOME_RANGE = (0.0, 1.0)
DEFAULT_DECAY = 0.4
DEFAULT_NOISE_FRACTION = 0.5


class GenerativeError(ValueError):
    """Raised when a generative specification or its inputs are invalid."""


def copula_map(raw, sd: float, lo: float, hi: float):
    """Map a raw Gaussian score to a probability in [lo, hi] via Phi(raw/sd)."""
    if not lo < hi:
        raise GenerativeError(f"need lo < hi, got ({lo}, {hi})")
    if sd <= 0:
        raise GenerativeError(f"sd must be positive, got {sd}")
    return lo + (hi - lo) * norm.cdf(np.asarray(raw, dtype=float) / sd)


@dataclass(frozen=True)
class GenerativeSpec:
    """Conditional-probability tables mapping latent configurations to data.

    gamma_table has one row per configuration code (0..2^k-1) and one column
    per predictor. For noise predictors the row dimension holds the pool of
    2^k assignable values; sampling draws a pool index per data row, severing
    any tie to the actual configuration.
    """

    mode: str  # "consistent" | "chaotic"
    k: int
    gamma_table: np.ndarray  # (2^k, m)
    delta_table: np.ndarray  # (2^k,)
    noise_mask: np.ndarray  # (m,) bool
    predictor_range: tuple[float, float] = PREDICTOR_RANGE
    outcome_range: tuple[float, float] = OUTCOME_RANGE
    interaction_decay: float = DEFAULT_DECAY
    seed: int = 0

    def __post_init__(self):
        gamma = np.ascontiguousarray(self.gamma_table, dtype=float)
        delta = np.ascontiguousarray(self.delta_table, dtype=float)
        mask = np.ascontiguousarray(self.noise_mask, dtype=bool)
        gamma.setflags(write=False)
        delta.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "gamma_table", gamma)
        object.__setattr__(self, "delta_table", delta)
        object.__setattr__(self, "noise_mask", mask)
        if gamma.shape[0] != 2**self.k or delta.shape[0] != 2**self.k:
            raise GenerativeError("table rows must cover all 2^k configuration codes")
        if mask.shape[0] != gamma.shape[1]:
            raise GenerativeError("noise_mask length must match predictor count")
        lo, hi = self.predictor_range
        signal = gamma[:, ~mask]
        if signal.size and (signal.min() < lo - 1e-12 or signal.max() > hi + 1e-12):
            raise GenerativeError("signal gamma outside predictor_range")
        olo, ohi = self.outcome_range
        if delta.min() < olo - 1e-12 or delta.max() > ohi + 1e-12:
            raise GenerativeError("delta outside outcome_range")

    @property
    def m(self) -> int:
        return self.gamma_table.shape[1]

    def effective_gamma_table(self, config_probs=None) -> np.ndarray:
        """Per-configuration Bernoulli parameters of each predictor.

        Noise predictors draw their pool value at an independently shuffled
        row's configuration, so their effective conditional probability is the
        configuration-weighted pool mean, constant across configurations.
        Without config_probs the pool is averaged uniformly.
        """
        eff = np.array(self.gamma_table)
        if self.noise_mask.any():
            pool = self.gamma_table[:, self.noise_mask]
            if config_probs is None:
                eff[:, self.noise_mask] = pool.mean(axis=0)
            else:
                w = np.asarray(config_probs, dtype=float)
                eff[:, self.noise_mask] = (w / w.sum()) @ pool
        return eff

    def to_json(self) -> str:
        return json.dumps(
            {
                "mode": self.mode,
                "k": self.k,
                "gamma_table": self.gamma_table.tolist(),
                "delta_table": self.delta_table.tolist(),
                "noise_mask": self.noise_mask.astype(int).tolist(),
                "predictor_range": list(self.predictor_range),
                "outcome_range": list(self.outcome_range),
                "interaction_decay": self.interaction_decay,
                "seed": self.seed,
            }
        )

    @classmethod
    def from_json(cls, payload: str) -> "GenerativeSpec":
        d = json.loads(payload)
        return cls(
            mode=d["mode"],
            k=d["k"],
            gamma_table=np.asarray(d["gamma_table"], dtype=float),
            delta_table=np.asarray(d["delta_table"], dtype=float),
            noise_mask=np.asarray(d["noise_mask"], dtype=bool),
            predictor_range=tuple(d["predictor_range"]),
            outcome_range=tuple(d["outcome_range"]),
            interaction_decay=d["interaction_decay"],
            seed=d["seed"],
        )


def _interaction_design(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Full +/-1 effects-coded design over all non-empty state subsets.

    Returns (design, orders): design is (2^k, 2^k - 1) with mutually orthogonal
    columns; orders[t] is the interaction order of column t. The +/-1 coding
    makes the raw-score variance the plain sum of squared coefficient scales.
    """
    codes = np.arange(2**k)
    bits = ((codes[:, None] >> np.arange(k)[None, :]) & 1) * 2 - 1  # (2^k, k) in {-1,+1}
    cols = []
    orders = []
    for order in range(1, k + 1):
        for subset in combinations(range(k), order):
            cols.append(np.prod(bits[:, subset], axis=1))
            orders.append(order)
    return np.column_stack(cols).astype(float), np.asarray(orders)


def _coefficient_scales(orders: np.ndarray, decay: float) -> np.ndarray:
    # Main effects are N(0,1). The order-o interaction block gets a total
    # standard-deviation budget of decay**(2*(o-1)) split evenly across its
    # C(k,o) terms, so per-order energy falls fast enough that the centered
    # gamma table keeps >= 95% of its Frobenius energy in the top-k directions.
    counts = np.bincount(orders)[orders].astype(float)
    scales = float(decay) ** (2 * (orders - 1)) / np.sqrt(counts)
    return np.where(orders == 1, 1.0, scales)


def _consistent_scores(k: int, count: int, decay: float, rng: np.random.Generator):
    design, orders = _interaction_design(k)
    scales = _coefficient_scales(orders, decay)
    coeffs = rng.standard_normal((design.shape[1], count)) * scales[:, None]
    raw = design @ coeffs  # (2^k, count)
    sd = math.sqrt(float(np.sum(scales**2)))
    return raw, sd


def build_consistent_spec(
    k: int,
    m: int,
    noise_fraction: float = DEFAULT_NOISE_FRACTION,
    decay: float = DEFAULT_DECAY,
    seed: int = 0,
) -> GenerativeSpec:
    """Causally consistent tables: decaying-interaction design over the states."""
    _check_build_args(k, m, noise_fraction)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    n_noise = int(round(m * noise_fraction))
    n_signal = m - n_noise

    raw, sd = _consistent_scores(k, n_signal + 1, decay, rng)
    lo, hi = PREDICTOR_RANGE
    signal_gamma = copula_map(raw[:, :n_signal], sd, lo, hi)
    delta = copula_map(raw[:, n_signal], sd, *OUTCOME_RANGE)

    noise_gamma = generate_noise(k, n_noise, seed=_derive_seed(seed, "noise"))
    gamma, mask = _assemble_columns(signal_gamma, noise_gamma, rng)
    return GenerativeSpec(
        mode="consistent",
        k=k,
        gamma_table=gamma,
        delta_table=delta,
        noise_mask=mask,
        interaction_decay=decay,
        seed=seed,
    )


def build_chaotic_spec(
    k: int,
    m: int,
    noise_fraction: float = DEFAULT_NOISE_FRACTION,
    seed: int = 0,
) -> GenerativeSpec:
    """Chaotic tables: an independent standard-normal score for every cell."""
    _check_build_args(k, m, noise_fraction)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    n_noise = int(round(m * noise_fraction))
    n_signal = m - n_noise

    lo, hi = PREDICTOR_RANGE
    signal_gamma = copula_map(rng.standard_normal((2**k, n_signal)), 1.0, lo, hi)
    delta = copula_map(rng.standard_normal(2**k), 1.0, *OUTCOME_RANGE)

    noise_gamma = generate_noise(k, n_noise, seed=_derive_seed(seed, "noise"))
    gamma, mask = _assemble_columns(signal_gamma, noise_gamma, rng)
    return GenerativeSpec(
        mode="chaotic",
        k=k,
        gamma_table=gamma,
        delta_table=delta,
        noise_mask=mask,
        seed=seed,
    )


def generate_noise(k: int, count: int, seed: int = 0) -> np.ndarray:
    """Assignable value pools for pure-noise predictors, shape (2^k, count).

    Each predictor gets exactly 2^k copula-mapped standard-normal draws,
    matching the cardinality of the signal tables. At sampling time a row
    draws its pool value at the configuration of a randomly shuffled row, so
    the value is independent of the row's own configuration while the noise
    column's prevalence distribution matches the signal columns'.
    """
    if count < 0:
        raise GenerativeError(f"count must be >= 0, got {count}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    lo, hi = PREDICTOR_RANGE
    return copula_map(rng.standard_normal((2**k, count)), 1.0, lo, hi)


def _check_build_args(k: int, m: int, noise_fraction: float) -> None:
    if k < 1:
        raise GenerativeError(f"k must be >= 1, got {k}")
    if m < 1:
        raise GenerativeError(f"m must be >= 1, got {m}")
    if not 0.0 <= noise_fraction <= 1.0:
        raise GenerativeError(f"noise_fraction {noise_fraction} outside [0, 1]")


def _derive_seed(seed: int, label: str) -> int:
    ss = np.random.SeedSequence([seed, int.from_bytes(label.encode(), "little")])
    return int(ss.generate_state(1)[0])


def _assemble_columns(signal: np.ndarray, noise: np.ndarray, rng: np.random.Generator):
    """Interleave signal and noise columns in a random order."""
    m = signal.shape[1] + noise.shape[1]
    order = rng.permutation(m)
    gamma = np.empty((signal.shape[0], m))
    mask = np.zeros(m, dtype=bool)
    mask[order[signal.shape[1] :]] = True
    gamma[:, order[: signal.shape[1]]] = signal
    gamma[:, order[signal.shape[1] :]] = noise
    return gamma, mask


@dataclass(frozen=True)
class TrueDataset:
    """Latent rows with their generated true predictors and outcome."""

    s1: LatentMatrix
    s2: np.ndarray  # (N, m) uint8
    y: np.ndarray  # (N,) uint8
    y_prob: np.ndarray  # (N,) float, the row's delta
    spec: GenerativeSpec

    def __post_init__(self):
        for name in ("s2", "y", "y_prob"):
            arr = np.ascontiguousarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def sample_dataset(spec: GenerativeSpec, latents: LatentMatrix) -> TrueDataset:
    """Draw true predictors and outcome for each latent row.

    Cells are independent Bernoulli draws given the row's configuration (local
    independence by construction); noise columns draw a random pool row first.
    Deterministic under (spec, latents).
    """
    if latents.k != spec.k:
        raise GenerativeError(
            f"latent k={latents.k} does not match spec k={spec.k}"
        )
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([spec.seed, latents.spec.seed, latents.rows]))
    )
    codes = latents.config_codes()
    n = latents.rows
    s2 = np.empty((n, spec.m), dtype=np.uint8)
    chunk = 1024  # fixed so the draw sequence never depends on the environment
    for start in range(0, spec.m, chunk):
        cols = slice(start, min(start + chunk, spec.m))
        probs = spec.gamma_table[codes, cols]
        noise_here = np.flatnonzero(spec.noise_mask[cols])
        if noise_here.size:
            # noise value = pool entry at an independently drawn row's config
            donor = codes[rng.integers(0, n, size=(n, noise_here.size))]
            probs[:, noise_here] = spec.gamma_table[:, cols][
                donor, noise_here[None, :]
            ]
        s2[:, cols] = rng.random(probs.shape) < probs
    y_prob = spec.delta_table[codes]
    y = (rng.random(n) < y_prob).astype(np.uint8)
    return TrueDataset(s1=latents, s2=s2, y=y, y_prob=y_prob, spec=spec)
