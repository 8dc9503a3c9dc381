import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import norm

from latentlab.generate import (
    GenerativeError,
    GenerativeSpec,
    build_chaotic_spec,
    build_consistent_spec,
    copula_map,
    generate_noise,
    sample_dataset,
)
from latentlab.info import entropy_bits, mutual_information_empirical
from latentlab.latent import LatentMatrix, LatentSpec, sample_latent


def test_copula_map_midpoint_and_limits():
    assert copula_map(0.0, 1.0, 0.25, 0.75) == pytest.approx(0.5)
    assert copula_map(50.0, 1.0, 0.25, 0.75) == pytest.approx(0.75)
    assert copula_map(1.0, 1.0, 0.0, 1.0) == pytest.approx(norm.cdf(1.0), abs=1e-6)


def test_copula_map_rejects_bad_args():
    with pytest.raises(GenerativeError):
        copula_map(0.0, 1.0, 0.75, 0.25)
    with pytest.raises(GenerativeError):
        copula_map(0.0, 0.0, 0.0, 1.0)


@given(st.floats(-20, 20), st.floats(0.1, 10), st.floats(0, 0.45))
def test_copula_map_bounds_property(raw, sd, lo):
    hi = 1.0 - lo if lo < 0.5 else lo + 0.1
    v = float(copula_map(raw, sd, lo, hi))
    assert lo <= v <= hi


def test_consistent_decay_zero_is_main_effects_only():
    spec = build_consistent_spec(k=2, m=30, noise_fraction=0.0, decay=0.0, seed=3)
    centered = spec.gamma_table - spec.gamma_table.mean(axis=0, keepdims=True)
    s = np.linalg.svd(centered, compute_uv=False)
    assert s[2] < 1e-10 * s[0]


def test_consistent_k1_two_distinct_values():
    spec = build_consistent_spec(k=1, m=6, noise_fraction=0.0, seed=1)
    assert spec.gamma_table.shape == (2, 6)
    assert (spec.gamma_table[0] != spec.gamma_table[1]).all()


def test_consistent_rank_energy_oracle():
    # >= 95% of centered Frobenius energy in the top-k singular directions.
    fracs = []
    for seed in range(20):
        spec = build_consistent_spec(k=4, m=100, noise_fraction=0.0, decay=0.4, seed=seed)
        centered = spec.gamma_table - spec.gamma_table.mean(axis=0, keepdims=True)
        s = np.linalg.svd(centered, compute_uv=False)
        fracs.append((s[:4] ** 2).sum() / (s**2).sum())
    assert np.mean(fracs) >= 0.95


def test_chaotic_rejects_k_zero():
    with pytest.raises(GenerativeError):
        build_chaotic_spec(k=0, m=10)


def test_chaotic_rows_uncorrelated():
    spec = build_chaotic_spec(k=2, m=4000, noise_fraction=0.0, seed=11)
    rows = spec.gamma_table
    rs = [
        np.corrcoef(rows[a], rows[b])[0, 1]
        for a in range(4)
        for b in range(a + 1, 4)
    ]
    assert max(abs(r) for r in rs) < 0.05


def test_chaotic_cells_in_predictor_range():
    spec = build_chaotic_spec(k=3, m=200, noise_fraction=0.5, seed=2)
    signal = spec.gamma_table[:, ~spec.noise_mask]
    assert signal.min() >= 0.25 and signal.max() <= 0.75


def test_generate_noise_empty():
    assert generate_noise(3, 0, seed=1).shape == (8, 0)


def test_noise_marginal_camouflage():
    pools = generate_noise(4, 400, seed=5)
    assert abs(pools.mean() - 0.5) < 0.02


def test_noise_mi_with_latent_below_permutation_null():
    lat = sample_latent(LatentSpec(k=2, prevalences=(0.3, 0.5), seed=21), 12000)
    spec = build_chaotic_spec(k=2, m=8, noise_fraction=0.5, seed=21)
    ds = sample_dataset(spec, lat)
    noise_col = ds.s2[:, np.flatnonzero(spec.noise_mask)[0]]
    state = lat.values[:, 0]
    mi = mutual_information_empirical(noise_col, state)
    rng = np.random.Generator(np.random.PCG64(0))
    null = np.array(
        [mutual_information_empirical(rng.permutation(noise_col), state) for _ in range(200)]
    )
    assert mi < np.quantile(null, 0.99)


def test_sample_bernoulli_means():
    lat = sample_latent(LatentSpec(k=1, prevalences=(0.5,), seed=9), 10**5)
    gs = GenerativeSpec(
        mode="chaotic", k=1, gamma_table=np.full((2, 3), 0.75),
        delta_table=np.array([0.3, 0.7]), noise_mask=np.zeros(3, bool), seed=4,
    )
    ds = sample_dataset(gs, lat)
    assert np.all(np.abs(ds.s2.mean(axis=0) - 0.75) < 0.01)


def test_conditional_independence_within_configuration():
    lat = sample_latent(LatentSpec(k=2, prevalences=(0.5, 0.4), seed=30), 10**5)
    spec = build_chaotic_spec(k=2, m=6, noise_fraction=0.0, seed=30)
    ds = sample_dataset(spec, lat)
    codes = lat.config_codes()
    rows = codes == 0
    phi = np.corrcoef(ds.s2[rows, 0], ds.s2[rows, 1])[0, 1]
    assert abs(phi) < 0.03


def test_y_prob_matches_delta_and_floor():
    from latentlab.metrics import theoretical_floor

    lat = sample_latent(LatentSpec(k=2, prevalences=(0.4, 0.6), seed=8), 2000)
    spec = build_consistent_spec(k=2, m=10, noise_fraction=0.5, seed=8)
    ds = sample_dataset(spec, lat)
    assert np.array_equal(ds.y_prob, spec.delta_table[lat.config_codes()])
    codes, counts = np.unique(lat.config_codes(), return_counts=True)
    probs = counts / counts.sum()
    floor = theoretical_floor(spec, dict(zip(codes.tolist(), probs)))
    hb = -(
        spec.delta_table[codes] * np.log2(spec.delta_table[codes])
        + (1 - spec.delta_table[codes]) * np.log2(1 - spec.delta_table[codes])
    )
    assert floor == pytest.approx(float(probs @ hb), abs=1e-12)


def test_statement1_conditional_mi_zero_by_enumeration():
    # I(Y; S2 | S1) = 0 exactly: the joint factorizes by construction.
    spec = build_chaotic_spec(k=2, m=3, noise_fraction=0.0, seed=44)
    priors = np.array([0.2, 0.3, 0.4, 0.1])
    mi = 0.0
    for p, prior in enumerate(priors):
        delta = spec.delta_table[p]
        for pattern in range(2**3):
            prob_s2 = 1.0
            for j in range(3):
                g = spec.gamma_table[p, j]
                prob_s2 *= g if (pattern >> j) & 1 else 1 - g
            for yv in (0, 1):
                joint = prior * prob_s2 * (delta if yv else 1 - delta)
                p_y_given_s1 = delta if yv else 1 - delta
                p_y_given_both = p_y_given_s1  # factorization
                mi += joint * np.log2(p_y_given_both / p_y_given_s1)
    assert abs(mi) < 1e-12


def test_marginal_camouflage_threshold_inseparable():
    # Pool prevalences over a reference-style ensemble; no single threshold
    # should tell noise from signal columns at better than 55% accuracy.
    all_prev, all_lbl = [], []
    for seed in range(8):
        ss = np.random.SeedSequence(500 + seed).spawn(2)
        rng = np.random.Generator(np.random.PCG64(ss[0]))
        prevs = tuple(rng.uniform(0.05, 0.50, 4))
        lat = sample_latent(
            LatentSpec(
                k=4, prevalences=prevs, correlation_level="medium",
                seed=int(ss[1].generate_state(1)[0]),
            ),
            8000,
        )
        spec = build_consistent_spec(k=4, m=300, noise_fraction=0.5, seed=700 + seed)
        ds = sample_dataset(spec, lat)
        all_prev.append(ds.s2.mean(axis=0))
        all_lbl.append(spec.noise_mask)
    prev = np.concatenate(all_prev)
    labels = np.concatenate(all_lbl)
    best = 0.0
    for t in np.linspace(0.25, 0.75, 201):
        acc = max(((prev > t) == labels).mean(), ((prev <= t) == labels).mean())
        best = max(best, acc)
    assert best <= 0.55


def test_determinism_and_mismatched_k():
    lat = sample_latent(LatentSpec(k=2, prevalences=(0.4, 0.5), seed=2), 500)
    spec = build_consistent_spec(k=2, m=12, seed=2)
    a = sample_dataset(spec, lat)
    b = sample_dataset(spec, lat)
    assert np.array_equal(a.s2, b.s2) and np.array_equal(a.y, b.y)
    lat3 = sample_latent(LatentSpec(k=3, prevalences=(0.4, 0.5, 0.3), seed=2), 500)
    with pytest.raises(GenerativeError):
        sample_dataset(spec, lat3)


def test_spec_json_roundtrip():
    spec = build_consistent_spec(k=2, m=8, noise_fraction=0.25, seed=77)
    clone = GenerativeSpec.from_json(spec.to_json())
    assert np.allclose(clone.gamma_table, spec.gamma_table)
    assert np.allclose(clone.delta_table, spec.delta_table)
    assert np.array_equal(clone.noise_mask, spec.noise_mask)
    assert clone.mode == spec.mode


def test_effective_gamma_constant_for_noise():
    spec = build_chaotic_spec(k=2, m=10, noise_fraction=0.5, seed=13)
    eff = spec.effective_gamma_table()
    noise_cols = eff[:, spec.noise_mask]
    assert np.allclose(noise_cols, noise_cols[0:1, :])
