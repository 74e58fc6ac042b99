"""The acceptance suite: nine numbered criteria with pinned tolerances.

Each criterion is a plain function returning a CriterionResult; the CLI
``verify`` subcommand and tests/test_acceptance.py both run these, so the
pass/fail logic lives in exactly one place.  All seeds are fixed: the
checks are deterministic.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .coding import (
    compress,
    decompress,
    fit_compression_transform,
    huffman_dictionary_rate,
    marginal_rate_no_transform,
)
from .fields import is_monomial, matrix_rank, random_invertible
from .ica import (
    BlockICAConfig,
    block_greedy_linear_ica,
    brute_force_optimal_linear,
    greedy_linear_ica,
    linear_lower_bound,
    simulate_rows_examined,
    total_correlation,
)
from .pmf import (
    JointPMF,
    all_combination_entropies,
    binary_entropy,
    digamma,
    empirical_pmf,
    entropy,
    sample_bernoulli_product,
    sample_uniform_simplex,
    transform_pmf,
    transform_samples,
    walsh_hadamard_transform,
)
from .rng import as_generator

_LN2 = float(np.log(2.0))


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    summary: str
    seconds: float
    details: dict = dataclass_field(default_factory=dict)


def format_result(res: CriterionResult) -> str:
    status = "PASS" if res.passed else "FAIL"
    return f"{status}  criterion {res.number} ({res.name}): {res.summary} [{res.seconds:.1f}s]"


def _result(number, name, passed, summary, start, **details) -> CriterionResult:
    return CriterionResult(
        number=number,
        name=name,
        passed=bool(passed),
        summary=summary,
        seconds=time.perf_counter() - start,
        details=details,
    )


def criterion_1_source_recovery() -> CriterionResult:
    """Unmix 8 Bernoulli(0.4) sources from 10k samples, 50 seeded trials."""
    start = time.perf_counter()
    d, n, p, trials = 8, 10_000, 0.4, 50
    reference = d * binary_entropy(p)  # 7.7676 bits
    rng = as_generator(1001)
    recovered = 0
    max_gap = 0.0
    for _ in range(trials):
        sources = sample_bernoulli_product(np.full(d, p), n, rng)
        mixing = random_invertible(d, 2, rng, nontrivial=True)
        res = greedy_linear_ica(empirical_pmf(transform_samples(sources, mixing)))
        if is_monomial((res.w @ mixing) % 2):
            recovered += 1
        max_gap = max(max_gap, abs(res.objective - reference))
    elapsed = time.perf_counter() - start
    passed = recovered >= 45 and max_gap <= 0.15 and elapsed < 30.0
    return _result(
        1,
        "source recovery",
        passed,
        f"recovered {recovered}/{trials}, max |objective - {reference:.4f}| = {max_gap:.4f}",
        start,
        recovered=recovered,
        trials=trials,
        max_gap=max_gap,
        reference=float(reference),
    )


def criterion_2_sandwich() -> CriterionResult:
    """bound <= brute-force optimum <= greedy, 200 simplex pmfs per config."""
    start = time.perf_counter()
    configs = [(2, 2), (2, 3), (2, 4), (3, 2)]
    draws = 200
    rng = as_generator(1002)
    worst = 0.0
    bound_eq = {}
    greedy_eq = {}
    for q, d in configs:
        eq_bound = eq_greedy = 0
        for _ in range(draws):
            pmf = JointPMF(q, d, sample_uniform_simplex(q**d, rng))
            bound = linear_lower_bound(pmf)
            _, brute = brute_force_optimal_linear(pmf)
            greedy = greedy_linear_ica(pmf).objective
            worst = max(worst, bound - brute, brute - greedy)
            eq_bound += abs(bound - brute) <= 1e-9
            eq_greedy += abs(brute - greedy) <= 1e-9
        bound_eq[f"q{q}d{d}"] = eq_bound / draws
        greedy_eq[f"q{q}d{d}"] = eq_greedy / draws
    elapsed = time.perf_counter() - start
    passed = worst <= 1e-9 and elapsed < 120.0
    return _result(
        2,
        "sandwich oracle",
        passed,
        f"max violation {worst:.2e}; bound==optimal rates {bound_eq}; "
        f"optimal==greedy rates {greedy_eq}",
        start,
        worst_violation=worst,
        bound_equality_rates=bound_eq,
        greedy_equality_rates=greedy_eq,
    )


def criterion_3_row_draw_statistics() -> CriterionResult:
    """Draw-count statistics of the uniform-row model at pinned scales."""
    start = time.perf_counter()
    trials = 10_000
    # (q=2, d=16): mean and variance.
    samples = simulate_rows_examined(16, 2, trials, seed=1003)
    mean_gap = abs(samples.mean() - 16 - 1.606)
    var = samples.var(ddof=1)
    centered = samples - samples.mean()
    var_se = float(np.sqrt(max((centered**4).mean() - var**2, 0.0) / trials))
    var_ok = var <= 2.744 + 3 * var_se
    # (q=7, d=6): mean overhead against q/(q-1)^2.
    samples7 = simulate_rows_examined(6, 7, trials, seed=1033)
    overhead7 = samples7.mean() - 6
    se7 = float(samples7.std(ddof=1) / np.sqrt(trials))
    bound7 = 7.0 / 36.0
    ok7 = overhead7 <= bound7 + 3 * se7
    # Tail at a simulable scale (q=2, d=20), a = 6.
    tail_samples = simulate_rows_examined(20, 2, trials, seed=1063)
    tail = float((tail_samples >= 20 + 2 + 6).mean())
    tail_se = float(np.sqrt(max(tail * (1 - tail), 1e-12) / trials))
    tail_ok = tail <= 0.077 + 3 * tail_se
    elapsed = time.perf_counter() - start
    passed = mean_gap <= 0.05 and var_ok and ok7 and tail_ok and elapsed < 60.0
    return _result(
        3,
        "row-draw statistics",
        passed,
        f"|mean-d-1.606| = {mean_gap:.4f}, var = {var:.3f} (limit 2.744+3se), "
        f"q7 overhead = {overhead7:.4f} (limit {bound7:.4f}+3se), tail = {tail:.4f}",
        start,
        mean_gap=mean_gap,
        variance=float(var),
        variance_se=var_se,
        q7_overhead=float(overhead7),
        q7_se=se7,
        tail=tail,
        tail_se=tail_se,
    )


def _identity_and_orderperm_means(d: int, draws: int, seed: int, batch: int = 512):
    """Batched simplex Monte-Carlo: order-permutation total correlation and
    identity-transform objective (with their standard errors)."""
    m = 1 << d
    rng = as_generator(seed)
    singleton_idx = (1 << np.arange(d - 1, -1, -1)).astype(np.int64)
    words = np.arange(m)
    zero_mask = (((words[:, None] >> np.arange(d - 1, -1, -1)[None, :]) & 1) == 0).astype(
        np.float64
    )
    tc_vals = np.empty(draws)
    id_vals = np.empty(draws)
    joint_vals = np.empty(draws)
    done = 0
    while done < draws:
        size = min(batch, draws - done)
        p = sample_uniform_simplex(m, rng, size=size)
        coeff = walsh_hadamard_transform(p)
        ents = binary_entropy(np.clip((1.0 + coeff) / 2.0, 0.0, 1.0))
        id_vals[done : done + size] = ents[:, singleton_idx].sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            contrib = np.where(p > 0, p * np.log2(p), 0.0)
        joint = -contrib.sum(axis=1)
        sorted_p = np.sort(p, axis=1)
        perm_obj = binary_entropy(sorted_p @ zero_mask).sum(axis=1)
        tc_vals[done : done + size] = perm_obj - joint
        joint_vals[done : done + size] = joint
        done += size
    return tc_vals, id_vals, joint_vals


def criterion_4_orderperm_average() -> CriterionResult:
    """Average order-permutation total correlation at d = 10."""
    start = time.perf_counter()
    d, draws = 10, 10_000
    m = 1 << d
    tc, _, _ = _identity_and_orderperm_means(d, draws, seed=1004)
    mean = float(tc.mean())
    se = float(tc.std(ddof=1) / np.sqrt(draws))
    soft = 0.0162 + 10.0 / m + 3 * se
    elapsed = time.perf_counter() - start
    passed = mean <= soft and mean <= 0.03 and elapsed < 300.0
    return _result(
        4,
        "order-permutation average objective",
        passed,
        f"mean = {mean:.5f} (target <= {soft:.5f}, hard limit 0.03)",
        start,
        mean=mean,
        se=se,
        soft_threshold=soft,
        hard_threshold=0.03,
    )


def criterion_5_identity_average_resolution() -> CriterionResult:
    """Which closed form matches the average identity-transform objective."""
    start = time.perf_counter()
    d, draws = 4, 100_000
    m = 1 << d
    _, id_vals, _ = _identity_and_orderperm_means(d, draws, seed=1005)
    mean = float(id_vals.mean())
    se = float(id_vals.std(ddof=1) / np.sqrt(draws))
    printed = d / _LN2 * (digamma(m - 1) - digamma(m // 2))
    rederived = d / _LN2 * (digamma(m + 1) - digamma(m // 2 + 1))
    d_printed = abs(mean - printed)
    d_rederived = abs(mean - rederived)
    matches = []
    if d_printed <= 3 * se:
        matches.append("printed")
    if d_rederived <= 3 * se:
        matches.append("rederived")
    passed = bool(matches)
    return _result(
        5,
        "identity-average closed form",
        passed,
        f"mean = {mean:.5f}; printed form off by {d_printed:.5f}, "
        f"rederived off by {d_rederived:.5f} (3se = {3 * se:.5f}); matches: {matches}",
        start,
        mean=mean,
        se=se,
        printed=float(printed),
        rederived=float(rederived),
        matches=matches,
    )


def criterion_6_joint_entropy_anchor() -> CriterionResult:
    """Mean simplex entropy equals its digamma expression at d in {4,6,8}."""
    start = time.perf_counter()
    draws = 20_000
    rng = as_generator(1006)
    gaps = {}
    ok = True
    for d in (4, 6, 8):
        m = 1 << d
        vals = np.empty(draws)
        done = 0
        while done < draws:
            size = min(2048, draws - done)
            p = sample_uniform_simplex(m, rng, size=size)
            with np.errstate(divide="ignore", invalid="ignore"):
                contrib = np.where(p > 0, p * np.log2(p), 0.0)
            vals[done : done + size] = -contrib.sum(axis=1)
            done += size
        analytic = (digamma(m + 1) - digamma(2)) / _LN2
        se = float(vals.std(ddof=1) / np.sqrt(draws))
        gap = abs(float(vals.mean()) - analytic)
        gaps[d] = (gap, 3 * se)
        ok = ok and gap <= 3 * se
    return _result(
        6,
        "joint-entropy analytic anchor",
        ok,
        "; ".join(f"d={d}: |gap| = {g:.5f} vs 3se = {s:.5f}" for d, (g, s) in gaps.items()),
        start,
        gaps={d: {"gap": g, "three_se": s} for d, (g, s) in gaps.items()},
    )


def criterion_7_fast_path_equivalence() -> CriterionResult:
    """Walsh-Hadamard equals naive marginalization, 100 pmfs per d <= 12."""
    start = time.perf_counter()
    rng = as_generator(1007)
    worst = 0.0
    for d in range(1, 13):
        m = 1 << d
        for _ in range(100):
            pmf = JointPMF(2, d, sample_uniform_simplex(m, rng))
            fast = all_combination_entropies(pmf, method="wht")
            naive = all_combination_entropies(pmf, method="naive")
            worst = max(worst, float(np.abs(fast - naive).max()))
    passed = worst <= 1e-12
    return _result(
        7,
        "fast-path equivalence",
        passed,
        f"max |fast - naive| = {worst:.2e} over 1200 pmfs",
        start,
        worst=worst,
    )


def criterion_8_compression() -> CriterionResult:
    """End-to-end coding rates on the d=20 mixed ramp sources."""
    start = time.perf_counter()
    d, n = 20, 10_000
    params = np.arange(1, d + 1) / d
    reference = float(binary_entropy(params).sum())
    rng = as_generator(1008)
    sources = sample_bernoulli_product(params, n, rng)
    mixing = random_invertible(d, 2, rng, nontrivial=True)
    mixed = transform_samples(sources, mixing)

    t0 = time.perf_counter()
    glica_transform = fit_compression_transform(mixed, mode="glica")
    glica_fit = time.perf_counter() - t0
    t0 = time.perf_counter()
    block_transform = fit_compression_transform(mixed, mode="bloglica", blocks=2)
    block_fit = time.perf_counter() - t0

    blob = compress(mixed, transform=glica_transform)
    glica_rate = blob.rate_report().bits_per_symbol
    marginal_rate = marginal_rate_no_transform(mixed).bits_per_symbol
    huffman_rate = huffman_dictionary_rate(mixed).bits_per_symbol
    roundtrip = bool(
        np.array_equal(decompress(blob.to_bytes()).rows, mixed.rows)
    )
    elapsed = time.perf_counter() - start
    checks = {
        "reference_prints_14.36": abs(reference - 14.36) <= 0.005,
        "glica_rate": 14.36 <= glica_rate <= 16.0,
        "marginal_rate": 19.5 <= marginal_rate <= 20.5,
        "huffman_rate": huffman_rate > 20.0,
        "roundtrip": roundtrip,
        "block_speedup": block_fit <= glica_fit / 5.0,
        "runtime": elapsed < 600.0,
    }
    passed = all(checks.values())
    return _result(
        8,
        "compression rates",
        passed,
        f"reference = {reference:.2f} bits, codec = {glica_rate:.3f}, "
        f"marginal = {marginal_rate:.3f}, huffman = {huffman_rate:.2f}, "
        f"fit {glica_fit:.2f}s vs block {block_fit:.3f}s",
        start,
        reference=reference,
        glica_rate=float(glica_rate),
        marginal_rate=float(marginal_rate),
        huffman_rate=float(huffman_rate),
        glica_fit_seconds=glica_fit,
        block_fit_seconds=block_fit,
        checks=checks,
    )


def criterion_9_structural_properties() -> CriterionResult:
    """Monotone block traces, full-rank transforms, non-negative total
    correlation on fuzzed pmfs, entropy invariance under transforms."""
    start = time.perf_counter()
    rng = as_generator(1009)
    trace_ok = rank_ok = True
    for _ in range(100):
        q = int(rng.choice([2, 3]))
        d = int(rng.integers(2, 7))
        pmf = JointPMF(q, d, sample_uniform_simplex(q**d, rng))
        cfg = BlockICAConfig(
            blocks=int(rng.integers(1, d + 1)),
            max_iter=int(rng.integers(1, 8)),
            seed=int(rng.integers(0, 2**31)),
        )
        res = block_greedy_linear_ica(pmf, cfg)
        trace_ok &= bool(np.all(np.diff(res.trace) <= 1e-9))
        rank_ok &= matrix_rank(res.w, q) == d

    tc_min = np.inf
    for _ in range(10_000):
        q = int(rng.choice([2, 3]))
        d = int(rng.integers(2, 4))
        m = q**d
        raw = sample_uniform_simplex(m, rng)
        # Fuzz: sparsify some cells, renormalize; sometimes a point mass.
        style = rng.integers(0, 3)
        if style == 1:
            mask = rng.random(m) < 0.5
            raw = raw * mask
            if raw.sum() == 0:
                raw = np.zeros(m)
                raw[int(rng.integers(m))] = 1.0
            raw = raw / raw.sum()
        elif style == 2:
            raw = np.zeros(m)
            raw[int(rng.integers(m))] = 1.0
        tc_min = min(tc_min, total_correlation(JointPMF(q, d, raw)))

    entropy_gap = 0.0
    for _ in range(300):
        q = int(rng.choice([2, 3, 5]))
        d = int(rng.integers(2, 5))
        pmf = JointPMF(q, d, sample_uniform_simplex(q**d, rng))
        w = random_invertible(d, q, rng)
        entropy_gap = max(
            entropy_gap, abs(transform_pmf(pmf, w).entropy() - pmf.entropy())
        )
    passed = trace_ok and rank_ok and tc_min >= -1e-9 and entropy_gap <= 1e-9
    return _result(
        9,
        "structural properties",
        passed,
        f"traces monotone: {trace_ok}, ranks full: {rank_ok}, "
        f"min total correlation = {tc_min:.2e}, max |dH| = {entropy_gap:.2e}",
        start,
        trace_ok=trace_ok,
        rank_ok=rank_ok,
        tc_min=float(tc_min),
        entropy_gap=float(entropy_gap),
    )


CRITERIA = {
    1: criterion_1_source_recovery,
    2: criterion_2_sandwich,
    3: criterion_3_row_draw_statistics,
    4: criterion_4_orderperm_average,
    5: criterion_5_identity_average_resolution,
    6: criterion_6_joint_entropy_anchor,
    7: criterion_7_fast_path_equivalence,
    8: criterion_8_compression,
    9: criterion_9_structural_properties,
}


def run_criteria(numbers=None) -> list[CriterionResult]:
    chosen = sorted(CRITERIA) if not numbers else sorted(set(numbers))
    unknown = [n for n in chosen if n not in CRITERIA]
    if unknown:
        raise ValueError(f"unknown criteria {unknown}; valid: {sorted(CRITERIA)}")
    return [CRITERIA[n]() for n in chosen]
