import itertools
import math

import numpy as np
import pytest

from ffica.errors import CapacityError, ConfigError
from ffica.fields import invert_matrix, is_monomial, matrix_rank, random_invertible
from ffica.ica import (
    BlockICAConfig,
    block_greedy_linear_ica,
    brute_force_optimal_linear,
    build_entropy_table,
    count_invertible_matrices,
    expected_rows_examined,
    greedy_linear_ica,
    linear_lower_bound,
    order_permutation,
    row_draw_statistics,
    rows_examined_variance_bound,
    simulate_rows_examined,
    total_correlation,
)
from ffica.pmf import (
    JointPMF,
    SampleSet,
    binary_entropy,
    empirical_pmf,
    entropy,
    sample_bernoulli_product,
    sample_uniform_simplex,
    transform_pmf,
    transform_samples,
)

EXAMPLE = JointPMF(2, 2, [0.4, 0.1, 0.2, 0.3])


def bernoulli_product_pmf(params) -> JointPMF:
    """Exact joint pmf of independent bits (independent oracle helper)."""
    d = len(params)
    probs = np.ones(1)
    for p in params:
        probs = np.concatenate([probs * (1 - p), probs * p])
    # bit j of the outer product index is component j reversed; rebuild in
    # package order instead of relying on concatenation order.
    out = np.empty(2**d)
    for idx in range(2**d):
        value = 1.0
        for j, p in enumerate(params):
            bit = (idx >> (d - 1 - j)) & 1
            value *= p if bit else 1 - p
        out[idx] = value
    return JointPMF(2, d, out)


def xor_combination_entropy(params, subset) -> float:
    """Entropy of the XOR over ``subset`` of independent bits, computed by
    direct probability recursion (no package transforms involved)."""
    p_one = 0.0
    for j in subset:
        p = params[j]
        p_one = p_one * (1 - p) + (1 - p_one) * p
    if p_one in (0.0, 1.0):
        return 0.0
    return -(p_one * math.log2(p_one) + (1 - p_one) * math.log2(1 - p_one))


class TestEntropyTable:
    def test_worked_example_order(self):
        table = build_entropy_table(EXAMPLE)
        assert table.row_indices.tolist() == [0b11, 0b01, 0b10]
        assert table.entropies == pytest.approx(
            [binary_entropy(0.7), binary_entropy(0.6), 1.0], abs=1e-12
        )
        assert np.array_equal(table.row_vector(0), [1, 1])

    def test_point_mass_sorted_by_index(self):
        probs = np.zeros(8)
        probs[3] = 1.0
        table = build_entropy_table(JointPMF(2, 3, probs))
        assert table.row_indices.tolist() == list(range(1, 8))
        assert np.allclose(table.entropies, 0.0)

    def test_uniform_ties_broken_by_index(self):
        table = build_entropy_table(JointPMF(3, 2, np.full(9, 1 / 9)))
        assert table.row_indices.tolist() == list(range(1, 9))
        assert np.allclose(table.entropies, math.log2(3))

    def test_length_excludes_zero_row(self):
        assert len(build_entropy_table(EXAMPLE)) == 3


class TestLinearLowerBound:
    def test_point_mass_is_zero(self):
        probs = np.zeros(16)
        probs[7] = 1.0
        assert linear_lower_bound(JointPMF(2, 4, probs)) == 0.0

    def test_worked_example(self):
        expected = binary_entropy(0.7) + binary_entropy(0.6)
        assert linear_lower_bound(EXAMPLE) == pytest.approx(expected, abs=1e-12)
        assert linear_lower_bound(EXAMPLE) == pytest.approx(1.8522, abs=5e-5)

    def test_independent_bits_bound_from_exhaustive_oracle(self):
        # Oracle first: enumerate all 7 nonzero XOR combinations directly.
        # For p = (0.1, 0.2, 0.3) the pair XOR {0,1} lands at h(0.26),
        # *below* the third singleton h(0.3), so the bound takes it and
        # dips under the sum of marginals (which is what the greedy basis
        # still attains, since that pair XOR is dependent on the first two
        # singletons).
        params = [0.1, 0.2, 0.3]
        subsets = [s for r in (1, 2, 3) for s in itertools.combinations(range(3), r)]
        by_subset = {s: xor_combination_entropy(params, s) for s in subsets}
        three_smallest = sorted(by_subset.values())[:3]
        assert three_smallest == [
            by_subset[(0,)],
            by_subset[(1,)],
            by_subset[(0, 1)],
        ]
        expected_bound = sum(three_smallest)
        assert expected_bound == pytest.approx(2.0176700610, abs=1e-9)
        pmf = bernoulli_product_pmf(params)
        assert linear_lower_bound(pmf) == pytest.approx(expected_bound, abs=1e-12)
        # The attainable optimum is the sum of marginal entropies.
        greedy = greedy_linear_ica(pmf)
        marginal_sum = sum(binary_entropy(p) for p in params)
        assert marginal_sum == pytest.approx(2.072215, abs=1e-6)
        assert greedy.objective == pytest.approx(marginal_sum, abs=1e-12)
        assert greedy.objective > linear_lower_bound(pmf)


class TestGreedy:
    def test_worked_example(self):
        res = greedy_linear_ica(EXAMPLE)
        assert res.w.tolist() == [[1, 1], [0, 1]]
        assert res.objective == pytest.approx(
            binary_entropy(0.7) + binary_entropy(0.6), abs=1e-12
        )
        assert res.rows_examined == 2
        assert res.objective == pytest.approx(res.lower_bound, abs=1e-12)

    def test_point_mass(self):
        probs = np.zeros(8)
        probs[0] = 1.0
        res = greedy_linear_ica(JointPMF(2, 3, probs))
        assert res.objective == 0.0
        assert matrix_rank(res.w, 2) == 3
        assert res.rows_examined >= 3

    def test_objective_is_sum_of_component_entropies(self):
        rng = np.random.default_rng(0)
        for q, d in [(2, 4), (3, 3)]:
            pmf = JointPMF(q, d, sample_uniform_simplex(q**d, rng))
            res = greedy_linear_ica(pmf)
            assert res.objective == pytest.approx(
                res.component_entropies.sum(), abs=1e-9
            )
            assert matrix_rank(res.w, q) == d
            # component entropies match the transformed pmf's marginals
            moved = transform_pmf(pmf, res.w)
            marginals = moved.component_marginals()
            assert res.component_entropies == pytest.approx(
                [entropy(m) for m in marginals], abs=1e-9
            )

    def test_recovers_mixed_independent_sources(self):
        rng = np.random.default_rng(1)
        sources = sample_bernoulli_product(np.full(6, 0.4), 10_000, rng)
        mixing = random_invertible(6, 2, rng, nontrivial=True)
        mixed = transform_samples(sources, mixing)
        res = greedy_linear_ica(empirical_pmf(mixed))
        assert is_monomial((res.w @ mixing) % 2)

    def test_objective_invariant_under_monomial_relabeling(self):
        rng = np.random.default_rng(2)
        pmf = JointPMF(3, 3, sample_uniform_simplex(27, rng))
        base = greedy_linear_ica(pmf)
        for _ in range(5):
            perm = rng.permutation(3)
            scales = rng.integers(1, 3, size=3)
            monomial = (np.eye(3, dtype=int)[perm] * scales[:, None]) % 3
            relabeled = transform_pmf(pmf, monomial)
            res = greedy_linear_ica(relabeled)
            assert res.objective == pytest.approx(base.objective, abs=1e-9)

    def test_scalar_dedup_flag_is_result_equivalent(self):
        rng = np.random.default_rng(3)
        for q in (3, 5):
            pmf = JointPMF(q, 3, sample_uniform_simplex(q**3, rng))
            plain = greedy_linear_ica(pmf)
            dedup = greedy_linear_ica(pmf, dedup_scalar_multiples=True)
            assert dedup.objective == pytest.approx(plain.objective, abs=1e-12)
            assert matrix_rank(dedup.w, q) == 3


class TestBlockGreedy:
    def test_single_block_single_pass_equals_greedy(self):
        res = greedy_linear_ica(EXAMPLE)
        blocked = block_greedy_linear_ica(
            EXAMPLE, BlockICAConfig(blocks=1, max_iter=1, seed=5)
        )
        assert np.array_equal(blocked.w, res.w)
        assert blocked.objective == pytest.approx(res.objective, abs=0)
        assert blocked.iterations == 1

    def test_size_one_blocks_keep_objective_constant(self):
        rng = np.random.default_rng(4)
        pmf = JointPMF(2, 4, sample_uniform_simplex(16, rng))
        res = block_greedy_linear_ica(
            pmf, BlockICAConfig(blocks=4, max_iter=6, seed=0, epsilon=0.0)
        )
        assert np.allclose(res.trace, res.trace[0], atol=1e-12)

    def test_trace_monotone_and_rank_full(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            q = int(rng.choice([2, 3]))
            d = int(rng.integers(2, 7))
            pmf = JointPMF(q, d, sample_uniform_simplex(q**d, rng))
            cfg = BlockICAConfig(
                blocks=int(rng.integers(1, d + 1)),
                max_iter=int(rng.integers(1, 6)),
                seed=int(rng.integers(0, 1000)),
            )
            res = block_greedy_linear_ica(pmf, cfg)
            assert np.all(np.diff(res.trace) <= 1e-9)
            assert matrix_rank(res.w, q) == d
            # the accumulated transform reproduces the final objective
            moved = transform_pmf(pmf, res.w)
            direct = sum(entropy(m) for m in moved.component_marginals())
            assert direct == pytest.approx(res.objective, abs=1e-9)

    def test_sample_and_pmf_paths_agree(self):
        # n = 512 keeps every empirical probability an exact dyadic, so the
        # block pmfs match bit for bit along both routes.
        rng = np.random.default_rng(6)
        rows = rng.integers(0, 2, size=(512, 6))
        samples = SampleSet(2, 6, rows)
        cfg = BlockICAConfig(blocks=3, max_iter=4, seed=9)
        from_samples = block_greedy_linear_ica(samples, cfg)
        from_pmf = block_greedy_linear_ica(empirical_pmf(samples), cfg)
        assert np.array_equal(from_samples.w, from_pmf.w)
        assert from_samples.trace == pytest.approx(from_pmf.trace, abs=1e-12)

    def test_objective_never_below_lower_bound(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            pmf = JointPMF(2, 5, sample_uniform_simplex(32, rng))
            res = block_greedy_linear_ica(pmf, BlockICAConfig(blocks=2, seed=1))
            assert res.objective >= linear_lower_bound(pmf) - 1e-9

    def test_invalid_config(self):
        with pytest.raises(ConfigError):
            BlockICAConfig(blocks=0)
        with pytest.raises(ConfigError):
            BlockICAConfig(blocks=2, max_iter=0)
        with pytest.raises(ConfigError):
            BlockICAConfig(blocks=2, epsilon=-1.0)
        with pytest.raises(ConfigError):
            block_greedy_linear_ica(EXAMPLE, BlockICAConfig(blocks=3))

    def test_epsilon_stops_early(self):
        rng = np.random.default_rng(8)
        pmf = JointPMF(2, 4, sample_uniform_simplex(16, rng))
        res = block_greedy_linear_ica(
            pmf, BlockICAConfig(blocks=2, max_iter=50, epsilon=1e-12, seed=0)
        )
        assert res.iterations < 50


class TestOrderPermutation:
    def test_worked_example(self):
        pmf = JointPMF(2, 2, [0.4, 0.3, 0.2, 0.1])
        res = order_permutation(pmf)
        # sorted ascending (0.1, 0.2, 0.3, 0.4) -> words 00, 01, 10, 11
        assert res.assignment.tolist() == [3, 2, 1, 0]
        expected = binary_entropy(0.3) + binary_entropy(0.4)
        assert res.objective == pytest.approx(expected, abs=1e-12)
        assert res.total_correlation == pytest.approx(
            expected - entropy(pmf.probs), abs=1e-12
        )

    def test_uniform_pmf(self):
        res = order_permutation(JointPMF(2, 3, np.full(8, 0.125)))
        assert res.objective == pytest.approx(3.0, abs=1e-12)
        assert res.total_correlation == pytest.approx(0.0, abs=1e-12)

    def test_point_mass(self):
        probs = np.zeros(8)
        probs[2] = 1.0
        res = order_permutation(JointPMF(2, 3, probs))
        assert res.objective == 0.0

    def test_assignment_is_a_permutation(self):
        rng = np.random.default_rng(9)
        res = order_permutation(JointPMF(2, 4, sample_uniform_simplex(16, rng)))
        assert sorted(res.assignment.tolist()) == list(range(16))

    def test_first_component_entropy_is_optimal(self):
        # Brute-force oracle: over all 8! relabelings of a size-8 pmf the
        # smallest achievable H(Y_1) equals the order permutation's.
        rng = np.random.default_rng(10)
        probs = sample_uniform_simplex(8, rng)
        res = order_permutation(JointPMF(2, 3, probs))
        best = min(
            binary_entropy(sum(assigned[:4]))
            for assigned in itertools.permutations(probs.tolist())
        )
        assert res.component_entropies[0] == pytest.approx(best, abs=1e-12)

    def test_general_q_words(self):
        rng = np.random.default_rng(11)
        pmf = JointPMF(3, 2, sample_uniform_simplex(9, rng))
        res = order_permutation(pmf)
        assert res.total_correlation >= -1e-9
        assert sorted(res.assignment.tolist()) == list(range(9))


class TestTotalCorrelation:
    def test_product_pmf_is_zero(self):
        pmf = bernoulli_product_pmf([0.2, 0.6, 0.45])
        assert abs(total_correlation(pmf)) <= 1e-12

    def test_perfectly_correlated_bits(self):
        pmf = JointPMF(2, 2, [0.5, 0.0, 0.0, 0.5])
        assert total_correlation(pmf) == pytest.approx(1.0, abs=1e-12)

    def test_worked_example(self):
        assert total_correlation(EXAMPLE) == pytest.approx(0.124511, abs=1e-6)

    def test_never_negative(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            q = int(rng.choice([2, 3]))
            d = int(rng.integers(2, 4))
            pmf = JointPMF(q, d, sample_uniform_simplex(q**d, rng))
            assert total_correlation(pmf) >= -1e-9


class TestBruteForce:
    def test_enumerates_exactly_six_matrices_d2_q2(self):
        assert count_invertible_matrices(2, 2) == 6
        from ffica.ica import _basis_tuples

        assert _basis_tuples(2, 2).shape == (6, 2)

    def test_product_pmf_identity_is_optimal(self):
        params = [0.1, 0.35]
        pmf = bernoulli_product_pmf(params)
        w, objective = brute_force_optimal_linear(pmf)
        expected = sum(binary_entropy(p) for p in params)
        assert objective == pytest.approx(expected, abs=1e-12)

    def test_sandwich_holds_on_random_pmfs(self):
        rng = np.random.default_rng(13)
        for q, d in [(2, 2), (2, 3), (2, 4), (3, 2)]:
            for _ in range(20):
                pmf = JointPMF(q, d, sample_uniform_simplex(q**d, rng))
                bound = linear_lower_bound(pmf)
                _, best = brute_force_optimal_linear(pmf)
                greedy = greedy_linear_ica(pmf).objective
                assert bound <= best + 1e-9
                assert best <= greedy + 1e-9

    def test_capacity_guard(self):
        probs = np.zeros(32)
        probs[0] = 1.0
        with pytest.raises(CapacityError):
            brute_force_optimal_linear(JointPMF(2, 5, probs), max_matrices=10**6)

    def test_returned_matrix_is_invertible_and_attains_objective(self):
        rng = np.random.default_rng(14)
        pmf = JointPMF(2, 3, sample_uniform_simplex(8, rng))
        w, objective = brute_force_optimal_linear(pmf)
        assert matrix_rank(w, 2) == 3
        moved = transform_pmf(pmf, w)
        attained = sum(entropy(m) for m in moved.component_marginals())
        assert attained == pytest.approx(objective, abs=1e-9)


class TestRowDrawModel:
    def test_closed_form_mean_d3_q2(self):
        assert expected_rows_examined(3, 2) == pytest.approx(
            8 / 7 + 8 / 6 + 8 / 4, abs=1e-12
        )
        assert expected_rows_examined(3, 2) == pytest.approx(4.476190, abs=1e-6)

    def test_mean_overhead_below_two_for_gf2(self):
        for d in range(1, 65):
            assert expected_rows_examined(d, 2) - d <= 2.0

    def test_mean_overhead_approaches_field_bound(self):
        for q in (3, 5, 7, 11):
            overhead = expected_rows_examined(40, q) - 40
            assert overhead <= q / (q - 1) ** 2

    def test_variance_bound_value(self):
        assert rows_examined_variance_bound(2) == pytest.approx(6.0, abs=1e-12)

    def test_empirical_matches_analytic(self):
        trials = 4000
        samples = simulate_rows_examined(10, 2, trials, seed=100)
        se = samples.std(ddof=1) / math.sqrt(trials)
        assert abs(samples.mean() - expected_rows_examined(10, 2)) <= 3 * se
        assert samples.min() >= 10

    def test_empirical_variance_within_limit(self):
        trials = 4000
        samples = simulate_rows_examined(12, 2, trials, seed=101)
        var = samples.var(ddof=1)
        centered = samples - samples.mean()
        var_se = math.sqrt(max((centered**4).mean() - var**2, 0) / trials)
        assert var <= 2.744 + 3 * var_se

    def test_general_field_simulation(self):
        trials = 2000
        samples = simulate_rows_examined(4, 3, trials, seed=102)
        se = samples.std(ddof=1) / math.sqrt(trials)
        assert abs(samples.mean() - expected_rows_examined(4, 3)) <= 3 * se

    def test_statistics_wrapper(self):
        stats = row_draw_statistics(6, 2, 500, seed=103)
        assert stats.analytic_mean == pytest.approx(expected_rows_examined(6, 2))
        assert stats.analytic_variance_bound == pytest.approx(6.0)
        assert stats.mean_rows >= 6

    def test_trials_validated(self):
        with pytest.raises(ConfigError):
            simulate_rows_examined(4, 2, 0)
