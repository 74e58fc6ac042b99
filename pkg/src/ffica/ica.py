"""Entropy-minimizing linear transforms over GF(q) and baselines.

The central objects: a table of all nonzero coefficient rows sorted by the
entropy of their linear combination, the lower bound given by its d
smallest entries, the greedy scan that accepts rows while they extend a
basis, a block-iterative variant for large d, the non-linear
order-permutation baseline, a brute-force oracle over all invertible
matrices, and the statistics of the idealized row-drawing model behind the
greedy scan's cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ConfigError
from .fields import IncrementalBasis, PrimeField, as_field, identity_matrix
from .pmf import (
    JointPMF,
    SampleSet,
    _entropy_rows,
    all_combination_entropies,
    decode_indices,
    encode_words,
    entropy,
    transform_pmf,
    word_powers,
)
from .rng import as_generator


@dataclass(frozen=True)
class EntropyTable:
    """All q**d - 1 nonzero coefficient rows sorted by combination entropy.

    Rows are stored as word indices (see the package index convention);
    ties in entropy are broken by ascending row index, so the table is
    deterministic for a given pmf.
    """

    q: int
    d: int
    row_indices: np.ndarray
    entropies: np.ndarray

    def __len__(self) -> int:
        return self.row_indices.shape[0]

    def row_vector(self, position: int) -> np.ndarray:
        """Coefficient vector at a 0-based table position."""
        return decode_indices(int(self.row_indices[position]), self.q, self.d)


def build_entropy_table(pmf: JointPMF, method: str = "auto") -> EntropyTable:
    """Sorted entropy table of all nonzero rows (stable tie-break by index)."""
    ents = all_combination_entropies(pmf, method=method)
    order = np.argsort(ents[1:], kind="stable").astype(np.int64) + 1
    return EntropyTable(pmf.q, pmf.d, order, ents[order])


def linear_lower_bound(pmf: JointPMF, method: str = "auto") -> float:
    """Sum of the d smallest nonzero-row combination entropies, in bits.

    No invertible transform can beat this value, although it need not be
    attainable: the d smallest rows may be linearly dependent.
    """
    ents = all_combination_entropies(pmf, method=method)
    d = pmf.d
    smallest = np.sort(np.partition(ents[1:], d - 1)[:d])
    return float(smallest.sum())


@dataclass(frozen=True)
class LinearICAResult:
    """Outcome of a linear decomposition search.

    ``objective`` is the sum of marginal component entropies of Y = W X in
    bits; ``rows_examined`` is the 1-based table position at which the
    greedy scan reached full rank.
    """

    w: np.ndarray
    objective: float
    component_entropies: np.ndarray
    rows_examined: int
    lower_bound: float


def _scalar_canonical_index(index: int, q: int, d: int) -> int:
    """Smallest word index among the nonzero scalar multiples of a row."""
    digits = decode_indices(index, q, d)
    powers = word_powers(q, d)
    return min(int(((c * digits) % q) @ powers) for c in range(1, q))


def greedy_linear_ica(
    pmf: JointPMF,
    method: str = "auto",
    dedup_scalar_multiples: bool = False,
) -> LinearICAResult:
    """Greedy scan of the entropy table: accept rows that extend the basis.

    Scans the sorted table from the top and keeps each row that is linearly
    independent of those already kept, stopping at rank d.  The returned
    transform has rank d by construction, and its objective is the sum of
    the accepted rows' entropies.

    ``dedup_scalar_multiples`` (q > 2 only) skips rows whose scalar
    multiple was already examined; a multiple spans the same line, so the
    result is unchanged while the scan does less work.
    """
    table = build_entropy_table(pmf, method=method)
    q, d = pmf.q, pmf.d
    fld = PrimeField(q)
    basis = IncrementalBasis(fld, d)
    accepted_rows: list[np.ndarray] = []
    accepted_entropies: list[float] = []
    rows_examined = 0
    seen_lines: set[int] = set()
    for pos in range(len(table)):
        idx = int(table.row_indices[pos])
        if dedup_scalar_multiples and q > 2:
            canon = _scalar_canonical_index(idx, q, d)
            if canon in seen_lines:
                continue
            seen_lines.add(canon)
        if q == 2:
            ok = basis.try_add(idx)
        else:
            ok = basis.try_add(decode_indices(idx, q, d))
        if ok:
            rows_examined = pos + 1
            accepted_rows.append(decode_indices(idx, q, d))
            accepted_entropies.append(float(table.entropies[pos]))
            if basis.rank == d:
                break
    w = np.array(accepted_rows, dtype=np.int64)
    comp = np.array(accepted_entropies)
    return LinearICAResult(
        w=w,
        objective=float(comp.sum()),
        component_entropies=comp,
        rows_examined=rows_examined,
        lower_bound=float(table.entropies[:d].sum()),
    )


# ---------------------------------------------------------------------------
# block-iterative variant


@dataclass(frozen=True)
class BlockICAConfig:
    """Settings for the block-iterative greedy search.

    blocks: number of disjoint component blocks per pass.
    max_iter: maximal number of passes.
    epsilon: stop once a pass improves the objective by less than this.
    seed: drives the between-pass component shuffles.
    """

    blocks: int
    max_iter: int = 10
    epsilon: float = 1e-12
    seed: "int | None" = 0

    def __post_init__(self) -> None:
        if self.blocks < 1:
            raise ConfigError("blocks must be >= 1")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        if self.epsilon < 0:
            raise ConfigError("epsilon must be >= 0")


@dataclass(frozen=True)
class BlockICAResult:
    """Result of the block-iterative search, with its per-pass objective trace.

    ``trace[0]`` is the objective of the untransformed input and each later
    entry follows one block pass; the sequence is non-increasing.  The
    global lower bound is not computed here (avoiding it is the point of
    the block scheme), so ``lower_bound`` is None unless filled by a
    caller.
    """

    w: np.ndarray
    objective: float
    component_entropies: np.ndarray
    rows_examined: int
    trace: np.ndarray
    iterations: int
    lower_bound: "float | None" = None


def _block_sizes(d: int, blocks: int) -> list[int]:
    """Contiguous block sizes, as equal as possible, larger blocks first."""
    base, extra = divmod(d, blocks)
    return [base + 1] * extra + [base] * (blocks - extra)


class _PMFState:
    """Block-pass state over a dense joint pmf."""

    def __init__(self, pmf: JointPMF):
        self.pmf = pmf
        self.q, self.d = pmf.q, pmf.d

    def block_pmf(self, cols: list[int]) -> JointPMF:
        grid = self.pmf.probs.reshape((self.q,) * self.d)
        other = tuple(a for a in range(self.d) if a not in cols)
        marg = grid.sum(axis=other)
        return JointPMF(self.q, len(cols), marg.reshape(-1))

    def apply(self, w: np.ndarray) -> None:
        self.pmf = transform_pmf(self.pmf, w)

    def component_entropy_sum(self) -> float:
        return float(_entropy_rows(self.pmf.component_marginals()).sum())


class _SampleState:
    """Block-pass state over raw samples; per-block pmfs are re-estimated
    from the transformed samples, so only q**(block size) cells are ever
    materialized."""

    def __init__(self, samples: SampleSet):
        self.rows = samples.rows.copy()
        self.q, self.d = samples.q, samples.d
        self.n = samples.n

    def block_pmf(self, cols: list[int]) -> JointPMF:
        sub = self.rows[:, cols]
        counts = np.bincount(
            encode_words(sub, self.q), minlength=self.q ** len(cols)
        )
        return JointPMF(self.q, len(cols), counts / self.n)

    def apply(self, w: np.ndarray) -> None:
        self.rows = (self.rows @ w.T) % self.q

    def component_entropy_sum(self) -> float:
        total = 0.0
        for j in range(self.d):
            marg = np.bincount(self.rows[:, j], minlength=self.q) / self.n
            total += entropy(marg)
        return total


def block_greedy_linear_ica(
    data: "JointPMF | SampleSet",
    config: BlockICAConfig,
    method: str = "auto",
) -> BlockICAResult:
    """Iterated block-wise greedy search.

    Each pass splits the current components into contiguous blocks, runs
    the greedy solver inside every block (identity rows are always
    candidates, so a pass never increases the objective), then shuffles the
    components with a seeded random permutation so the next pass sees new
    block boundaries.  Stops after ``max_iter`` passes or when a pass
    improves the objective by less than ``epsilon``; the shuffle after the
    final pass is skipped since nothing follows it, which also makes
    blocks=1, max_iter=1 coincide exactly with the plain greedy solver.
    """
    if isinstance(data, JointPMF):
        state: "_PMFState | _SampleState" = _PMFState(data)
    elif isinstance(data, SampleSet):
        state = _SampleState(data)
    else:
        raise TypeError("expected a JointPMF or SampleSet")
    q, d = state.q, state.d
    if config.blocks > d:
        raise ConfigError(f"blocks must be <= d = {d}")
    rng = as_generator(config.seed)
    sizes = _block_sizes(d, config.blocks)
    w_total = identity_matrix(d)
    trace = [state.component_entropy_sum()]
    rows_examined = 0
    iterations = 0
    for _ in range(config.max_iter):
        iterations += 1
        w_pass = np.zeros((d, d), dtype=np.int64)
        start = 0
        objective = 0.0
        for size in sizes:
            cols = list(range(start, start + size))
            res = greedy_linear_ica(state.block_pmf(cols), method=method)
            w_pass[start : start + size, start : start + size] = res.w
            objective += res.objective
            rows_examined += res.rows_examined
            start += size
        state.apply(w_pass)
        w_total = (w_pass @ w_total) % q
        trace.append(objective)
        converged = trace[-2] - trace[-1] < config.epsilon
        if converged or iterations == config.max_iter:
            break
        perm = rng.permutation(d)
        u = identity_matrix(d)[perm]
        state.apply(u)
        w_total = (u @ w_total) % q
    comps = (
        _entropy_rows(state.pmf.component_marginals())
        if isinstance(state, _PMFState)
        else np.array(
            [
                entropy(np.bincount(state.rows[:, j], minlength=q) / state.n)
                for j in range(d)
            ]
        )
    )
    return BlockICAResult(
        w=w_total,
        objective=float(trace[-1]),
        component_entropies=np.asarray(comps),
        rows_examined=rows_examined,
        trace=np.array(trace),
        iterations=iterations,
    )


# ---------------------------------------------------------------------------
# non-linear baseline and the total-correlation objective


@dataclass(frozen=True)
class OrderPermResult:
    """Order-permutation relabeling: symbol i of the pmf is sent to
    ``assignment[i]``; ``objective`` is the resulting sum of component
    entropies and ``total_correlation`` subtracts the (invariant) joint
    entropy."""

    assignment: np.ndarray
    objective: float
    component_entropies: np.ndarray
    total_correlation: float


def order_permutation(pmf: JointPMF) -> OrderPermResult:
    """Relabel symbols so the i-th smallest probability gets word i.

    Sorting is stable, so equal probabilities keep their index order.  The
    greedy property: each component's entropy is minimized sequentially,
    starting from the most significant digit.
    """
    order = np.argsort(pmf.probs, kind="stable")
    assignment = np.empty(pmf.cells, dtype=np.int64)
    assignment[order] = np.arange(pmf.cells)
    relabeled = JointPMF(pmf.q, pmf.d, pmf.probs[order], max_cells=pmf.max_cells)
    comps = _entropy_rows(relabeled.component_marginals())
    objective = float(comps.sum())
    return OrderPermResult(
        assignment=assignment,
        objective=objective,
        component_entropies=comps,
        total_correlation=objective - entropy(pmf.probs),
    )


def total_correlation(pmf: JointPMF) -> float:
    """Sum of component marginal entropies minus the joint entropy, in bits.

    Non-negative; zero exactly when the components are independent.
    """
    return float(_entropy_rows(pmf.component_marginals()).sum()) - pmf.entropy()


# ---------------------------------------------------------------------------
# brute-force oracle


def count_invertible_matrices(q: int, d: int) -> int:
    """Number of invertible d x d matrices over GF(q)."""
    m = q**d
    out = 1
    for k in range(d):
        out *= m - q**k
    return out


def _enumerate_basis_tuples(q: int, d: int) -> np.ndarray:
    """All ordered bases of GF(q)^d as row-index tuples, in lexicographic
    order of the stacked matrix."""
    fld = PrimeField(q)
    m = q**d
    rows = [decode_indices(i, q, d) for i in range(m)]
    out: list[tuple[int, ...]] = []
    chosen: list[int] = []

    def rec(basis: IncrementalBasis) -> None:
        if len(chosen) == d:
            out.append(tuple(chosen))
            return
        for r in range(1, m):
            trial = basis.copy()
            if trial.try_add(r if q == 2 else rows[r]):
                chosen.append(r)
                rec(trial)
                chosen.pop()

    rec(IncrementalBasis(fld, d))
    return np.array(out, dtype=np.int64)


_BASIS_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _basis_tuples(q: int, d: int) -> np.ndarray:
    key = (q, d)
    if key not in _BASIS_CACHE:
        _BASIS_CACHE[key] = _enumerate_basis_tuples(q, d)
    return _BASIS_CACHE[key]


def brute_force_optimal_linear(
    pmf: JointPMF,
    max_matrices: int = 10**6,
    method: str = "auto",
) -> tuple[np.ndarray, float]:
    """Exhaustive minimizer of the component-entropy sum over invertible W.

    Enumerates every ordered basis (= every invertible matrix), scores each
    as the sum of its rows' combination entropies, and returns the first
    minimizer in lexicographic matrix order together with its objective.
    """
    count = count_invertible_matrices(pmf.q, pmf.d)
    if count > max_matrices:
        raise CapacityError(
            f"{count} invertible matrices exceed the limit of {max_matrices}"
        )
    ents = all_combination_entropies(pmf, method=method)
    bases = _basis_tuples(pmf.q, pmf.d)
    objectives = ents[bases].sum(axis=1)
    best = int(np.argmin(objectives))
    w = decode_indices(bases[best], pmf.q, pmf.d)
    return w, float(objectives[best])


# ---------------------------------------------------------------------------
# statistics of the idealized uniform-row-drawing model


def expected_rows_examined(d: int, q: int) -> float:
    """Closed-form mean number of uniform draws until rank d."""
    m = float(q) ** d
    return float(sum(m / (m - float(q) ** k) for k in range(d)))


def rows_examined_variance_bound(q: int) -> float:
    """Dimension-independent upper bound on the draw-count variance."""
    return q / (q - 1) ** 2 + 1.0 / (q + 1.0 / q - 2.0) ** 2


def simulate_rows_examined(
    d: int, field: "int | PrimeField", trials: int, seed=None
) -> np.ndarray:
    """Draw-count samples from the model: uniform rows (with replacement,
    zero row included) are drawn until they span GF(q)^d."""
    fld = as_field(field)
    q = fld.q
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    rng = as_generator(seed)
    counts = np.empty(trials, dtype=np.int64)
    if q == 2:
        m = 1 << d
        buffer = np.empty(0, dtype=np.int64)
        used = 0
        for t in range(trials):
            pivots: list[int] = []
            drawn = 0
            rank = 0
            while rank < d:
                if used == buffer.shape[0]:
                    buffer = rng.integers(0, m, size=max(4 * (d + 8), 1024))
                    used = 0
                r = int(buffer[used])
                used += 1
                drawn += 1
                for p in pivots:
                    if r ^ p < r:
                        r ^= p
                if r:
                    lead = r.bit_length()
                    pos = 0
                    while pos < len(pivots) and pivots[pos].bit_length() > lead:
                        pos += 1
                    pivots.insert(pos, r)
                    rank += 1
            counts[t] = drawn
        return counts
    for t in range(trials):
        basis = IncrementalBasis(fld, d)
        drawn = 0
        while basis.rank < d:
            row = rng.integers(0, q, size=d)
            drawn += 1
            basis.try_add(row)
        counts[t] = drawn
    return counts


@dataclass(frozen=True)
class RowDrawStatistics:
    mean_rows: float
    var_rows: float
    analytic_mean: float
    analytic_variance_bound: float


def row_draw_statistics(
    d: int, field: "int | PrimeField", trials: int, seed=None
) -> RowDrawStatistics:
    """Empirical mean/variance of the draw count plus the analytic mean and
    the variance bound."""
    fld = as_field(field)
    samples = simulate_rows_examined(d, fld, trials, seed)
    return RowDrawStatistics(
        mean_rows=float(samples.mean()),
        var_rows=float(samples.var(ddof=1)) if trials > 1 else 0.0,
        analytic_mean=expected_rows_examined(d, fld.q),
        analytic_variance_bound=rows_examined_variance_bound(fld.q),
    )
