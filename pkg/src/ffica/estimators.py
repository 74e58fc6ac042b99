"""Scikit-learn compatible estimators wrapping the decomposition algorithms.

Each estimator consumes an (n_samples, d) integer array of symbols in
[0, q), learns an invertible relabeling of the components (or of the whole
words, for the order permutation), and applies it via ``transform`` /
``inverse_transform``.  Hyper-parameters follow the usual get_params /
set_params contract, so the classes compose with pipelines and
cross-validation tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .fields import as_field, invert_matrix
from .ica import (
    BlockICAConfig,
    block_greedy_linear_ica,
    greedy_linear_ica,
    order_permutation,
)
from .pmf import (
    DEFAULT_MAX_CELLS,
    SampleSet,
    decode_indices,
    empirical_pmf,
    encode_words,
)


def validate_symbol_array(x, q: int, n_features: "int | None" = None) -> np.ndarray:
    """Validate an (n, d) array of integer symbols in [0, q)."""
    arr = check_array(x, dtype="numeric", ensure_2d=True)
    if not np.all(arr == np.floor(arr)):
        raise ValueError("symbols must be integers")
    arr = arr.astype(np.int64)
    if arr.size and (arr.min() < 0 or arr.max() >= q):
        raise ValueError(f"symbols must lie in [0, {q})")
    if n_features is not None and arr.shape[1] != n_features:
        raise ValueError(
            f"X has {arr.shape[1]} features, but the estimator was fitted "
            f"with {n_features}"
        )
    return arr


class _LinearSymbolTransformer(BaseEstimator, TransformerMixin):
    """Shared transform/inverse plumbing for estimators exposing an
    invertible matrix ``components_`` applied as Y = W X."""

    def transform(self, X):
        """Map samples through the learned transform, Y = W X per row."""
        check_is_fitted(self, "components_")
        arr = validate_symbol_array(X, self.q, self.n_features_in_)
        return (arr @ self.components_.T) % self.q

    def inverse_transform(self, X):
        """Undo :meth:`transform`."""
        check_is_fitted(self, "components_")
        arr = validate_symbol_array(X, self.q, self.n_features_in_)
        return (arr @ self.mixing_matrix_.T) % self.q


class GreedyLinearICA(_LinearSymbolTransformer):
    """Greedy entropy-minimizing linear decomposition over GF(q).

    Fits the empirical joint distribution of the training samples, scores
    every nonzero coefficient row by the entropy of its linear combination,
    and greedily assembles the lowest-entropy invertible transform.

    Parameters
    ----------
    q : int, default=2
        Prime field order of the symbols.
    max_cells : int, default 2**30
        Upper limit on the dense table size q**d.

    Attributes
    ----------
    components_ : ndarray of shape (d, d)
        The learned transform W (rank d), rows sorted by entropy.
    mixing_matrix_ : ndarray of shape (d, d)
        Inverse of ``components_``.
    objective_ : float
        Sum of component entropies of the transformed distribution, bits.
    component_entropies_ : ndarray of shape (d,)
    lower_bound_ : float
        Sum of the d smallest combination entropies; no linear transform
        can do better.
    rows_examined_ : int
        1-based position in the sorted row table where the scan stopped.
    """

    def __init__(self, q: int = 2, max_cells: int = DEFAULT_MAX_CELLS):
        self.q = q
        self.max_cells = max_cells

    def fit(self, X, y=None):
        as_field(self.q)
        arr = validate_symbol_array(X, self.q)
        samples = SampleSet(self.q, arr.shape[1], arr)
        result = greedy_linear_ica(empirical_pmf(samples, max_cells=self.max_cells))
        self.n_features_in_ = arr.shape[1]
        self.components_ = result.w
        self.mixing_matrix_ = invert_matrix(result.w, self.q)
        self.objective_ = result.objective
        self.component_entropies_ = result.component_entropies
        self.lower_bound_ = result.lower_bound
        self.rows_examined_ = result.rows_examined
        return self


class BlockGreedyLinearICA(_LinearSymbolTransformer):
    """Block-iterative variant of :class:`GreedyLinearICA` for large d.

    Components are split into ``blocks`` contiguous groups, each group is
    solved greedily on its own (small) empirical distribution, and the
    groups are reshuffled between passes.  Only q**ceil(d/blocks) cells are
    ever tabulated, so d far beyond the dense limit stays tractable.

    Parameters
    ----------
    q : int, default=2
    blocks : int, default=2
        Number of component groups per pass.
    max_iter : int, default=10
        Maximal number of passes.
    tol : float, default=1e-12
        Stop once a pass improves the objective by less than this (bits).
    random_state : int or None, default=0
        Seed for the between-pass component shuffles.

    Attributes
    ----------
    components_, mixing_matrix_, objective_, component_entropies_ : as in
        :class:`GreedyLinearICA` (no ``lower_bound_``: computing the global
        bound is exactly the cost the block scheme avoids).
    objective_trace_ : ndarray
        Objective after each pass, starting from the untransformed input;
        non-increasing.
    n_iter_ : int
        Number of passes actually run.
    """

    def __init__(
        self,
        q: int = 2,
        blocks: int = 2,
        max_iter: int = 10,
        tol: float = 1e-12,
        random_state: "int | None" = 0,
    ):
        self.q = q
        self.blocks = blocks
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y=None):
        as_field(self.q)
        arr = validate_symbol_array(X, self.q)
        samples = SampleSet(self.q, arr.shape[1], arr)
        config = BlockICAConfig(
            blocks=self.blocks,
            max_iter=self.max_iter,
            epsilon=self.tol,
            seed=self.random_state,
        )
        result = block_greedy_linear_ica(samples, config)
        self.n_features_in_ = arr.shape[1]
        self.components_ = result.w
        self.mixing_matrix_ = invert_matrix(result.w, self.q)
        self.objective_ = result.objective
        self.component_entropies_ = result.component_entropies
        self.objective_trace_ = result.trace
        self.n_iter_ = result.iterations
        return self


class OrderPermutationTransformer(BaseEstimator, TransformerMixin):
    """Non-linear baseline: relabel whole words by sorted probability.

    The i-th least frequent word (in the training sample) is mapped to the
    word with index i, which sequentially minimizes each component's
    entropy.  Unseen words are assigned the remaining labels in index
    order, keeping the mapping a bijection.

    Parameters
    ----------
    q : int, default=2
    max_cells : int, default 2**30

    Attributes
    ----------
    assignment_ : ndarray of shape (q**d,)
        Word relabeling: source word i becomes ``assignment_[i]``.
    objective_ : float
        Sum of component entropies after relabeling, bits.
    total_correlation_ : float
        ``objective_`` minus the (relabeling-invariant) joint entropy.
    """

    def __init__(self, q: int = 2, max_cells: int = DEFAULT_MAX_CELLS):
        self.q = q
        self.max_cells = max_cells

    def fit(self, X, y=None):
        as_field(self.q)
        arr = validate_symbol_array(X, self.q)
        samples = SampleSet(self.q, arr.shape[1], arr)
        result = order_permutation(empirical_pmf(samples, max_cells=self.max_cells))
        self.n_features_in_ = arr.shape[1]
        self.assignment_ = result.assignment
        self.inverse_assignment_ = np.argsort(result.assignment)
        self.objective_ = result.objective
        self.component_entropies_ = result.component_entropies
        self.total_correlation_ = result.total_correlation
        return self

    def transform(self, X):
        check_is_fitted(self, "assignment_")
        arr = validate_symbol_array(X, self.q, self.n_features_in_)
        words = self.assignment_[encode_words(arr, self.q)]
        return decode_indices(words, self.q, self.n_features_in_)

    def inverse_transform(self, X):
        check_is_fitted(self, "assignment_")
        arr = validate_symbol_array(X, self.q, self.n_features_in_)
        words = self.inverse_assignment_[encode_words(arr, self.q)]
        return decode_indices(words, self.q, self.n_features_in_)
