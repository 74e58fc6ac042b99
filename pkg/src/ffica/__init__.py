"""Linear independent component analysis over prime finite fields.

Decomposes discrete random vectors into "as independent as possible"
components with invertible linear transforms over GF(q), bounds what any
such transform can achieve, and applies the machinery to large-alphabet
compression.  See the README for the CLI and the experiment harness.
"""

__version__ = "0.1.0"

from .errors import (
    CapacityError,
    ConfigError,
    DimensionError,
    DomainError,
    FFICAError,
    FormatError,
    NoInverseError,
    SingularMatrixError,
    TruncationError,
)
from .fields import (
    IncrementalBasis,
    PrimeField,
    field_inverse,
    invert_matrix,
    is_monomial,
    matrix_rank,
    random_invertible,
    try_extend_basis,
)
from .pmf import (
    JointPMF,
    SampleSet,
    all_combination_entropies,
    binary_entropy,
    combination_marginal,
    digamma,
    empirical_pmf,
    entropy,
    sample_bernoulli_product,
    sample_beta_binomial,
    sample_uniform_simplex,
    sample_zipf,
    transform_pmf,
    transform_samples,
    walsh_hadamard_transform,
)
from .ica import (
    BlockICAConfig,
    BlockICAResult,
    EntropyTable,
    LinearICAResult,
    OrderPermResult,
    block_greedy_linear_ica,
    brute_force_optimal_linear,
    build_entropy_table,
    greedy_linear_ica,
    linear_lower_bound,
    order_permutation,
    row_draw_statistics,
    total_correlation,
)
from .coding import (
    CompressedBlob,
    RateReport,
    compress,
    decompress,
    huffman_dictionary_rate,
    marginal_rate_no_transform,
)
from .estimators import (
    BlockGreedyLinearICA,
    GreedyLinearICA,
    OrderPermutationTransformer,
)

__all__ = [
    "__version__",
    "FFICAError",
    "NoInverseError",
    "SingularMatrixError",
    "DimensionError",
    "DomainError",
    "CapacityError",
    "ConfigError",
    "FormatError",
    "TruncationError",
    "PrimeField",
    "IncrementalBasis",
    "field_inverse",
    "matrix_rank",
    "try_extend_basis",
    "invert_matrix",
    "is_monomial",
    "random_invertible",
    "JointPMF",
    "SampleSet",
    "empirical_pmf",
    "entropy",
    "binary_entropy",
    "combination_marginal",
    "all_combination_entropies",
    "walsh_hadamard_transform",
    "transform_pmf",
    "transform_samples",
    "sample_zipf",
    "sample_beta_binomial",
    "sample_uniform_simplex",
    "sample_bernoulli_product",
    "digamma",
    "EntropyTable",
    "LinearICAResult",
    "BlockICAConfig",
    "BlockICAResult",
    "OrderPermResult",
    "build_entropy_table",
    "linear_lower_bound",
    "greedy_linear_ica",
    "block_greedy_linear_ica",
    "order_permutation",
    "total_correlation",
    "brute_force_optimal_linear",
    "row_draw_statistics",
    "CompressedBlob",
    "RateReport",
    "compress",
    "decompress",
    "huffman_dictionary_rate",
    "marginal_rate_no_transform",
    "GreedyLinearICA",
    "BlockGreedyLinearICA",
    "OrderPermutationTransformer",
]
