"""Probability mass functions over words in GF(q)^d, entropies, and samplers.

Index convention (shared by the whole package): a word (x_0, ..., x_{d-1})
maps to the flat index sum_j x_j * q**(d-1-j), i.e. component 0 is the most
significant base-q digit.  For q = 2 a word's index is therefore also its
packed bit representation.

Joint distributions are stored densely as length-q**d arrays, which is what
makes the all-rows entropy scans (naive, Walsh-Hadamard for q = 2, and a
q-ary character transform for general q) straightforward.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .errors import (
    CapacityError,
    DimensionError,
    DomainError,
    FormatError,
    SingularMatrixError,
)
from .fields import as_field, as_field_matrix, matrix_rank
from .rng import as_generator

# Default ceiling on dense table sizes: q**d may not exceed 2**30 cells
# unless the caller raises the limit explicitly.
DEFAULT_MAX_CELLS = 1 << 30

_SUM_TOL = 1e-9


def check_capacity(q: int, d: int, max_cells: int = DEFAULT_MAX_CELLS) -> int:
    """Return q**d, raising CapacityError when it exceeds ``max_cells``."""
    cells = q**d
    if cells > max_cells:
        raise CapacityError(
            f"q**d = {q}**{d} exceeds the configured limit of {max_cells} cells"
        )
    return cells


def word_powers(q: int, d: int) -> np.ndarray:
    """Per-component place values of the big-endian base-q encoding."""
    return q ** np.arange(d - 1, -1, -1, dtype=np.int64)


def encode_words(words, q: int) -> np.ndarray:
    """Flat indices of an (n, d) array of words."""
    arr = np.asarray(words, dtype=np.int64)
    return arr @ word_powers(q, arr.shape[-1])


def decode_indices(indices, q: int, d: int) -> np.ndarray:
    """Inverse of :func:`encode_words`: (n,) indices -> (n, d) words."""
    idx = np.asarray(indices, dtype=np.int64)
    out = np.empty(idx.shape + (d,), dtype=np.int64)
    for j in range(d - 1, -1, -1):
        out[..., j] = idx % q
        idx = idx // q
    return out


@lru_cache(maxsize=8)
def _digit_matrix(q: int, d: int) -> np.ndarray:
    """All q**d words as a (q**d, d) uint8 array, in index order."""
    idx = np.arange(q**d, dtype=np.int64)
    return decode_indices(idx, q, d).astype(np.uint8)


@dataclass(frozen=True)
class JointPMF:
    """Dense joint distribution of a d-component word over GF(q)."""

    q: int
    d: int
    probs: np.ndarray
    max_cells: int = dataclass_field(default=DEFAULT_MAX_CELLS, compare=False)

    def __post_init__(self) -> None:
        fld = as_field(self.q)
        object.__setattr__(self, "q", fld.q)
        if self.d < 1:
            raise DimensionError("d must be >= 1")
        cells = check_capacity(self.q, self.d, self.max_cells)
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.shape != (cells,):
            raise DimensionError(
                f"probs must have length q**d = {cells}, got shape {probs.shape}"
            )
        if probs.size and probs.min() < 0.0:
            raise DomainError("probabilities must be non-negative")
        total = float(probs.sum())
        if abs(total - 1.0) > _SUM_TOL:
            raise DomainError(f"probabilities must sum to 1 (got {total!r})")
        object.__setattr__(self, "probs", probs)

    @property
    def cells(self) -> int:
        return self.q**self.d

    def entropy(self) -> float:
        """Joint entropy in bits."""
        return entropy(self.probs)

    def component_marginals(self) -> np.ndarray:
        """(d, q) matrix of single-component marginals."""
        grid = self.probs.reshape((self.q,) * self.d)
        out = np.empty((self.d, self.q))
        for j in range(self.d):
            axes = tuple(a for a in range(self.d) if a != j)
            out[j] = grid.sum(axis=axes)
        return out


@dataclass(frozen=True)
class SampleSet:
    """n rows of d symbols, each in [0, q)."""

    q: int
    d: int
    rows: np.ndarray

    def __post_init__(self) -> None:
        fld = as_field(self.q)
        object.__setattr__(self, "q", fld.q)
        rows = np.asarray(self.rows)
        if rows.ndim != 2 or rows.shape[1] != self.d:
            raise DimensionError(f"rows must be (n, {self.d}), got {rows.shape}")
        if rows.shape[0] < 1:
            raise DimensionError("a sample set needs at least one row")
        if not np.issubdtype(rows.dtype, np.integer):
            if not np.all(rows == np.floor(rows)):
                raise DomainError("symbols must be integers")
        rows = rows.astype(np.int64, copy=False)
        if rows.min() < 0 or rows.max() >= self.q:
            raise DomainError(f"symbols must lie in [0, {self.q})")
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    def encoded(self) -> np.ndarray:
        return encode_words(self.rows, self.q)

    def unique_symbol_count(self) -> int:
        """Number of distinct words appearing in the sample (n_0)."""
        return int(np.unique(self.encoded()).size)


def empirical_pmf(samples: SampleSet, max_cells: int = DEFAULT_MAX_CELLS) -> JointPMF:
    """Plug-in maximum-likelihood estimate: counts divided by n."""
    cells = check_capacity(samples.q, samples.d, max_cells)
    counts = np.bincount(samples.encoded(), minlength=cells)
    return JointPMF(samples.q, samples.d, counts / samples.n, max_cells=max_cells)


def entropy(probs) -> float:
    """Shannon entropy in bits with the 0*log(0) = 0 convention.

    Contributions are summed in sorted order, so relabelings of the same
    distribution produce bit-identical values.
    """
    p = np.asarray(probs, dtype=np.float64)
    if p.size and p.min() < 0.0:
        raise DomainError("probabilities must be non-negative")
    pos = p[p > 0.0]
    contrib = pos * np.log2(pos)
    contrib.sort()
    return float(-contrib.sum())


def binary_entropy(p):
    """h(p) in bits for scalar or array p in [0, 1]."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise DomainError("binary_entropy requires p in [0, 1]")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -np.where(arr > 0.0, arr * np.log2(arr), 0.0)
        comp = 1.0 - arr
        out -= np.where(comp > 0.0, comp * np.log2(comp), 0.0)
    if np.ndim(p) == 0:
        return float(out)
    return out


def _entropy_rows(p_rows: np.ndarray) -> np.ndarray:
    """Entropy of each row of a (n, q) non-negative matrix, in bits."""
    p = np.clip(p_rows, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        contrib = np.where(p > 0.0, p * np.log2(p), 0.0)
    return -contrib.sum(axis=-1)


def combination_marginal(pmf: JointPMF, row) -> np.ndarray:
    """Distribution of <row, X> mod q as a length-q vector.

    ``row`` is a length-d coefficient vector over GF(q).
    """
    r = np.asarray(row, dtype=np.int64)
    if r.shape != (pmf.d,):
        raise DimensionError(f"coefficient row must have length {pmf.d}")
    if r.min() < 0 or r.max() >= pmf.q:
        raise DomainError(f"coefficients must lie in [0, {pmf.q})")
    digits = _digit_matrix(pmf.q, pmf.d).astype(np.int64, copy=False)
    u = (digits @ r) % pmf.q
    return np.bincount(u, weights=pmf.probs, minlength=pmf.q)


def walsh_hadamard_transform(values) -> np.ndarray:
    """Walsh-Hadamard transform along the last axis (natural ordering).

    Output index r holds sum_x v[x] * (-1)**popcount(r & x); for a pmf this
    is P(<r, X> = 0) - P(<r, X> = 1) over GF(2).
    """
    a = np.array(values, dtype=np.float64, copy=True)
    n = a.shape[-1]
    if n & (n - 1):
        raise DimensionError("length must be a power of two")
    h = 1
    lead = a.shape[:-1]
    while h < n:
        a = a.reshape(lead + (n // (2 * h), 2, h))
        top = a[..., 0, :] + a[..., 1, :]
        bot = a[..., 0, :] - a[..., 1, :]
        a[..., 0, :] = top
        a[..., 1, :] = bot
        a = a.reshape(lead + (n,))
        h *= 2
    return a


def _combination_entropies_wht(pmf: JointPMF) -> np.ndarray:
    coeffs = walsh_hadamard_transform(pmf.probs)
    p0 = np.clip((1.0 + coeffs) / 2.0, 0.0, 1.0)
    ents = binary_entropy(p0)
    ents[0] = 0.0
    return ents


def _combination_entropies_character(pmf: JointPMF) -> np.ndarray:
    """General-q fast path via the group Fourier transform on (Z_q)^d.

    fftn of the reshaped pmf gives Phi(t) = E exp(-2*pi*i*<t, X>/q); bucket
    masses follow from P(<r,X> = a) = (1/q) sum_c Phi(c*r) * omega**(c*a).
    """
    q, d = pmf.q, pmf.d
    m = pmf.cells
    phi = np.fft.fftn(pmf.probs.reshape((q,) * d)).reshape(m)
    digits = _digit_matrix(q, d).astype(np.int64, copy=False)
    powers = word_powers(q, d)
    omega = np.exp(2j * np.pi / q)
    buckets = np.zeros((m, q), dtype=np.complex128)
    for c in range(q):
        scaled_idx = ((c * digits) % q) @ powers
        coef = omega ** (c * np.arange(q))
        buckets += np.outer(phi[scaled_idx], coef)
    p = buckets.real / q
    ents = _entropy_rows(p)
    ents[0] = 0.0
    return ents


def _combination_entropies_naive(pmf: JointPMF, block: int = 512) -> np.ndarray:
    """Direct per-row marginalization; the reference the fast paths are
    checked against."""
    q, d = pmf.q, pmf.d
    m = pmf.cells
    digits = _digit_matrix(q, d).astype(np.float64)
    ents = np.zeros(m)
    for start in range(1, m, block):
        rows = digits[start : start + block]
        u = (digits @ rows.T) % q
        marginals = np.empty((rows.shape[0], q))
        for a in range(q):
            marginals[:, a] = pmf.probs @ (u == a)
        ents[start : start + block] = _entropy_rows(marginals)
    return ents


def all_combination_entropies(pmf: JointPMF, method: str = "auto") -> np.ndarray:
    """Entropy in bits of <r, X> for every coefficient row r, indexed by r.

    Methods: "wht" (q = 2 only, O(d*2**d)), "character" (any q,
    O(q**(d+1) * q)), "naive" (any q, O(d * q**(2d)) reference), or "auto".
    All paths return identical values up to floating-point rounding; index
    0 (the zero row) is exactly 0.
    """
    if method == "auto":
        method = "wht" if pmf.q == 2 else "character"
    if method == "wht":
        if pmf.q != 2:
            raise ValueError("the Walsh-Hadamard path requires q=2")
        return _combination_entropies_wht(pmf)
    if method == "character":
        return _combination_entropies_character(pmf)
    if method == "naive":
        return _combination_entropies_naive(pmf)
    raise ValueError(f"unknown method {method!r}")


def transform_pmf(pmf: JointPMF, w) -> JointPMF:
    """Pushforward of the pmf under Y = W X; a permutation of the entries."""
    arr = as_field_matrix(w, pmf.q)
    if arr.shape != (pmf.d, pmf.d):
        raise DimensionError(f"transform must be {pmf.d} x {pmf.d}")
    if matrix_rank(arr, pmf.q) != pmf.d:
        raise SingularMatrixError("transforms must be invertible")
    digits = _digit_matrix(pmf.q, pmf.d).astype(np.int64, copy=False)
    new_idx = encode_words((digits @ arr.T) % pmf.q, pmf.q)
    out = np.empty_like(pmf.probs)
    out[new_idx] = pmf.probs
    return JointPMF(pmf.q, pmf.d, out, max_cells=pmf.max_cells)


def transform_samples(samples: SampleSet, w) -> SampleSet:
    """Apply Y = W X row-wise to a sample set."""
    arr = as_field_matrix(w, samples.q)
    if arr.shape != (samples.d, samples.d):
        raise DimensionError(f"transform must be {samples.d} x {samples.d}")
    return SampleSet(samples.q, samples.d, (samples.rows @ arr.T) % samples.q)


# ---------------------------------------------------------------------------
# distribution samplers


def zipf_pmf(m: int, s: float) -> np.ndarray:
    """Normalized Zipf weights k**(-s) over ranks k = 1..m."""
    if m < 1:
        raise DomainError("m must be >= 1")
    if s < 0:
        raise DomainError("s must be >= 0")
    weights = np.arange(1, m + 1, dtype=np.float64) ** (-float(s))
    return weights / weights.sum()


def beta_binomial_pmf(m: int, a: float, b: float) -> np.ndarray:
    """Beta-Binomial(m, a, b) over k = 0..m (m + 1 values), via log-gamma."""
    if m < 1:
        raise DomainError("m must be >= 1")
    if a <= 0 or b <= 0:
        raise DomainError("a and b must be positive")
    k = np.arange(m + 1, dtype=np.float64)
    log_choose = gammaln(m + 1) - gammaln(k + 1) - gammaln(m - k + 1)
    log_beta_num = gammaln(k + a) + gammaln(m - k + b) - gammaln(m + a + b)
    log_beta_den = gammaln(a) + gammaln(b) - gammaln(a + b)
    logp = log_choose + log_beta_num - log_beta_den
    p = np.exp(logp - logp.max())
    return p / p.sum()


def sample_uniform_simplex(m: int, seed=None, size: "int | None" = None) -> np.ndarray:
    """Uniform draw(s) from the (m-1)-simplex.

    Generated as m i.i.d. standard exponentials normalized by their sum;
    with ``size`` given, returns a (size, m) batch.
    """
    if m < 1:
        raise DomainError("m must be >= 1")
    rng = as_generator(seed)
    shape = (m,) if size is None else (int(size), m)
    e = rng.standard_exponential(shape)
    return e / e.sum(axis=-1, keepdims=True)


def sample_bernoulli_product(params, n: int, seed=None) -> SampleSet:
    """n i.i.d. rows of independent bits; bit j is 1 with probability params[j]."""
    p = np.asarray(params, dtype=np.float64)
    if p.ndim != 1 or p.size < 1:
        raise DimensionError("params must be a non-empty 1-D sequence")
    if p.min() < 0.0 or p.max() > 1.0:
        raise DomainError("Bernoulli parameters must lie in [0, 1]")
    rng = as_generator(seed)
    rows = (rng.random((int(n), p.size)) < p).astype(np.int64)
    return SampleSet(2, p.size, rows)


def _sample_from_pmf_words(
    value_pmf: np.ndarray, q: int, d: int, n: int, rng, max_cells: int
) -> tuple[SampleSet, JointPMF]:
    """Assign pmf values to words by a seeded random bijection and draw."""
    cells = check_capacity(q, d, max_cells)
    if value_pmf.shape != (cells,):
        raise DimensionError("value pmf must cover exactly q**d outcomes")
    word_of_value = rng.permutation(cells)
    word_probs = np.zeros(cells)
    word_probs[word_of_value] = value_pmf
    cum = np.cumsum(value_pmf)
    cum[-1] = 1.0
    values = np.searchsorted(cum, rng.random(int(n)), side="right")
    rows = decode_indices(word_of_value[values], q, d)
    return SampleSet(q, d, rows), JointPMF(q, d, word_probs, max_cells=max_cells)


def sample_zipf(
    q: int, d: int, s: float, n: int, seed=None, max_cells: int = DEFAULT_MAX_CELLS
) -> tuple[SampleSet, JointPMF]:
    """n i.i.d. Zipf(s) draws over the q**d words, plus the true word pmf.

    Ranks are mapped onto words by a seeded random bijection, so the word
    representation carries no information about the rank ordering.
    """
    fld = as_field(q)
    rng = as_generator(seed)
    cells = check_capacity(fld.q, d, max_cells)
    return _sample_from_pmf_words(zipf_pmf(cells, s), fld.q, d, n, rng, max_cells)


def sample_beta_binomial(
    q: int,
    d: int,
    a: float,
    b: float,
    n: int,
    seed=None,
    max_cells: int = DEFAULT_MAX_CELLS,
) -> tuple[SampleSet, JointPMF]:
    """Beta-Binomial draws over the q**d words, plus the true word pmf.

    The Beta-Binomial support {0..m} has one more point than the m = q**d
    words, so the top point k = m is dropped and the rest renormalized (its
    mass is tiny for the parameter ranges used here); values then map onto
    words by a seeded random bijection.
    """
    fld = as_field(q)
    rng = as_generator(seed)
    cells = check_capacity(fld.q, d, max_cells)
    full = beta_binomial_pmf(cells, a, b)
    truncated = full[:cells] / full[:cells].sum()
    return _sample_from_pmf_words(truncated, fld.q, d, n, rng, max_cells)


# ---------------------------------------------------------------------------
# digamma

_DIGAMMA_SHIFT = 6.0
# Asymptotic coefficients of psi(x) - ln(x) + 1/(2x) in powers of x**-2.
_DIGAMMA_SERIES = (
    -1.0 / 12.0,
    1.0 / 120.0,
    -1.0 / 252.0,
    1.0 / 240.0,
    -1.0 / 132.0,
    691.0 / 32760.0,
    -1.0 / 12.0,
)


def digamma(x):
    """Digamma function for x > 0 (scalar or array), |error| <= 1e-10.

    Upward recurrence psi(x+1) = psi(x) + 1/x until x >= 6, then the
    asymptotic series.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.size and arr.min() <= 0.0:
        raise DomainError("digamma requires x > 0")
    val = arr.copy()
    acc = np.zeros_like(val)
    while True:
        mask = val < _DIGAMMA_SHIFT
        if not mask.any():
            break
        acc[mask] -= 1.0 / val[mask]
        val[mask] += 1.0
    inv2 = 1.0 / (val * val)
    series = np.zeros_like(val)
    for coef in reversed(_DIGAMMA_SERIES):
        series = (series + coef) * inv2
    out = acc + np.log(val) - 0.5 / val + series
    if np.ndim(x) == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# text interchange formats (CLI)


def write_sample_file(target, samples: SampleSet) -> None:
    """Write the "q d n" header followed by one row of symbols per line."""
    lines = [f"{samples.q} {samples.d} {samples.n}"]
    lines += [" ".join(str(int(v)) for v in row) for row in samples.rows]
    text = "\n".join(lines) + "\n"
    if hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w", encoding="ascii") as fh:
            fh.write(text)


def read_sample_file(source) -> SampleSet:
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="ascii") as fh:
            text = fh.read()
    tokens = text.split()
    if len(tokens) < 3:
        raise FormatError("sample file is missing its 'q d n' header")
    try:
        q, d, n = (int(t) for t in tokens[:3])
    except ValueError as exc:
        raise FormatError("sample header must be three integers") from exc
    body = tokens[3:]
    if len(body) != n * d:
        raise FormatError(f"expected {n * d} symbols, found {len(body)}")
    try:
        rows = np.array([int(t) for t in body], dtype=np.int64).reshape(n, d)
    except ValueError as exc:
        raise FormatError("symbols must be integers") from exc
    try:
        return SampleSet(q, d, rows)
    except (ValueError, DomainError, DimensionError) as exc:
        raise FormatError(str(exc)) from exc


def write_pmf_file(target, pmf: JointPMF) -> None:
    """Write the "q d" header followed by q**d probabilities in index order."""
    lines = [f"{pmf.q} {pmf.d}"]
    lines += [repr(float(p)) for p in pmf.probs]
    text = "\n".join(lines) + "\n"
    if hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w", encoding="ascii") as fh:
            fh.write(text)


def read_pmf_file(source, max_cells: int = DEFAULT_MAX_CELLS) -> JointPMF:
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="ascii") as fh:
            text = fh.read()
    tokens = text.split()
    if len(tokens) < 2:
        raise FormatError("pmf file is missing its 'q d' header")
    try:
        q, d = int(tokens[0]), int(tokens[1])
    except ValueError as exc:
        raise FormatError("pmf header must be two integers") from exc
    cells = check_capacity(q, d, max_cells)
    body = tokens[2:]
    if len(body) != cells:
        raise FormatError(f"expected {cells} probabilities, found {len(body)}")
    try:
        probs = np.array([float(t) for t in body])
    except ValueError as exc:
        raise FormatError("probabilities must be numeric") from exc
    try:
        return JointPMF(q, d, probs, max_cells=max_cells)
    except (ValueError, DomainError, DimensionError) as exc:
        raise FormatError(str(exc)) from exc
