"""Exact arithmetic and linear algebra over prime fields GF(q).

Matrices and vectors are plain numpy integer arrays with entries in
``[0, q)``; every public function validates what it needs.  For q = 2 the
rank / basis routines additionally run on rows packed into Python ints
(one bit per column), which is observationally identical to the generic
modular-arithmetic path and is what keeps the greedy scans cheap.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionError,
    DomainError,
    FormatError,
    NoInverseError,
    SingularMatrixError,
)
from .rng import as_generator


def is_prime(n: int) -> bool:
    """Trial-division primality check (q stays small here)."""
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class PrimeField:
    """The prime field GF(q); prime powers (4, 8, 9, ...) are rejected."""

    q: int

    def __post_init__(self) -> None:
        if not isinstance(self.q, (int, np.integer)) or not is_prime(int(self.q)):
            raise ValueError(f"field order must be prime, got {self.q!r}")
        object.__setattr__(self, "q", int(self.q))

    def inverse(self, a: int) -> int:
        """Multiplicative inverse of a nonzero element."""
        a = int(a) % self.q
        if a == 0:
            raise NoInverseError("0 has no multiplicative inverse")
        return pow(a, -1, self.q)

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return f"GF({self.q})"


def as_field(q: "int | PrimeField") -> PrimeField:
    return q if isinstance(q, PrimeField) else PrimeField(q)


def field_inverse(a: int, field: "int | PrimeField") -> int:
    """Inverse of ``a`` in GF(q); raises NoInverseError for a = 0."""
    return as_field(field).inverse(a)


def as_field_matrix(m, field: "int | PrimeField") -> np.ndarray:
    """Validate and return ``m`` as a 2-D int64 array over GF(q)."""
    q = as_field(field).q
    arr = np.asarray(m)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got ndim={arr.ndim}")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == np.floor(arr)):
            raise DomainError("matrix entries must be integers")
    arr = arr.astype(np.int64, copy=False)
    if arr.size and (arr.min() < 0 or arr.max() >= q):
        raise DomainError(f"matrix entries must lie in [0, {q})")
    return arr


def identity_matrix(d: int) -> np.ndarray:
    return np.eye(d, dtype=np.int64)


def matmul(a, b, field: "int | PrimeField") -> np.ndarray:
    """Matrix product over GF(q)."""
    q = as_field(field).q
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    return (a @ b) % q


class IncrementalBasis:
    """Grow-only basis of GF(q)^d with cheap independence tests.

    Internally keeps the accepted rows fully reduced, so testing a new row
    is a single forward elimination and gives the same verdict as a
    from-scratch rank computation.  For q = 2 rows are packed into ints
    (bit d-1-j holds component j, i.e. the packed value equals the row's
    base-2 word index), making each update O(d) word operations.
    """

    def __init__(self, field: "int | PrimeField", dim: int, packed: "bool | None" = None):
        self.field = as_field(field)
        self.dim = int(dim)
        if self.dim < 1:
            raise DimensionError("dimension must be >= 1")
        self.packed = (self.field.q == 2) if packed is None else bool(packed)
        if self.packed and self.field.q != 2:
            raise ValueError("packed representation is only available for q=2")
        self._pivots: list = []  # packed: (lead bit, row int); generic: (col, row array)

    @property
    def rank(self) -> int:
        return len(self._pivots)

    def copy(self) -> "IncrementalBasis":
        """Independent snapshot (stored rows are never mutated in place)."""
        dup = IncrementalBasis(self.field, self.dim, packed=self.packed)
        dup._pivots = list(self._pivots)
        return dup

    def _as_packed(self, row) -> int:
        if isinstance(row, (int, np.integer)):
            word = int(row)
            if not 0 <= word < (1 << self.dim):
                raise DimensionError(f"packed row out of range for dim {self.dim}")
            return word
        vec = np.asarray(row)
        if vec.shape != (self.dim,):
            raise DimensionError(f"expected a length-{self.dim} row")
        word = 0
        for v in vec:
            word = (word << 1) | (int(v) & 1)
        return word

    def try_add(self, row) -> bool:
        """Add ``row`` if independent of the current basis; report success."""
        if self.packed:
            r = self._as_packed(row)
            # Pivots are kept sorted by descending leading bit, so one
            # descending sweep fully reduces the candidate.
            for _, prow in self._pivots:
                if r ^ prow < r:
                    r ^= prow
            if r == 0:
                return False
            lead = r.bit_length()
            pos = 0
            while pos < len(self._pivots) and self._pivots[pos][0] > lead:
                pos += 1
            self._pivots.insert(pos, (lead, r))
            return True
        q = self.field.q
        if isinstance(row, (int, np.integer)):
            raise DimensionError("generic basis expects a vector row")
        r = np.asarray(row, dtype=np.int64)
        if r.shape != (self.dim,):
            raise DimensionError(f"expected a length-{self.dim} row")
        r = r % q
        for col, prow in self._pivots:
            c = int(r[col])
            if c:
                r = (r - c * prow) % q
        nz = np.flatnonzero(r)
        if nz.size == 0:
            return False
        col = int(nz[0])
        r = (r * self.field.inverse(int(r[col]))) % q
        # Back-eliminate the new pivot column so stored rows stay reduced.
        for i, (c0, p0) in enumerate(self._pivots):
            v = int(p0[col])
            if v:
                self._pivots[i] = (c0, (p0 - v * r) % q)
        self._pivots.append((col, r))
        return True


def try_extend_basis(basis: IncrementalBasis, row) -> bool:
    """Functional alias for :meth:`IncrementalBasis.try_add`."""
    return basis.try_add(row)


def matrix_rank(m, field: "int | PrimeField", method: str = "auto") -> int:
    """Rank of a matrix over GF(q) by Gauss elimination.

    ``method`` selects the implementation: "generic" (modular elimination
    on numpy rows), "packed" (q=2 bitset rows), or "auto".
    """
    fld = as_field(field)
    arr = as_field_matrix(m, fld)
    if arr.size == 0:
        return 0
    if method == "auto":
        method = "packed" if fld.q == 2 else "generic"
    if method not in ("packed", "generic"):
        raise ValueError(f"unknown method {method!r}")
    if method == "packed" and fld.q != 2:
        raise ValueError("packed rank requires q=2")
    basis = IncrementalBasis(fld, arr.shape[1], packed=(method == "packed"))
    for row in arr:
        basis.try_add(row)
        if basis.rank == min(arr.shape):
            break
    return basis.rank


def invert_matrix(m, field: "int | PrimeField") -> np.ndarray:
    """Inverse of a square matrix over GF(q); SingularMatrixError otherwise."""
    fld = as_field(field)
    q = fld.q
    a = as_field_matrix(m, fld)
    d = a.shape[0]
    if a.shape[0] != a.shape[1]:
        raise DimensionError("only square matrices can be inverted")
    aug = np.concatenate([a.copy(), identity_matrix(d)], axis=1)
    for col in range(d):
        sub = np.flatnonzero(aug[col:, col])
        if sub.size == 0:
            raise SingularMatrixError(f"matrix is singular over GF({q})")
        piv = col + int(sub[0])
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        aug[col] = (aug[col] * fld.inverse(int(aug[col, col]))) % q
        for r in range(d):
            if r != col and aug[r, col]:
                aug[r] = (aug[r] - aug[r, col] * aug[col]) % q
    return aug[:, d:]


def is_monomial(m) -> bool:
    """True iff the square matrix has exactly one nonzero per row and column."""
    arr = np.asarray(m)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError("monomial test requires a square matrix")
    nz = arr != 0
    return bool(np.all(nz.sum(axis=0) == 1) and np.all(nz.sum(axis=1) == 1))


def random_invertible(
    d: int,
    field: "int | PrimeField",
    seed=None,
    nontrivial: bool = False,
) -> np.ndarray:
    """Draw a uniformly random invertible d x d matrix over GF(q).

    Rejection sampling from the uniform matrix distribution, so the result
    is uniform over invertible matrices and deterministic per seed.  With
    ``nontrivial`` the draw additionally rejects the identity and any
    monomial matrix (a mixing matrix that actually mixes).
    """
    fld = as_field(field)
    if d < 1:
        raise DimensionError("dimension must be >= 1")
    if nontrivial and d == 1:
        raise ValueError("every invertible 1x1 matrix is monomial")
    rng = as_generator(seed)
    while True:
        cand = rng.integers(0, fld.q, size=(d, d), dtype=np.int64)
        if matrix_rank(cand, fld) != d:
            continue
        if nontrivial and is_monomial(cand):
            continue
        return cand


def write_matrix_text(target, m, field: "int | PrimeField") -> None:
    """Write a matrix in the text format: header "q d", then d rows."""
    fld = as_field(field)
    arr = as_field_matrix(m, fld)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionError("text format stores square transforms")
    lines = [f"{fld.q} {arr.shape[0]}"]
    lines += [" ".join(str(int(v)) for v in row) for row in arr]
    text = "\n".join(lines) + "\n"
    if hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w", encoding="ascii") as fh:
            fh.write(text)


def read_matrix_text(source) -> tuple[PrimeField, np.ndarray]:
    """Parse the "q d" + rows text format; FormatError on anything malformed."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="ascii") as fh:
            text = fh.read()
    tokens = text.split()
    if len(tokens) < 2:
        raise FormatError("matrix file is missing its 'q d' header")
    try:
        q, d = int(tokens[0]), int(tokens[1])
    except ValueError as exc:
        raise FormatError("matrix header must be two integers") from exc
    try:
        fld = PrimeField(q)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    if d < 1:
        raise FormatError("matrix dimension must be >= 1")
    body = tokens[2:]
    if len(body) != d * d:
        raise FormatError(f"expected {d * d} entries, found {len(body)}")
    try:
        vals = np.array([int(t) for t in body], dtype=np.int64).reshape(d, d)
    except ValueError as exc:
        raise FormatError("matrix entries must be integers") from exc
    if vals.min() < 0 or vals.max() >= q:
        raise FormatError(f"matrix entries must lie in [0, {q})")
    return fld, vals


def matrix_to_text(m, field: "int | PrimeField") -> str:
    buf = io.StringIO()
    write_matrix_text(buf, m, field)
    return buf.getvalue()


def matrix_from_text(text: str) -> tuple[PrimeField, np.ndarray]:
    return read_matrix_text(io.StringIO(text))
