"""Large-alphabet compression via per-component entropy coding.

Pipeline: learn an invertible transform of the d components (greedy, block
or none), apply it to every sample row, then encode each component stream
with an adaptive arithmetic coder driven by an add-1/2 estimator.  The
receiver needs nothing beyond the container header, which carries the
transform itself.

Container layout (all multi-byte integers little-endian):

    magic   4 bytes  b"FICA"
    version 1 byte   (currently 1)
    q       2 bytes
    d       2 bytes
    n       8 bytes
    flag    1 byte   0 = no transform, 1 = dense W, 2 = block transform
    [flag 1]  dense W: ceil(d*d*log2(q)/8) bytes, base-q digits row-major
    [flag 2]  b (2 bytes), b block sizes (2 bytes each), the packed block
              matrices, then the component permutation packed at
              ceil(log2 d) bits per entry
    payload d streams, each a 4-byte length prefix + coded bytes

For q = 2 the dense W section costs exactly d*d bits; the block form costs
b * ceil(d_b*d_b/8) bytes plus the permutation, which is the point of
using it at large d.
"""

from __future__ import annotations

import heapq
import struct
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import (
    ConfigError,
    DimensionError,
    DomainError,
    FormatError,
    TruncationError,
)
from .fields import identity_matrix, invert_matrix, is_prime, matrix_rank
from .ica import greedy_linear_ica
from .pmf import DEFAULT_MAX_CELLS, SampleSet, empirical_pmf, entropy

MAGIC = b"FICA"
VERSION = 1

_STATE_BITS = 32
_FULL = 1 << _STATE_BITS
_HALF = _FULL >> 1
_QUARTER = _FULL >> 2
_MASK = _FULL - 1

# Adaptive counts are halved once the total frequency would pass this cap;
# it stays far below the coder's quarter-range so ranges never collapse.
FREQUENCY_CAP = 1 << 24


class _BitWriter:
    def __init__(self) -> None:
        self._buf = bytearray()
        self._cur = 0
        self._nbits = 0
        self.bit_length = 0

    def write(self, bit: int) -> None:
        self._cur = (self._cur << 1) | bit
        self._nbits += 1
        self.bit_length += 1
        if self._nbits == 8:
            self._buf.append(self._cur)
            self._cur = 0
            self._nbits = 0

    def getvalue(self) -> bytes:
        if self._nbits:
            return bytes(self._buf) + bytes([self._cur << (8 - self._nbits)])
        return bytes(self._buf)


class _BitReader:
    """Reads bits MSB-first; past the end it yields zeros forever."""

    def __init__(self, data: bytes) -> None:
        self._data = data
        self._pos = 0
        self._cur = 0
        self._nbits = 0

    def read(self) -> int:
        if self._nbits == 0:
            if self._pos >= len(self._data):
                return 0
            self._cur = self._data[self._pos]
            self._pos += 1
            self._nbits = 8
        self._nbits -= 1
        return (self._cur >> self._nbits) & 1


class ArithmeticEncoder:
    """Renormalizing binary arithmetic coder on a 32-bit state.

    Pending-bit counting implements carry propagation: a run of straddling
    states is resolved to ``bit, ~bit, ~bit, ...`` once the range settles.
    """

    def __init__(self, writer: _BitWriter) -> None:
        self._writer = writer
        self._low = 0
        self._high = _MASK
        self._pending = 0

    def _emit(self, bit: int) -> None:
        self._writer.write(bit)
        inverse = bit ^ 1
        for _ in range(self._pending):
            self._writer.write(inverse)
        self._pending = 0

    def encode(self, cum_low: int, cum_high: int, total: int) -> None:
        if not 0 <= cum_low < cum_high <= total:
            raise ValueError("invalid cumulative frequencies")
        span = self._high - self._low + 1
        self._high = self._low + span * cum_high // total - 1
        self._low = self._low + span * cum_low // total
        while True:
            if self._high < _HALF:
                self._emit(0)
            elif self._low >= _HALF:
                self._emit(1)
                self._low -= _HALF
                self._high -= _HALF
            elif self._low >= _QUARTER and self._high < _HALF + _QUARTER:
                self._pending += 1
                self._low -= _QUARTER
                self._high -= _QUARTER
            else:
                break
            self._low <<= 1
            self._high = (self._high << 1) | 1

    def finish(self) -> None:
        """Flush enough bits to pin the final interval."""
        self._pending += 1
        if self._low < _QUARTER:
            self._emit(0)
        else:
            self._emit(1)


class ArithmeticDecoder:
    def __init__(self, reader: _BitReader) -> None:
        self._reader = reader
        self._low = 0
        self._high = _MASK
        self._code = 0
        for _ in range(_STATE_BITS):
            self._code = (self._code << 1) | reader.read()

    def target(self, total: int) -> int:
        span = self._high - self._low + 1
        return ((self._code - self._low + 1) * total - 1) // span

    def advance(self, cum_low: int, cum_high: int, total: int) -> None:
        span = self._high - self._low + 1
        self._high = self._low + span * cum_high // total - 1
        self._low = self._low + span * cum_low // total
        while True:
            if self._high < _HALF:
                pass
            elif self._low >= _HALF:
                self._low -= _HALF
                self._high -= _HALF
                self._code -= _HALF
            elif self._low >= _QUARTER and self._high < _HALF + _QUARTER:
                self._low -= _QUARTER
                self._high -= _QUARTER
                self._code -= _QUARTER
            else:
                break
            self._low <<= 1
            self._high = (self._high << 1) | 1
            self._code = (self._code << 1) | self._reader.read()


class KTModel:
    """Add-1/2 adaptive symbol model: frequency(a) = 2*count(a) + 1."""

    def __init__(self, q: int, cap: int = FREQUENCY_CAP) -> None:
        if q < 2:
            raise ConfigError("alphabet size must be >= 2")
        self.q = q
        self.cap = cap
        self.counts = [0] * q
        self._seen = 0

    @property
    def total(self) -> int:
        return 2 * self._seen + self.q

    def bounds(self, symbol: int) -> tuple[int, int]:
        cum = 0
        for a in range(symbol):
            cum += 2 * self.counts[a] + 1
        return cum, cum + 2 * self.counts[symbol] + 1

    def symbol_for(self, target: int) -> tuple[int, int, int]:
        """Symbol whose cumulative interval contains ``target``."""
        cum = 0
        for a in range(self.q):
            width = 2 * self.counts[a] + 1
            if target < cum + width:
                return a, cum, cum + width
            cum += width
        raise ValueError("target outside the cumulative range")

    def update(self, symbol: int) -> None:
        self.counts[symbol] += 1
        self._seen += 1
        if self.total > self.cap:
            self.counts = [c // 2 for c in self.counts]
            self._seen = sum(self.counts)


def encode_stream(symbols, q: int, cap: int = FREQUENCY_CAP) -> tuple[bytes, int]:
    """Arithmetic-code a symbol stream; returns (bytes, exact bit length)."""
    arr = np.asarray(symbols, dtype=np.int64)
    if arr.size and (arr.min() < 0 or arr.max() >= q):
        raise DimensionError(f"symbols must lie in [0, {q})")
    writer = _BitWriter()
    encoder = ArithmeticEncoder(writer)
    model = KTModel(q, cap=cap)
    for s in arr.tolist():
        lo, hi = model.bounds(s)
        encoder.encode(lo, hi, model.total)
        model.update(s)
    if arr.size:
        encoder.finish()
    return writer.getvalue(), writer.bit_length


def decode_stream(data: bytes, q: int, n: int, cap: int = FREQUENCY_CAP) -> np.ndarray:
    """Invert :func:`encode_stream` for a stream of ``n`` symbols."""
    out = np.empty(n, dtype=np.int64)
    if n == 0:
        return out
    decoder = ArithmeticDecoder(_BitReader(data))
    model = KTModel(q, cap=cap)
    for i in range(n):
        symbol, lo, hi = model.symbol_for(decoder.target(model.total))
        decoder.advance(lo, hi, model.total)
        model.update(symbol)
        out[i] = symbol
    return out


# ---------------------------------------------------------------------------
# packed serialization helpers


def packed_matrix_size(q: int, d: int) -> int:
    """ceil(d*d*log2(q)/8): bytes used by a packed d x d matrix."""
    if d == 0:
        return 0
    return ((q ** (d * d) - 1).bit_length() + 7) // 8


def pack_matrix(w, q: int) -> bytes:
    """Pack a square matrix as one base-q integer (row-major digits)."""
    arr = np.asarray(w, dtype=np.int64)
    d = arr.shape[0]
    value = 0
    for digit in arr.reshape(-1)[::-1].tolist():
        value = value * q + digit
    return value.to_bytes(packed_matrix_size(q, d), "little")


def unpack_matrix(data: bytes, q: int, d: int) -> np.ndarray:
    value = int.from_bytes(data, "little")
    digits = np.empty(d * d, dtype=np.int64)
    for i in range(d * d):
        value, digits[i] = divmod(value, q)
    if value:
        raise FormatError("packed matrix has out-of-range payload")
    return digits.reshape(d, d)


def permutation_bits(d: int) -> int:
    return 0 if d <= 1 else (d - 1).bit_length()


def pack_permutation(perm) -> bytes:
    arr = np.asarray(perm, dtype=np.int64)
    d = arr.shape[0]
    bits = permutation_bits(d)
    value = 0
    for entry in arr[::-1].tolist():
        value = (value << bits) | entry
    return value.to_bytes((d * bits + 7) // 8, "little")


def unpack_permutation(data: bytes, d: int) -> np.ndarray:
    bits = permutation_bits(d)
    value = int.from_bytes(data, "little")
    if bits == 0:
        return np.zeros(d, dtype=np.int64)
    mask = (1 << bits) - 1
    out = np.empty(d, dtype=np.int64)
    for i in range(d):
        out[i] = value & mask
        value >>= bits
    if sorted(out.tolist()) != list(range(d)):
        raise FormatError("stored permutation is not a bijection")
    return out


# ---------------------------------------------------------------------------
# transforms used by the codec


@dataclass(frozen=True)
class CompressionTransform:
    """Transform carried in a blob header.

    flag 0: identity.  flag 1: dense rank-d matrix ``w``.  flag 2: the
    composition blockdiag(block_matrices) applied after the component
    permutation, i.e. W = W_b * U with U x = x[permutation].
    """

    flag: int
    d: int
    w: "np.ndarray | None" = None
    block_sizes: "tuple[int, ...] | None" = None
    block_matrices: "tuple | None" = None
    permutation: "np.ndarray | None" = None

    def full_matrix(self) -> np.ndarray:
        if self.flag == 0:
            return identity_matrix(self.d)
        if self.flag == 1:
            return np.asarray(self.w)
        w_b = np.zeros((self.d, self.d), dtype=np.int64)
        start = 0
        for size, block in zip(self.block_sizes, self.block_matrices):
            w_b[start : start + size, start : start + size] = block
            start += size
        u = identity_matrix(self.d)[np.asarray(self.permutation)]
        return w_b @ u  # entries stay in {0, 1} * field values; reduced later


def fit_compression_transform(
    samples: SampleSet,
    mode: str = "glica",
    blocks: int = 2,
    max_cells: int = DEFAULT_MAX_CELLS,
) -> CompressionTransform:
    """Learn the transform for ``compress`` (separated out so callers can
    time the fit apart from the entropy coding)."""
    q, d = samples.q, samples.d
    if mode == "none":
        return CompressionTransform(flag=0, d=d)
    if mode == "glica":
        result = greedy_linear_ica(empirical_pmf(samples, max_cells=max_cells))
        return CompressionTransform(flag=1, d=d, w=result.w)
    if mode == "bloglica":
        if not 1 <= blocks <= d:
            raise ConfigError(f"blocks must lie in [1, {d}]")
        base, extra = divmod(d, blocks)
        sizes = tuple([base + 1] * extra + [base] * (blocks - extra))
        mats = []
        start = 0
        for size in sizes:
            sub = SampleSet(q, size, samples.rows[:, start : start + size])
            res = greedy_linear_ica(empirical_pmf(sub, max_cells=max_cells))
            mats.append(res.w)
            start += size
        return CompressionTransform(
            flag=2,
            d=d,
            block_sizes=sizes,
            block_matrices=tuple(mats),
            permutation=np.arange(d, dtype=np.int64),
        )
    raise ConfigError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# the blob


@dataclass(frozen=True)
class CompressedBlob:
    """Parsed (or freshly built) container; see the module docstring for
    the byte layout."""

    q: int
    d: int
    n: int
    transform: CompressionTransform
    streams: tuple
    scheme: str = "codec"

    def transform_matrix(self) -> np.ndarray:
        return self.transform.full_matrix() % self.q

    def header_bytes(self) -> bytes:
        head = struct.pack(
            "<4sBHHQB", MAGIC, VERSION, self.q, self.d, self.n, self.transform.flag
        )
        t = self.transform
        if t.flag == 1:
            head += pack_matrix(t.w, self.q)
        elif t.flag == 2:
            head += struct.pack("<H", len(t.block_sizes))
            head += b"".join(struct.pack("<H", s) for s in t.block_sizes)
            head += b"".join(pack_matrix(m, self.q) for m in t.block_matrices)
            head += pack_permutation(t.permutation)
        return head

    def to_bytes(self) -> bytes:
        out = bytearray(self.header_bytes())
        for stream in self.streams:
            out += struct.pack("<I", len(stream))
            out += stream
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "CompressedBlob":
        if len(data) < 18:
            raise TruncationError("blob shorter than its fixed header")
        magic, version, q, d, n, flag = struct.unpack("<4sBHHQB", data[:18])
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}")
        if version != VERSION:
            raise FormatError(f"unsupported version {version}")
        if not is_prime(q):
            raise FormatError(f"header field q = {q} is not prime")
        if d < 1:
            raise FormatError("header field d must be >= 1")
        if flag not in (0, 1, 2):
            raise FormatError(f"unknown transform flag {flag}")
        pos = 18

        def take(count: int, what: str) -> bytes:
            nonlocal pos
            if pos + count > len(data):
                raise TruncationError(f"blob ends inside {what}")
            chunk = data[pos : pos + count]
            pos += count
            return chunk

        if flag == 0:
            transform = CompressionTransform(flag=0, d=d)
        elif flag == 1:
            w = unpack_matrix(take(packed_matrix_size(q, d), "the transform"), q, d)
            if matrix_rank(w, q) != d:
                raise FormatError("stored transform is singular")
            transform = CompressionTransform(flag=1, d=d, w=w)
        else:
            (b,) = struct.unpack("<H", take(2, "the block count"))
            if b < 1:
                raise FormatError("block count must be >= 1")
            sizes = tuple(
                struct.unpack("<H", take(2, "a block size"))[0] for _ in range(b)
            )
            if sum(sizes) != d or min(sizes) < 1:
                raise FormatError("block sizes must partition the components")
            mats = []
            for size in sizes:
                m = unpack_matrix(take(packed_matrix_size(q, size), "a block"), q, size)
                if matrix_rank(m, q) != size:
                    raise FormatError("stored block transform is singular")
                mats.append(m)
            perm = unpack_permutation(
                take((d * permutation_bits(d) + 7) // 8, "the permutation"), d
            )
            transform = CompressionTransform(
                flag=2,
                d=d,
                block_sizes=sizes,
                block_matrices=tuple(mats),
                permutation=perm,
            )
        streams = []
        for _ in range(d):
            (length,) = struct.unpack("<I", take(4, "a stream prefix"))
            streams.append(take(length, "a stream"))
        if pos != len(data):
            raise FormatError(f"{len(data) - pos} trailing bytes after the payload")
        return cls(
            q=q,
            d=d,
            n=n,
            transform=transform,
            streams=tuple(streams),
            scheme=_FLAG_SCHEMES[flag],
        )

    def rate_report(self) -> "RateReport":
        payload = 8 * sum(len(s) for s in self.streams)
        total = 8 * len(self.to_bytes())
        return RateReport(
            scheme=self.scheme,
            n=self.n,
            model_bits=total - payload,
            payload_bits=payload,
        )


_FLAG_SCHEMES = {0: "codec-none", 1: "codec-glica", 2: "codec-bloglica"}


def compress(
    samples: SampleSet,
    mode: str = "glica",
    blocks: int = 2,
    max_cells: int = DEFAULT_MAX_CELLS,
    transform: "CompressionTransform | None" = None,
) -> CompressedBlob:
    """Transform the samples and entropy-code each component stream.

    ``transform`` short-circuits the fit (used when the caller already
    timed :func:`fit_compression_transform`).
    """
    if transform is None:
        transform = fit_compression_transform(
            samples, mode=mode, blocks=blocks, max_cells=max_cells
        )
    w = transform.full_matrix() % samples.q
    coded = (samples.rows @ w.T) % samples.q
    streams = tuple(
        encode_stream(coded[:, j], samples.q)[0] for j in range(samples.d)
    )
    return CompressedBlob(
        q=samples.q,
        d=samples.d,
        n=samples.n,
        transform=transform,
        streams=streams,
        scheme=_FLAG_SCHEMES[transform.flag],
    )


def decompress(blob: "CompressedBlob | bytes") -> SampleSet:
    """Exact inverse of :func:`compress`."""
    if not isinstance(blob, CompressedBlob):
        blob = CompressedBlob.from_bytes(blob)
    if len(blob.streams) != blob.d:
        raise FormatError("stream count does not match d")
    cols = [decode_stream(s, blob.q, blob.n) for s in blob.streams]
    coded = np.stack(cols, axis=1)
    w = blob.transform_matrix()
    if matrix_rank(w, blob.q) != blob.d:
        raise FormatError("stored transform is singular")
    w_inv = invert_matrix(w, blob.q)
    return SampleSet(blob.q, blob.d, (coded @ w_inv.T) % blob.q)


# ---------------------------------------------------------------------------
# reference rate reports


@dataclass(frozen=True)
class RateReport:
    """Bit accounting for one scheme: total = model + payload."""

    scheme: str
    n: int
    model_bits: float
    payload_bits: float
    info: dict = dataclass_field(default_factory=dict, compare=False)

    @property
    def total_bits(self) -> float:
        return self.model_bits + self.payload_bits

    @property
    def bits_per_symbol(self) -> float:
        return self.total_bits / self.n


def huffman_code_lengths(counts) -> np.ndarray:
    """Codeword length per symbol for the given positive counts.

    Deterministic: ties in the heap are broken by creation order.  A
    single-symbol alphabet is charged 1 bit per symbol by convention
    (the tree degenerates to one leaf).
    """
    weights = np.asarray(counts, dtype=np.int64)
    k = weights.shape[0]
    if k == 0:
        raise DimensionError("need at least one symbol")
    if np.any(weights <= 0):
        raise DomainError("counts must be positive")
    if k == 1:
        return np.ones(1, dtype=np.int64)
    heap = [(int(w), i) for i, w in enumerate(weights)]
    heapq.heapify(heap)
    parent = np.empty(2 * k - 1, dtype=np.int64)
    next_id = k
    counter = k
    while len(heap) > 1:
        w1, n1 = heapq.heappop(heap)
        w2, n2 = heapq.heappop(heap)
        parent[n1] = next_id
        parent[n2] = next_id
        heapq.heappush(heap, (w1 + w2, counter))
        counter += 1
        next_id += 1
    root = next_id - 1
    depths = np.zeros(2 * k - 1, dtype=np.int64)
    for node in range(root - 1, -1, -1):
        depths[node] = depths[parent[node]] + 1
    return depths[:k]


def huffman_dictionary_rate(
    samples: SampleSet, realistic_dictionary: bool = False
) -> RateReport:
    """Whole-word Huffman code plus the cost of shipping its dictionary.

    Payload is the exact coded size (integer codeword lengths); the
    dictionary is charged ceil(d*log2(q)) bits per distinct word, i.e. d
    bits for q = 2.  ``realistic_dictionary`` switches to a canonical-code
    serialization: per word, the word itself plus its codeword length
    (fixed-width field), plus one byte announcing that width.
    """
    words, counts = np.unique(samples.encoded(), return_counts=True)
    lengths = huffman_code_lengths(counts)
    payload = float((counts * lengths).sum())
    word_bits = (samples.q ** samples.d - 1).bit_length()
    n0 = words.shape[0]
    if realistic_dictionary:
        len_field = max(1, int(lengths.max()).bit_length())
        dictionary = float(n0 * (word_bits + len_field) + 8)
    else:
        dictionary = float(n0 * word_bits)
    emp = empirical_counts_entropy(counts, samples.n)
    return RateReport(
        scheme="huffman-dictionary",
        n=samples.n,
        model_bits=dictionary,
        payload_bits=payload,
        info={
            "unique_symbols": n0,
            "empirical_entropy_bits": samples.n * emp,
            "mean_codeword_length": payload / samples.n,
        },
    )


def empirical_counts_entropy(counts, n: int) -> float:
    return entropy(np.asarray(counts, dtype=np.float64) / n)


def kt_redundancy_bits(q: int, n: int) -> float:
    """Redundancy bound of the adaptive coder on one stream, in bits
    (before byte alignment): 0.5*(q-1)*log2(n) + 4."""
    if n < 1:
        return 0.0
    return 0.5 * (q - 1) * np.log2(n) + 4.0


def marginal_stream_estimate_bits(q: int, n: int) -> float:
    """Per-stream overhead estimate for reports: the coder redundancy
    bound plus 8 bits covering byte alignment of a stored stream."""
    return kt_redundancy_bits(q, n) + 8.0


def marginal_rate_no_transform(samples: SampleSet) -> RateReport:
    """Component-wise coding of the raw samples, reported from entropies.

    Payload is n * sum of empirical component entropies plus the per-stream
    overhead estimate (coder redundancy + byte alignment); there is no
    transform to describe, so the model cost is zero.
    """
    q, d, n = samples.q, samples.d, samples.n
    comp_entropy = 0.0
    for j in range(d):
        marg = np.bincount(samples.rows[:, j], minlength=q) / n
        comp_entropy += entropy(marg)
    payload = n * comp_entropy + d * marginal_stream_estimate_bits(q, n)
    return RateReport(
        scheme="marginal-no-transform",
        n=n,
        model_bits=0.0,
        payload_bits=float(payload),
        info={"component_entropy_bits": comp_entropy},
    )
