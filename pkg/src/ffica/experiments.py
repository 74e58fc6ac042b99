"""Seeded experiment runners emitting flat result rows (CSV or JSON).

Every runner takes plain keyword parameters plus a master seed, derives an
independent child seed per parameter point, and returns ResultRow records;
reruns with the same arguments reproduce every value bit-for-bit (only the
``seconds`` column varies).
"""

from __future__ import annotations

import csv
import inspect
import json
import time
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from . import __version__
from .coding import (
    compress,
    fit_compression_transform,
    huffman_dictionary_rate,
    marginal_rate_no_transform,
    decompress,
)
from .errors import ConfigError, FormatError
from .fields import is_monomial, random_invertible
from .ica import (
    BlockICAConfig,
    block_greedy_linear_ica,
    expected_rows_examined,
    greedy_linear_ica,
    linear_lower_bound,
    order_permutation,
    rows_examined_variance_bound,
    simulate_rows_examined,
)
from .pmf import (
    SampleSet,
    _entropy_rows,
    binary_entropy,
    digamma,
    empirical_pmf,
    entropy,
    sample_bernoulli_product,
    sample_beta_binomial,
    sample_uniform_simplex,
    sample_zipf,
    transform_samples,
    walsh_hadamard_transform,
)
from .rng import as_generator, point_seed

_LN2 = float(np.log(2.0))

CSV_HEADER = ["experiment", "point", "metric", "value", "seconds", "seed"]


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    point: dict
    metric: str
    value: float
    seconds: float
    seed: int

    def point_label(self) -> str:
        return ";".join(f"{k}={self.point[k]}" for k in sorted(self.point))


def rows_to_csv(rows, path, meta: "dict | None" = None) -> None:
    """Flat CSV with a JSON meta sidecar at <path>.meta.json."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in rows:
            writer.writerow(
                [r.experiment, r.point_label(), r.metric, repr(r.value), repr(r.seconds), r.seed]
            )
    with open(f"{path}.meta.json", "w", encoding="ascii") as fh:
        json.dump(meta or {}, fh, indent=2, sort_keys=True)
        fh.write("\n")


def rows_to_json(rows, path, meta: "dict | None" = None) -> None:
    doc = {
        "meta": meta or {},
        "rows": [
            {
                "experiment": r.experiment,
                "point": r.point,
                "metric": r.metric,
                "value": r.value,
                "seconds": r.seconds,
                "seed": r.seed,
            }
            for r in rows
        ],
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_rows_csv(path) -> list[ResultRow]:
    """Schema-checked reader for the CSV format above."""
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise FormatError(f"unexpected CSV header {header!r}")
        out = []
        for rec in reader:
            if len(rec) != len(CSV_HEADER):
                raise FormatError(f"malformed CSV record {rec!r}")
            point = {}
            if rec[1]:
                for item in rec[1].split(";"):
                    k, _, v = item.partition("=")
                    point[k] = v
            out.append(
                ResultRow(
                    experiment=rec[0],
                    point=point,
                    metric=rec[2],
                    value=float(rec[3]),
                    seconds=float(rec[4]),
                    seed=int(rec[5]),
                )
            )
    return out


def _finite(value: float) -> float:
    value = float(value)
    if not np.isfinite(value):
        raise ValueError("experiment metrics must be finite")
    return value


class _PointRecorder:
    """Collects one parameter point's metrics with a shared wall time."""

    def __init__(self, experiment: str, point: dict, seed: int):
        self.experiment = experiment
        self.point = dict(point)
        self.seed = seed
        self.rows: list[ResultRow] = []
        self._start = time.perf_counter()

    def emit(self, metric: str, value: float) -> None:
        self.rows.append(
            ResultRow(
                experiment=self.experiment,
                point=self.point,
                metric=metric,
                value=_finite(value),
                seconds=time.perf_counter() - self._start,
                seed=self.seed,
            )
        )


# ---------------------------------------------------------------------------
# runners


def run_recover_sources(
    d_values=(4, 6, 8, 10),
    n: int = 10_000,
    p: float = 0.4,
    trials: int = 10,
    seed: int = 0,
) -> list[ResultRow]:
    """Mix independent Bernoulli(p) sources with a random non-monomial
    invertible matrix and ask the greedy solver to undo it."""
    rows: list[ResultRow] = []
    for i, d in enumerate(d_values):
        rng = as_generator(point_seed(seed, i))
        rec = _PointRecorder("recover-sources", {"d": d, "n": n, "p": p}, seed)
        bounds, objectives, recovered, examined = [], [], [], []
        for _ in range(trials):
            sources = sample_bernoulli_product(np.full(d, p), n, rng)
            mixing = random_invertible(d, 2, rng, nontrivial=True)
            mixed = transform_samples(sources, mixing)
            est = empirical_pmf(mixed)
            res = greedy_linear_ica(est)
            bounds.append(res.lower_bound)
            objectives.append(res.objective)
            recovered.append(is_monomial((res.w @ mixing) % 2))
            examined.append(res.rows_examined)
        rec.emit("lower_bound", np.mean(bounds))
        rec.emit("glica_objective", np.mean(objectives))
        rec.emit("recovery_rate", np.mean(recovered))
        rec.emit("rows_examined", np.mean(examined))
        rec.emit("source_entropy", d * binary_entropy(p))
        rows += rec.rows
    return rows


def _objective_runtime_point(
    rec: _PointRecorder, samples: SampleSet, blocks, block_seed: int
) -> None:
    """Shared body of the Zipf / Beta-Binomial / GF(q) objective runs."""
    est = empirical_pmf(samples)
    t0 = time.perf_counter()
    bound = linear_lower_bound(est)
    rec.emit("bound_seconds", time.perf_counter() - t0)
    rec.emit("lower_bound", bound)
    t0 = time.perf_counter()
    res = greedy_linear_ica(est)
    rec.emit("glica_seconds", time.perf_counter() - t0)
    rec.emit("glica_objective", res.objective)
    for b in blocks:
        cfg = BlockICAConfig(blocks=b, max_iter=10, seed=block_seed)
        t0 = time.perf_counter()
        bres = block_greedy_linear_ica(samples, cfg)
        rec.emit(f"bloglica_seconds_b{b}", time.perf_counter() - t0)
        rec.emit(f"bloglica_objective_b{b}", bres.objective)
        rec.emit(f"bloglica_iterations_b{b}", bres.iterations)
    rec.emit("joint_empirical_entropy", est.entropy())


def run_zipf(
    d_values=(4, 6, 8, 10, 12, 14),
    n: int = 10_000,
    s: float = 1.01,
    blocks=(2, 3),
    seed: int = 0,
) -> list[ResultRow]:
    """Objective and runtime curves on heavy-tailed (Zipf) words."""
    rows: list[ResultRow] = []
    for i, d in enumerate(d_values):
        child = point_seed(seed, i)
        rng = as_generator(child)
        samples, _ = sample_zipf(2, d, s, n, rng)
        rec = _PointRecorder("zipf", {"d": d, "n": n, "s": s}, seed)
        _objective_runtime_point(rec, samples, blocks, block_seed=seed + i)
        rows += rec.rows
    return rows


def run_beta_binomial(
    d_values=(4, 6, 8, 10, 12, 14),
    n: int = 10_000,
    a: float = 3.0,
    b: float = 3.0,
    seed: int = 0,
    blocks=(2, 3),
) -> list[ResultRow]:
    """Same curves on the higher-entropy Beta-Binomial words, plus the
    entropy-floor check (true entropy exceeds d - 1/2 for a = b = 3; the
    plug-in estimate is allowed its Miller-Madow bias)."""
    rows: list[ResultRow] = []
    for i, d in enumerate(d_values):
        child = point_seed(seed, i)
        rng = as_generator(child)
        samples, _ = sample_beta_binomial(2, d, a, b, n, rng)
        rec = _PointRecorder("beta-binomial", {"d": d, "n": n, "a": a, "b": b}, seed)
        _objective_runtime_point(rec, samples, blocks, block_seed=seed + i)
        bias_allowance = (2**d - 1) / (2 * n * _LN2)
        floor = d - 0.5 - bias_allowance - 0.1
        joint = empirical_pmf(samples).entropy()
        rec.emit("entropy_floor", floor)
        rec.emit("entropy_floor_ok", float(joint > floor))
        rows += rec.rows
    return rows


def run_gfq(
    d: int = 6,
    q_values=(2, 3, 5, 7),
    n: int = 10_000,
    s: float = 1.01,
    blocks=(2, 3),
    seed: int = 0,
) -> list[ResultRow]:
    """Objective and runtime versus the field order at fixed d."""
    rows: list[ResultRow] = []
    for i, q in enumerate(q_values):
        child = point_seed(seed, i)
        rng = as_generator(child)
        samples, _ = sample_zipf(q, d, s, n, rng)
        rec = _PointRecorder("gfq", {"d": d, "q": q, "n": n, "s": s}, seed)
        _objective_runtime_point(rec, samples, blocks, block_seed=seed + i)
        bound = next(r.value for r in rec.rows if r.metric == "lower_bound")
        objective = next(r.value for r in rec.rows if r.metric == "glica_objective")
        gap = (objective - bound) / bound if bound > 0 else 0.0
        rec.emit("glica_gap_fraction", gap)
        rows += rec.rows
    return rows


def run_linear_vs_nonlinear(
    d_values=(4, 6, 8, 10, 12),
    n: int = 100_000,
    s: float = 1.01,
    seed: int = 0,
) -> list[ResultRow]:
    """Linear bound and greedy objective versus the order permutation and
    versus applying no transform at all (q = 2, Zipf words)."""
    rows: list[ResultRow] = []
    for i, d in enumerate(d_values):
        child = point_seed(seed, i)
        rng = as_generator(child)
        samples, _ = sample_zipf(2, d, s, n, rng)
        est = empirical_pmf(samples)
        rec = _PointRecorder("linear-vs-nonlinear", {"d": d, "n": n, "s": s}, seed)
        res = greedy_linear_ica(est)
        perm = order_permutation(est)
        rec.emit("lower_bound", res.lower_bound)
        rec.emit("glica_objective", res.objective)
        rec.emit("orderperm_objective", perm.objective)
        rec.emit("identity_objective", _entropy_rows(est.component_marginals()).sum())
        rec.emit("joint_empirical_entropy", est.entropy())
        rows += rec.rows
    return rows


def _average_case_batch(d: int, draws: int, rng, batch: int = 512) -> dict:
    """Monte-Carlo means over uniform-simplex pmfs at alphabet 2**d.

    Per draw: the linear lower bound, the untransformed (identity)
    objective, the order-permutation objective / total correlation, and
    the joint entropy.  Everything is batched through the Walsh-Hadamard
    transform.
    """
    m = 1 << d
    singleton_idx = (1 << np.arange(d - 1, -1, -1)).astype(np.int64)
    sums = {
        "bound": 0.0,
        "identity": 0.0,
        "orderperm": 0.0,
        "orderperm_tc": 0.0,
        "joint": 0.0,
    }
    sq = {"orderperm_tc": 0.0, "identity": 0.0, "joint": 0.0}
    # zero_mask[w, j] = 1 when digit j of word w is 0 (for sorted relabeling)
    words = np.arange(m)
    bits = (words[:, None] >> np.arange(d - 1, -1, -1)[None, :]) & 1
    zero_mask = (bits == 0).astype(np.float64)
    done = 0
    while done < draws:
        size = min(batch, draws - done)
        p = sample_uniform_simplex(m, rng, size=size)
        coeff = walsh_hadamard_transform(p)
        ents = binary_entropy(np.clip((1.0 + coeff) / 2.0, 0.0, 1.0))
        ents[:, 0] = 0.0
        bound = np.sort(np.partition(ents[:, 1:], d - 1, axis=1)[:, :d], axis=1).sum(axis=1)
        identity = ents[:, singleton_idx].sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            contrib = np.where(p > 0, p * np.log2(p), 0.0)
        joint = -contrib.sum(axis=1)
        sorted_p = np.sort(p, axis=1)
        perm_obj = binary_entropy(sorted_p @ zero_mask).sum(axis=1)
        perm_tc = perm_obj - joint
        sums["bound"] += bound.sum()
        sums["identity"] += identity.sum()
        sums["orderperm"] += perm_obj.sum()
        sums["orderperm_tc"] += perm_tc.sum()
        sums["joint"] += joint.sum()
        sq["orderperm_tc"] += (perm_tc**2).sum()
        sq["identity"] += (identity**2).sum()
        sq["joint"] += (joint**2).sum()
        done += size
    out = {k: v / draws for k, v in sums.items()}
    for key, total in sq.items():
        var = max(total / draws - out[key] ** 2, 0.0)
        out[f"{key}_se"] = float(np.sqrt(var / draws))
    return out


def run_average_case(
    d_values=(2, 4, 6, 8, 10),
    draws: int = 2000,
    seed: int = 0,
) -> list[ResultRow]:
    """Average-case behaviour over the uniform simplex of pmfs, with the
    digamma-based analytic anchors."""
    rows: list[ResultRow] = []
    for i, d in enumerate(d_values):
        rng = as_generator(point_seed(seed, i))
        rec = _PointRecorder("average-case", {"d": d, "draws": draws}, seed)
        stats = _average_case_batch(d, draws, rng)
        m = 1 << d
        rec.emit("mean_lower_bound", stats["bound"])
        rec.emit("mean_identity_objective", stats["identity"])
        rec.emit("mean_identity_per_component", stats["identity"] / d)
        rec.emit("mean_orderperm_objective", stats["orderperm"])
        rec.emit("mean_orderperm_total_correlation", stats["orderperm_tc"])
        rec.emit("mean_joint_entropy", stats["joint"])
        rec.emit("se_orderperm_total_correlation", stats["orderperm_tc_se"])
        rec.emit("se_identity_objective", stats["identity_se"])
        rec.emit("se_joint_entropy", stats["joint_se"])
        rec.emit("analytic_joint_entropy", (digamma(m + 1) - digamma(2)) / _LN2)
        rec.emit(
            "identity_candidate_printed",
            d / _LN2 * (digamma(m - 1) - digamma(m // 2)),
        )
        rec.emit(
            "identity_candidate_rederived",
            d / _LN2 * (digamma(m + 1) - digamma(m // 2 + 1)),
        )
        rows += rec.rows
    return rows


def run_compression(
    d: int = 20,
    n_values=(1000, 2000, 5000, 10_000),
    seed: int = 0,
    blocks: int = 2,
) -> list[ResultRow]:
    """Large-alphabet coding rates on mixed ramp-parameter sources.

    Sources are independent bits with parameters i/d for i = 1..d, mixed by
    a random non-monomial invertible matrix; rates compare whole-word
    Huffman + dictionary, the greedy codec, the block codec, and marginal
    coding without any transform.
    """
    params = np.arange(1, d + 1) / d
    true_entropy = float(binary_entropy(params).sum())
    rows: list[ResultRow] = []
    for i, n in enumerate(n_values):
        rng = as_generator(point_seed(seed, i))
        sources = sample_bernoulli_product(params, n, rng)
        mixing = random_invertible(d, 2, rng, nontrivial=True)
        mixed = transform_samples(sources, mixing)
        rec = _PointRecorder("compression", {"d": d, "n": n}, seed)
        rec.emit("source_entropy_true", true_entropy)
        source_marginals = np.array(
            [np.bincount(sources.rows[:, j], minlength=2)[1] / n for j in range(d)]
        )
        rec.emit("source_marginal_entropy", binary_entropy(source_marginals).sum())
        rec.emit("huffman_bits_per_symbol", huffman_dictionary_rate(mixed).bits_per_symbol)
        rec.emit(
            "marginal_bits_per_symbol",
            marginal_rate_no_transform(mixed).bits_per_symbol,
        )
        t0 = time.perf_counter()
        glica_transform = fit_compression_transform(mixed, mode="glica")
        glica_fit = time.perf_counter() - t0
        t0 = time.perf_counter()
        block_transform = fit_compression_transform(mixed, mode="bloglica", blocks=blocks)
        block_fit = time.perf_counter() - t0
        blob = compress(mixed, transform=glica_transform)
        bblob = compress(mixed, transform=block_transform)
        rec.emit("glica_fit_seconds", glica_fit)
        rec.emit(f"bloglica_fit_seconds_b{blocks}", block_fit)
        rec.emit("glica_bits_per_symbol", blob.rate_report().bits_per_symbol)
        rec.emit(
            f"bloglica_bits_per_symbol_b{blocks}", bblob.rate_report().bits_per_symbol
        )
        restored = decompress(blob.to_bytes())
        rec.emit("roundtrip_ok", float(np.array_equal(restored.rows, mixed.rows)))
        rows += rec.rows
    return rows


def run_bound_statistics(
    d_values=(8, 16),
    q_values=(2, 3, 7),
    trials: int = 2000,
    tail_offset: float = 6.0,
    seed: int = 0,
) -> list[ResultRow]:
    """Monte-Carlo check of the uniform-row-drawing model statistics."""
    rows: list[ResultRow] = []
    index = 0
    for d in d_values:
        for q in q_values:
            rng = as_generator(point_seed(seed, index))
            index += 1
            rec = _PointRecorder(
                "bound-statistics", {"d": d, "q": q, "trials": trials}, seed
            )
            samples = simulate_rows_examined(d, q, trials, rng)
            mean_overhead = q / (q - 1) ** 2 if q > 2 else 2.0
            var_limit = 2.744 if q == 2 else rows_examined_variance_bound(q)
            threshold = d + mean_overhead + tail_offset
            rec.emit("empirical_mean", samples.mean())
            rec.emit("empirical_var", samples.var(ddof=1))
            rec.emit("analytic_mean", expected_rows_examined(d, q))
            rec.emit("variance_bound", rows_examined_variance_bound(q))
            rec.emit("tail_threshold", threshold)
            rec.emit("tail_empirical", float((samples >= threshold).mean()))
            rec.emit("tail_bound", var_limit / tail_offset**2)
            rows += rec.rows
    return rows


EXPERIMENTS = {
    "recover-sources": run_recover_sources,
    "zipf": run_zipf,
    "beta-binomial": run_beta_binomial,
    "gfq": run_gfq,
    "linear-vs-nonlinear": run_linear_vs_nonlinear,
    "average-case": run_average_case,
    "compression": run_compression,
    "bound-statistics": run_bound_statistics,
}


@dataclass
class ExperimentSpec:
    """A named experiment plus parameter overrides and an output target."""

    name: str
    params: dict = dataclass_field(default_factory=dict)
    output: "str | None" = None
    fmt: str = "csv"

    def validate(self) -> None:
        if self.name not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.name!r}; choices: {sorted(EXPERIMENTS)}"
            )
        if self.fmt not in ("csv", "json"):
            raise ConfigError("format must be 'csv' or 'json'")
        allowed = set(inspect.signature(EXPERIMENTS[self.name]).parameters)
        unknown = set(self.params) - allowed
        if unknown:
            raise ConfigError(
                f"unknown parameters {sorted(unknown)}; {self.name} accepts {sorted(allowed)}"
            )

    def run(self) -> list[ResultRow]:
        self.validate()
        rows = EXPERIMENTS[self.name](**self.params)
        if self.output:
            meta = {
                "experiment": self.name,
                "params": {k: _jsonable(v) for k, v in self.params.items()},
                "seed": int(self.params.get("seed", 0)),
                "version": __version__,
            }
            if self.fmt == "csv":
                rows_to_csv(rows, self.output, meta)
            else:
                rows_to_json(rows, self.output, meta)
        return rows


def _jsonable(value):
    if isinstance(value, (tuple, list, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value
