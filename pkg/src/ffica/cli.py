"""Command-line interface.

Subcommands: bound, glica, bloglica, orderperm, gen, compress, decompress,
rate-report, experiment, verify.  Exit codes: 0 success, 1 usage error,
2 capacity error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .acceptance import format_result, run_criteria
from .coding import (
    compress,
    decompress,
    huffman_dictionary_rate,
    marginal_rate_no_transform,
)
from .errors import CapacityError, FFICAError
from .experiments import EXPERIMENTS, ExperimentSpec
from .fields import matrix_to_text
from .ica import (
    BlockICAConfig,
    block_greedy_linear_ica,
    greedy_linear_ica,
    linear_lower_bound,
    order_permutation,
    total_correlation,
)
from .pmf import (
    JointPMF,
    check_capacity,
    empirical_pmf,
    read_pmf_file,
    read_sample_file,
    sample_bernoulli_product,
    sample_beta_binomial,
    sample_zipf,
    write_pmf_file,
    write_sample_file,
)

USAGE_ERROR, CAPACITY_ERROR, VERIFY_ERROR = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; we reserve 2 for
    capacity problems, so remap to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _load_pmf(args):
    if getattr(args, "pmf", False):
        return read_pmf_file(args.infile)
    return empirical_pmf(read_sample_file(args.infile))


def _emit(args, payload: dict) -> None:
    if getattr(args, "format", "text") == "json":
        text = json.dumps(payload, indent=2, sort_keys=True)
    else:
        text = "\n".join(f"{k}: {v}" for k, v in payload.items())
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _add_input_options(sub, pmf_option: bool = True):
    sub.add_argument("--in", dest="infile", required=True, help="input file")
    if pmf_option:
        sub.add_argument(
            "--pmf",
            action="store_true",
            help="treat the input as a pmf file instead of samples",
        )
    sub.add_argument("--format", choices=("text", "json"), default="text")
    sub.add_argument("--out", help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ffica", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="lower bound on any linear decomposition")
    _add_input_options(p)

    p = sub.add_parser("glica", help="greedy linear decomposition")
    _add_input_options(p)
    p.add_argument("--matrix-out", help="write the transform in matrix text format")

    p = sub.add_parser("bloglica", help="block-iterative greedy decomposition")
    _add_input_options(p)
    p.add_argument("--blocks", type=int, default=2)
    p.add_argument("--max-iter", type=int, default=10)
    p.add_argument("--epsilon", type=float, default=1e-12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--matrix-out")

    p = sub.add_parser("orderperm", help="order-permutation baseline")
    _add_input_options(p)

    p = sub.add_parser("gen", help="generate sample files")
    gen_sub = p.add_subparsers(dest="distribution", required=True)
    for name in ("zipf", "betabin", "bernoulli"):
        g = gen_sub.add_parser(name)
        g.add_argument("--q", type=int, default=2)
        g.add_argument("--d", type=int, required=True)
        g.add_argument("--n", type=int, required=True)
        g.add_argument("--seed", type=int, default=0)
        g.add_argument("--out", required=True)
        g.add_argument("--pmf-out", help="also write the ground-truth pmf")
        if name == "zipf":
            g.add_argument("--s", type=float, default=1.01)
        elif name == "betabin":
            g.add_argument("--a", type=float, default=3.0)
            g.add_argument("--b", type=float, default=3.0)
        else:
            g.add_argument(
                "--p",
                type=float,
                nargs="+",
                help="Bernoulli parameter(s): one per component or a single shared value",
            )
            g.add_argument(
                "--ramp",
                action="store_true",
                help="use p_i = i/d instead of --p",
            )

    p = sub.add_parser("compress", help="compress a sample file")
    p.add_argument("--mode", choices=("glica", "bloglica", "none"), default="glica")
    p.add_argument("--blocks", type=int, default=2)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("decompress", help="restore a sample file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("rate-report", help="compare coding rates")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--all", action="store_true", help="report every scheme")
    p.add_argument(
        "--scheme",
        choices=("huffman", "marginal", "glica", "bloglica", "none"),
        action="append",
    )
    p.add_argument("--blocks", type=int, default=2)
    p.add_argument("--realistic-dictionary", action="store_true")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out")

    p = sub.add_parser("experiment", help="run a named experiment")
    p.add_argument("name", choices=sorted(EXPERIMENTS))
    p.add_argument(
        "--set",
        metavar="KEY=VALUE",
        action="append",
        default=[],
        help="override a runner parameter (repeatable)",
    )
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", required=True)

    p = sub.add_parser("verify", help="run the acceptance criteria")
    p.add_argument(
        "--criteria",
        type=int,
        nargs="+",
        help="subset of criterion numbers (default: all)",
    )
    return parser


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _cmd_bound(args) -> int:
    pmf = _load_pmf(args)
    _emit(args, {"q": pmf.q, "d": pmf.d, "lower_bound_bits": linear_lower_bound(pmf)})
    return 0


def _cmd_glica(args) -> int:
    pmf = _load_pmf(args)
    res = greedy_linear_ica(pmf)
    _emit(
        args,
        {
            "q": pmf.q,
            "d": pmf.d,
            "objective_bits": res.objective,
            "lower_bound_bits": res.lower_bound,
            "rows_examined": res.rows_examined,
            "component_entropies": list(map(float, res.component_entropies)),
        },
    )
    if args.matrix_out:
        with open(args.matrix_out, "w", encoding="ascii") as fh:
            fh.write(matrix_to_text(res.w, pmf.q))
    return 0


def _cmd_bloglica(args) -> int:
    samples = read_sample_file(args.infile)
    cfg = BlockICAConfig(
        blocks=args.blocks,
        max_iter=args.max_iter,
        epsilon=args.epsilon,
        seed=args.seed,
    )
    res = block_greedy_linear_ica(samples, cfg)
    _emit(
        args,
        {
            "q": samples.q,
            "d": samples.d,
            "objective_bits": res.objective,
            "iterations": res.iterations,
            "trace": list(map(float, res.trace)),
        },
    )
    if args.matrix_out:
        with open(args.matrix_out, "w", encoding="ascii") as fh:
            fh.write(matrix_to_text(res.w, samples.q))
    return 0


def _cmd_orderperm(args) -> int:
    pmf = _load_pmf(args)
    res = order_permutation(pmf)
    _emit(
        args,
        {
            "q": pmf.q,
            "d": pmf.d,
            "objective_bits": res.objective,
            "total_correlation_bits": res.total_correlation,
            "identity_total_correlation_bits": total_correlation(pmf),
        },
    )
    return 0


def _cmd_gen(args) -> int:
    if args.distribution == "zipf":
        samples, truth = sample_zipf(args.q, args.d, args.s, args.n, args.seed)
    elif args.distribution == "betabin":
        samples, truth = sample_beta_binomial(
            args.q, args.d, args.a, args.b, args.n, args.seed
        )
    else:
        if args.q != 2:
            raise FFICAError("bernoulli generation requires q=2")
        if args.ramp:
            params = np.arange(1, args.d + 1) / args.d
        elif args.p is None:
            raise FFICAError("bernoulli generation needs --p or --ramp")
        elif len(args.p) == 1:
            params = np.full(args.d, args.p[0])
        elif len(args.p) == args.d:
            params = np.array(args.p)
        else:
            raise FFICAError(f"--p wants 1 or {args.d} values")
        samples = sample_bernoulli_product(params, args.n, args.seed)
        truth = None
        if args.pmf_out:
            check_capacity(2, args.d)
            probs = np.ones(1)
            for p in params:
                probs = np.outer(probs, [1.0 - p, p]).reshape(-1)
            truth = JointPMF(2, args.d, probs)
    write_sample_file(args.out, samples)
    if args.pmf_out:
        write_pmf_file(args.pmf_out, truth)
    return 0


def _cmd_compress(args) -> int:
    samples = read_sample_file(args.infile)
    blob = compress(samples, mode=args.mode, blocks=args.blocks)
    with open(args.out, "wb") as fh:
        fh.write(blob.to_bytes())
    report = blob.rate_report()
    print(f"{report.scheme}: {report.total_bits} bits, "
          f"{report.bits_per_symbol:.4f} bits/symbol")
    return 0


def _cmd_decompress(args) -> int:
    with open(args.infile, "rb") as fh:
        data = fh.read()
    write_sample_file(args.out, decompress(data))
    return 0


def _cmd_rate_report(args) -> int:
    samples = read_sample_file(args.infile)
    schemes = args.scheme or []
    if args.all or not schemes:
        schemes = ["huffman", "marginal", "glica", "bloglica", "none"]
    reports = []
    for scheme in schemes:
        if scheme == "huffman":
            reports.append(
                huffman_dictionary_rate(
                    samples, realistic_dictionary=args.realistic_dictionary
                )
            )
        elif scheme == "marginal":
            reports.append(marginal_rate_no_transform(samples))
        else:
            reports.append(
                compress(samples, mode=scheme, blocks=args.blocks).rate_report()
            )
    payload = {
        r.scheme: {
            "total_bits": r.total_bits,
            "bits_per_symbol": r.bits_per_symbol,
            "model_bits": r.model_bits,
            "payload_bits": r.payload_bits,
            **{k: float(v) for k, v in r.info.items()},
        }
        for r in reports
    }
    _emit(args, payload)
    return 0


def _cmd_experiment(args) -> int:
    params = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise FFICAError(f"--set wants KEY=VALUE, got {item!r}")
        params[key.replace("-", "_")] = _parse_value(value)
    if args.seed is not None:
        params["seed"] = args.seed
    spec = ExperimentSpec(
        name=args.name, params=params, output=args.out, fmt=args.format
    )
    rows = spec.run()
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _cmd_verify(args) -> int:
    results = run_criteria(args.criteria)
    for res in results:
        print(format_result(res))
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return VERIFY_ERROR if failed else 0


_COMMANDS = {
    "bound": _cmd_bound,
    "glica": _cmd_glica,
    "bloglica": _cmd_bloglica,
    "orderperm": _cmd_orderperm,
    "gen": _cmd_gen,
    "compress": _cmd_compress,
    "decompress": _cmd_decompress,
    "rate-report": _cmd_rate_report,
    "experiment": _cmd_experiment,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return CAPACITY_ERROR
    except FFICAError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
