"""Command line: describe, infer, bench, synth."""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import bench
from .data import DataFile, canonical_json, check_data, read_data, write_data
from .distributions import ParameterError
from .dsl import load_model
from .errors import DataError, ModelError
from .ir.lower import lower
from .metrics import rmse
from .models import FIXTURES, fixture_path
from .protocols import lda_heldout_lpp, predictive_mean
from .rewrite.plan import describe_plan, plan_inference
from .runtime import RunConfig, initial_store, run
from .synth import gmm_points, lda_corpus, regression_points, split_documents, split_rows

EXIT_OK, EXIT_USAGE, EXIT_MODEL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _model_path(arg: str) -> Path:
    p = Path(arg)
    if not p.exists() and arg in FIXTURES:
        return fixture_path(arg)
    if not p.exists():
        raise DataError(f"model file {arg} not found")
    return p


def _names(csv_names: str) -> set:
    return {n.strip() for n in (csv_names or "").split(",") if n.strip()}


def cmd_describe(args) -> int:
    model = load_model(_model_path(args.model))
    joint = lower(model)
    plan = plan_inference(model, joint, args.method)
    sys.stdout.write(describe_plan(model, joint, plan))
    return EXIT_OK


def _write_trace(path, model, trace, timing):
    text = json.dumps(trace.to_json(model, timing), separators=(",", ":")) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _metric_rows(args, model, data, trace, seconds):
    """Metric at sample counts 1, 2, 4, ... and the last sample."""
    if args.metric == "none":
        return None
    if not args.test:
        raise UsageError(f"--metric {args.metric} needs --test")
    test = read_data(args.test)
    n = len(trace.samples)
    points = sorted({min(n, 2 ** k) for k in range(n.bit_length() + 1)} | {n})
    cum = np.cumsum(trace.timing_ms) / 1e3
    rows = []
    for p in points:
        state = trace.samples[p - 1]
        secs = float(cum[min(len(cum), p * args.thin) - 1])
        if args.metric == "lpp":
            value = lda_heldout_lpp(model, state["phi"], test, args.test_sweeps, args.seed,
                                    args.threads)
        else:
            target = args.target or model.ast.observed[-1]
            params = {v: np.mean([s[v] for s in trace.samples[:p]], axis=0)
                      for v in model.var_order if v not in test.arrays and v in state}
            pred = predictive_mean(model, target, test.hyper,
                                   {k: v for k, v in test.arrays.items() if k != target}, params)
            value = rmse(pred, test.arrays[target])
        rows.append((p, value, secs))
    return rows


def cmd_infer(args) -> int:
    model = load_model(_model_path(args.model))
    data = read_data(args.data)
    extra = _names(args.observe)
    unknown = extra - set(model.vars)
    if unknown:
        raise DataError(f"cannot observe unknown variable {sorted(unknown)[0]}")
    observed = frozenset(model.observed) | extra
    check_data(model, data, observed)
    if args.samples < 1 or args.threads < 1 or args.thin < 1 or args.burnin < 0:
        raise UsageError("--samples, --threads and --thin must be positive, --burnin >= 0")
    scale = args.proposal_scale
    config = RunConfig(seed=args.seed, threads=args.threads, thin=args.thin,
                       burnin=args.burnin, proposal_scale=scale)
    store = initial_store(model, data.hyper, data.arrays, args.seed, observed)
    t0 = time.perf_counter()
    trace, _ = run(model, data.hyper, store, args.samples, args.method, config, observed)
    seconds = time.perf_counter() - t0
    _write_trace(args.out, model, trace, args.timing)
    rows = _metric_rows(args, model, data, trace, seconds)
    if rows is not None:
        out = args.metrics_out or (args.out + ".metrics.csv" if args.out != "-" else None)
        text = bench.to_csv(rows)
        if out:
            Path(out).write_text(text, encoding="utf-8")
        else:
            sys.stderr.write(text)
    msg = (f"seed={args.seed} method={args.method} samples={args.samples} "
           f"threads={args.threads} seconds={seconds:.3f} "
           f"ms_per_sweep={1e3 * seconds / (args.samples + args.burnin):.3f}")
    print(msg, file=sys.stderr if args.out == "-" else sys.stdout)
    return EXIT_OK


def _int_list(text):
    try:
        return [int(float(x)) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")


def cmd_bench(args) -> int:
    series = args.sizes if args.sizes is not None else []
    if args.kind == "gmm":
        rows = bench.gmm_sizes(series, args.samples, args.seed, args.threads)
    else:
        rows = bench.lda_topics(series, args.samples, args.seed, args.threads)
    text = bench.to_csv(rows)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.kind == "lda":
        data, _ = lda_corpus(M=args.size or 200, V=args.vocab, K=args.topics,
                             doc_len=args.doc_len, seed=args.seed)
        train, test = (split_documents(data, args.test_fraction, args.seed)
                       if args.test_out else (data, None))
    elif args.kind == "gmm":
        train, _ = gmm_points(N=args.size or 10_000, seed=args.seed)
        test = None
    else:
        data, _ = regression_points(N=args.size or 500, K=args.features, seed=args.seed)
        train, test = (split_rows(data, args.test_fraction, args.seed)
                       if args.test_out else (data, None))
    write_data(args.out, train)
    if args.test_out and test is not None:
        write_data(args.test_out, test)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="plateau", description="Derive and run MCMC samplers for model files.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("describe", help="print the joint density, conditionals and plan")
    d.add_argument("model", help="model file, or the name of a bundled fixture")
    d.add_argument("--method", choices=("mh", "gibbs", "mwg"), default="gibbs")
    d.set_defaults(fn=cmd_describe)

    i = sub.add_parser("infer", help="run a sampler and write a trace")
    i.add_argument("--model", required=True)
    i.add_argument("--data", required=True)
    i.add_argument("--method", choices=("mh", "gibbs", "mwg"), default="gibbs")
    i.add_argument("--samples", type=int, default=100)
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--threads", type=int, default=1)
    i.add_argument("--observe", default="", help="comma separated extra observed variables")
    i.add_argument("--thin", type=int, default=1)
    i.add_argument("--burnin", type=int, default=0)
    i.add_argument("--out", default="-")
    i.add_argument("--metric", choices=("lpp", "rmse", "none"), default="none")
    i.add_argument("--test", help="held-out data for --metric")
    i.add_argument("--metrics-out", help="CSV path for the metric curve")
    i.add_argument("--test-sweeps", type=int, default=20,
                   help="sweeps used to fit held-out topic proportions (lpp)")
    i.add_argument("--target", help="observed variable scored by rmse (default: last observed)")
    i.add_argument("--proposal-scale", type=float, default=0.5)
    i.add_argument("--timing", action="store_true",
                   help="record per-sweep wall-clock times in the trace")
    i.set_defaults(fn=cmd_infer)

    b = sub.add_parser("bench", help="scaling series as CSV")
    b.add_argument("kind", choices=("gmm", "lda"))
    b.add_argument("--sizes", type=_int_list, help="data sizes (gmm) or topic counts (lda)")
    b.add_argument("--samples", type=int, default=5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--threads", type=int, default=1)
    b.add_argument("--out", default="-")
    b.set_defaults(fn=cmd_bench)

    s = sub.add_parser("synth", help="write a synthetic data set")
    s.add_argument("kind", choices=("lda", "gmm", "regression"))
    s.add_argument("--out", required=True)
    s.add_argument("--test-out")
    s.add_argument("--test-fraction", type=float, default=0.1)
    s.add_argument("--size", type=int, help="documents (lda) or points")
    s.add_argument("--topics", type=int, default=10)
    s.add_argument("--vocab", type=int, default=500)
    s.add_argument("--doc-len", type=int, default=100)
    s.add_argument("--features", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(fn=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"plateau: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelError, ParameterError) as exc:
        print(f"plateau: error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except OSError as exc:
        print(f"plateau: error: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
