"""Command-line interface: build, query and merge digest files, run experiments.

Exit codes: 0 success, 1 usage error, 2 data error, 3 format error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import codec, experiments
from .digest import MergePolicy, TDigest, merge_digests
from .exceptions import CodecError, ConfigurationError, TDigestError
from .generators import GENERATORS
from .scale import ScaleFunction

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_FORMAT = 3

SCALE_CHOICES = [kind.value for kind in ScaleFunction]


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _policy(args) -> MergePolicy:
    return MergePolicy(
        buffer_capacity=args.buffer,
        working_delta_factor=args.stratify_factor,
        alternate_scan=args.alternate,
    )


def _read_values(stream, fmt: str) -> np.ndarray:
    if fmt == "f64le":
        raw = stream.buffer.read() if hasattr(stream, "buffer") else stream.read()
        if len(raw) % 8:
            raise DataError(f"f64le input length {len(raw)} is not a multiple of 8")
        values = np.frombuffer(raw, dtype="<f8").astype(np.float64)
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            raise DataError(f"value {bad[0] + 1} is not finite")
        return values
    out = []
    for lineno, line in enumerate(stream, start=1):
        text = line.strip()
        if not text:
            continue
        try:
            value = float(text)
        except ValueError:
            raise DataError(f"line {lineno}: cannot parse {text!r} as a number") from None
        if value != value or value in (float("inf"), float("-inf")):
            raise DataError(f"line {lineno}: {text!r} is not a finite number")
        out.append(value)
    return np.asarray(out, dtype=np.float64)


def _load(path) -> TDigest:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    return codec.decode(data)


def _write_digest(digest: TDigest, out, encoding: str):
    image = codec.encode(digest, encoding)
    if out in (None, "-"):
        sys.stdout.buffer.write(image)
        sys.stdout.flush()
    else:
        Path(out).write_bytes(image)
    return image


def _describe(digest: TDigest, stream):
    print(
        f"centroids={digest.centroid_count} total_weight={digest.total_weight:.17g} "
        f"min={digest.min:.17g} max={digest.max:.17g}",
        file=stream,
    )


def cmd_build(args):
    if args.input in (None, "-"):
        values = _read_values(sys.stdin, args.format)
    else:
        mode = "rb" if args.format == "f64le" else "r"
        try:
            with open(args.input, mode) as fh:
                values = _read_values(fh, args.format)
        except OSError as exc:
            raise DataError(f"cannot read {args.input}: {exc.strerror}") from None
    digest = TDigest(args.delta, args.scale, _policy(args))
    digest.update(values)
    digest.compress()
    _write_digest(digest, args.out, args.encoding)
    _describe(digest, sys.stderr if args.out in (None, "-") else sys.stdout)


def _print_values(values):
    for v in values:
        print(f"{v:.17g}")


def cmd_quantile(args):
    digest = _load(args.digest)
    _print_values([digest.quantile(q) for q in args.probes])


def cmd_cdf(args):
    digest = _load(args.digest)
    _print_values([digest.cdf(x) for x in args.probes])


def cmd_tmean(args):
    if len(args.probes) % 2:
        raise UsageError("tmean takes pairs of quantiles: LO HI [LO HI ...]")
    digest = _load(args.digest)
    pairs = zip(args.probes[0::2], args.probes[1::2])
    _print_values([digest.trimmed_mean(lo, hi) for lo, hi in pairs])


def cmd_merge(args):
    digests = [_load(path) for path in args.digests]
    merged = merge_digests(digests, args.delta)
    _write_digest(merged, args.out, args.encoding)
    _describe(merged, sys.stderr if args.out in (None, "-") else sys.stdout)


def _config(args) -> experiments.ExperimentConfig:
    scales = args.scale or ["k2"]
    return experiments.ExperimentConfig(
        generator=args.generator,
        sample_count=args.n,
        trials=args.trials,
        delta=args.delta,
        scale=scales[0],
        policy=_policy(args),
        seed=args.seed,
    )


def _write_csv(rows, fieldnames, out):
    if out in (None, "-"):
        fh = sys.stdout
        close = False
    else:
        fh = open(out, "w", encoding="utf-8", newline="")
        close = True
    try:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    finally:
        if close:
            fh.close()


def cmd_bench_accuracy(args):
    rows = experiments.bench_accuracy(_config(args), scales=args.scale or ["k2"])
    _write_csv(rows, ["scale", "q", "trial", "abs_error", "rel_error"], args.out)


def cmd_bench_size(args):
    rows = experiments.bench_size(_config(args), encoding=args.encoding)
    _write_csv(rows, ["delta", "q", "mean_abs_error", "centroid_count", "image_octets"], args.out)


def cmd_bench_overlap(args):
    rows = experiments.bench_overlap(_config(args))
    _write_csv(rows, ["policy", "trial", "Delta"], args.out)


def cmd_bench_parallel(args):
    ways = [int(w) for w in args.ways.split(",")]
    rows = experiments.bench_parallel(_config(args), ways=ways)
    _write_csv(rows, ["ways", "strategy", "trial", "q", "abs_error"], args.out)


def _digest_flags(p, *, scale_default="k2", repeatable_scale=False):
    p.add_argument("--delta", type=float, default=100.0, help="compression (default 100)")
    if repeatable_scale:
        p.add_argument("--scale", choices=SCALE_CHOICES, action="append",
                       help="scale function; may be repeated (default k2)")
    else:
        p.add_argument("--scale", choices=SCALE_CHOICES, default=scale_default)
    p.add_argument("--buffer", type=int, default=None, help="buffer capacity (default 10*ceil(delta))")
    p.add_argument("--stratify-factor", type=float, default=3.0,
                   help="merge at this multiple of delta while ingesting (default 3)")
    p.add_argument("--alternate", action=argparse.BooleanOptionalAction, default=True,
                   help="alternate the scan direction of successive merges")


def _bench_flags(p):
    _digest_flags(p, repeatable_scale=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--n", type=int, default=1_000_000, help="samples per trial")
    p.add_argument("--generator", choices=GENERATORS, default="uniform")
    p.add_argument("--out", default=None, help="CSV output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tdigest", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build", help="digest a stream of numbers into a digest file")
    p.add_argument("input", nargs="?", default="-", help="input file (default stdin)")
    _digest_flags(p)
    p.add_argument("--format", choices=["text", "f64le"], default="text")
    p.add_argument("--encoding", choices=["full", "compact"], default="full")
    p.add_argument("--out", default=None, help="digest file (default stdout)")
    p.set_defaults(func=cmd_build)

    for name, func, meta, helptext in [
        ("quantile", cmd_quantile, "Q", "estimate quantiles"),
        ("cdf", cmd_cdf, "X", "estimate CDF values"),
        ("tmean", cmd_tmean, "Q", "trimmed means between pairs of quantiles"),
    ]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("digest")
        p.add_argument("probes", nargs="+", type=float, metavar=meta)
        p.set_defaults(func=func)

    p = sub.add_parser("merge", help="merge digest files")
    p.add_argument("digests", nargs="+")
    p.add_argument("--delta", type=float, default=None, help="output compression (default: smallest input)")
    p.add_argument("--encoding", choices=["full", "compact"], default="full")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("bench-accuracy", help="quantile error against exact quantiles")
    _bench_flags(p)
    p.set_defaults(func=cmd_bench_accuracy)

    p = sub.add_parser("bench-size", help="error and size over a sweep of delta")
    _bench_flags(p)
    p.add_argument("--encoding", choices=["full", "compact"], default="full")
    p.set_defaults(func=cmd_bench_size)

    p = sub.add_parser("bench-overlap", help="ordering offset under two merge policies")
    _bench_flags(p)
    p.set_defaults(func=cmd_bench_overlap)

    p = sub.add_parser("bench-parallel", help="direct build versus parallel merges")
    _bench_flags(p)
    p.add_argument("--ways", default="5,20,100", help="comma-separated partition counts")
    p.set_defaults(func=cmd_bench_parallel)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (UsageError, ConfigurationError) as exc:
        print(f"tdigest: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CodecError as exc:
        print(f"tdigest: format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (DataError, TDigestError, ValueError) as exc:
        print(f"tdigest: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
