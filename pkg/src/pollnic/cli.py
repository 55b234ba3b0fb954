"""Command-line entry points.

Exit codes: 0 success, 1 runtime failure, 2 usage error.

    pollnic fwd   --dev-a model:0 --dev-b model:1 [--batch N] [--ring N]
                  [--secs N] [--touch-offset N]
    pollnic gen   --dev model:0 (--count N | --rate PPS) [--size N] [--seed S]
    pollnic dump  --dev model:0
    pollnic bench sweep    --sizes 1,2,4,...,256 --out sweep.csv
    pollnic bench latency  --pps N --secs S --out lat.csv [--samples-out h.csv]
    pollnic bench overflow --out ovf.csv [--batch N] [--control]
    pollnic bench kernels  --out kernels.csv

The benchmark RNG seed comes from the POLLNIC_SEED environment variable.
"""

from __future__ import annotations

import argparse
import sys

from . import bench
from .apps import ForwarderConfig, GeneratorConfig, dump_device, run_forwarder, run_generator
from .errors import PollnicError


def _parse_sizes(raw: str) -> list[int]:
    try:
        return [int(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad size list {raw!r}") from e


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pollnic",
                                description="user-space poll-mode NIC driver tools")
    sub = p.add_subparsers(dest="cmd", required=True)

    fwd = sub.add_parser("fwd", help="bidirectional forwarder")
    fwd.add_argument("--dev-a", required=True)
    fwd.add_argument("--dev-b", required=True)
    fwd.add_argument("--batch", type=int, default=32)
    fwd.add_argument("--ring", type=int, default=512)
    fwd.add_argument("--secs", type=float, default=2.0)
    fwd.add_argument("--touch-offset", type=int, default=48)

    gen = sub.add_parser("gen", help="seeded packet generator")
    gen.add_argument("--dev", required=True)
    load = gen.add_mutually_exclusive_group(required=True)
    load.add_argument("--count", type=int)
    load.add_argument("--rate", type=float, help="packets per second")
    gen.add_argument("--size", type=int, default=60)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--gen-secs", type=float, default=2.0,
                     help="duration when driven by --rate")

    dump = sub.add_parser("dump", help="device register/stats snapshot")
    dump.add_argument("--dev", required=True)

    b = sub.add_parser("bench", help="benchmark harness (model backend)")
    bsub = b.add_subparsers(dest="bench_cmd", required=True)

    sw = bsub.add_parser("sweep", help="batch-size sweep at saturating load")
    sw.add_argument("--sizes", type=_parse_sizes, default=_parse_sizes(
        "1,2,4,8,16,32,64,128,256"))
    sw.add_argument("--pkts", type=int, default=50_000, help="frames per size")
    sw.add_argument("--ring", type=int, default=512)
    sw.add_argument("--out", required=True)

    lat = bsub.add_parser("latency", help="fixed-rate latency distribution")
    lat.add_argument("--pps", type=float, required=True)
    lat.add_argument("--secs", type=float, required=True)
    lat.add_argument("--batch", type=int, default=32)
    lat.add_argument("--out", required=True)
    lat.add_argument("--samples-out", help="also write a latency histogram CSV")

    ovf = bsub.add_parser("overflow", help="checked-arithmetic cost")
    ovf.add_argument("--batch", type=int, default=8)
    ovf.add_argument("--pkts", type=int, default=60_000)
    ovf.add_argument("--trials", type=int, default=5)
    ovf.add_argument("--control", action="store_true",
                     help="run the guarded build on both sides (delta 0)")
    ovf.add_argument("--out", required=True)

    kn = bsub.add_parser("kernels", help="compare numba and numpy kernel paths")
    kn.add_argument("--pkts", type=int, default=60_000)
    kn.add_argument("--batch", type=int, default=32)
    kn.add_argument("--out", required=True)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "fwd":
            cfg = ForwarderConfig(dev_a=args.dev_a, dev_b=args.dev_b,
                                  batch_size=args.batch, ring_size=args.ring,
                                  duration=args.secs,
                                  touch_offset=args.touch_offset)
            summary = run_forwarder(cfg)
            print(f"forwarded a->b: {summary['tx_b']}  b->a: {summary['tx_a']}  "
                  f"app drops: {summary['app_drops']}")
        elif args.cmd == "gen":
            count = args.count
            if count is None:
                count = int(args.rate * args.gen_secs)
            cfg = GeneratorConfig(dev=args.dev, count=count,
                                  rate_pps=args.rate, frame_size=args.size,
                                  seed=args.seed)
            print(f"sent {run_generator(cfg)}")
        elif args.cmd == "dump":
            print(dump_device(args.dev))
        elif args.cmd == "bench":
            _run_bench(args)
    except PollnicError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


def _run_bench(args) -> None:
    if args.bench_cmd == "sweep":
        records = bench.sweep_batches(args.sizes, pkts=args.pkts, ring=args.ring)
        bench.export_csv(records, args.out)
        for r in records:
            print(f"batch {r.batch:>3}: {r.virtual_rate_pps / 1e6:8.2f} Mpps, "
                  f"{r.tail_writes / max(r.forwarded, 1):.4f} tail writes/pkt")
        print(f"wrote {args.out}")
    elif args.bench_cmd == "latency":
        record, dist = bench.measure_latency(args.pps, args.secs, batch=args.batch)
        bench.export_csv([record], args.out)
        if args.samples_out:
            bench.export_latency_histogram(dist, args.samples_out)
        print(f"p50={record.p50} p99={record.p99} p99.9999={record.p999999} "
              f"max={record.max} ticks; wrote {args.out}")
    elif args.bench_cmd == "overflow":
        result = bench.overflow_cost(batch=args.batch, pkts=args.pkts,
                                     trials=args.trials, control=args.control)
        bench.export_overflow_csv(result, args.out)
        note = " (noise, clamped)" if result["noise_clamped"] else ""
        print(f"checked-arithmetic cost at batch {result['batch']}: "
              f"{result['delta'] * 100:.2f}%{note}; wrote {args.out}")
    elif args.bench_cmd == "kernels":
        rows = bench.compare_kernel_modes(pkts=args.pkts, batch=args.batch)
        bench.export_kernel_csv(rows, args.out)
        for r in rows:
            print(f"{r['mode']:>6}: {r['mpps']:.3f} Mpps")
        print(f"wrote {args.out}")


if __name__ == "__main__":
    raise SystemExit(main())
