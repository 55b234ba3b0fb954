"""Benchmark harness over the software NIC pair.

Runs are discrete-event simulations in virtual time: the event loop charges
one pump quantum per turn, every register access and descriptor transaction
charges its own cost, and packet latency is capture tick minus scheduled
arrival tick.  Results are therefore machine-independent and bit-identical
for a given seed; wall-clock timings are collected alongside for the
kernel-mode and checked-arithmetic comparisons, where real CPU cost is the
measurand.

Scenarios: batch-size sweeps under saturating load, fixed-rate latency
runs (sustainable or not; an overloaded run reports ring-full latencies),
checked-arithmetic cost, and numba-vs-numpy kernel comparison.
"""

from __future__ import annotations

import logging
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import regs as R
from .apps import (DEFAULT_TOUCH_OFFSET, SEQ_OFFSET, ForwardCounters,
                   build_frame_template, forward_direction)
from .errors import PollnicError
from .ixgbe import IxgbeDevice
from .kernels import available_modes, get_kernels, warmup
from .mempool import default_pool_capacity
from .model import ModelNic
from .model.clock import CostModel
from .model.nic import CTR_MPC
from .platform import ModelHost, open_device

log = logging.getLogger(__name__)

SEED_ENV = "POLLNIC_SEED"

CSV_HEADER = ("scenario,batch,ring,offered_pps,secs,forwarded,dev_drops,"
              "app_drops,p50,p90,p99,p999,p9999,p99999,p999999,max,unit")
PERCENTILES = (50.0, 90.0, 99.0, 99.9, 99.99, 99.999, 99.9999)

TICKS_PER_SEC = 1_000_000_000


def env_seed(default: int = 0) -> int:
    raw = os.environ.get(SEED_ENV, "").strip()
    return int(raw) if raw else default


class LatencyDistribution:
    """Sorted per-packet latency samples with nearest-rank percentiles."""

    def __init__(self, samples):
        arr = np.asarray(samples, dtype=np.int64)
        self.samples = np.sort(arr)

    def __len__(self):
        return int(self.samples.shape[0])

    def percentile(self, q: float) -> int:
        """Nearest-rank percentile: the ceil(q/100 * n)-th smallest sample."""
        n = self.samples.shape[0]
        if n == 0:
            raise PollnicError("percentile of an empty distribution")
        if not 0 < q <= 100:
            raise ValueError("percentile must be in (0, 100]")
        k = math.ceil(q / 100 * n)
        return int(self.samples[max(k, 1) - 1])

    @property
    def max(self) -> int:
        if self.samples.shape[0] == 0:
            raise PollnicError("max of an empty distribution")
        return int(self.samples[-1])

    def ccdf(self):
        """Empirical complementary CDF as (value, P(latency > value)) points."""
        n = self.samples.shape[0]
        if n == 0:
            raise PollnicError("CCDF of an empty distribution")
        values, counts = np.unique(self.samples, return_counts=True)
        above = n - np.cumsum(counts)
        return values, above / n

    def histogram(self):
        """(value, count) pairs; compact exact representation for export."""
        values, counts = np.unique(self.samples, return_counts=True)
        return values, counts


@dataclass
class BenchRecord:
    """One benchmark sample; the CSV schema is the first 16 fields."""

    scenario: str
    batch: int
    ring: int
    offered_pps: float
    secs: float
    forwarded: int
    dev_drops: int
    app_drops: int
    p50: int
    p90: int
    p99: int
    p999: int
    p9999: int
    p99999: int
    p999999: int
    max: int
    unit: str = "ticks"
    # bookkeeping beyond the CSV schema
    injected: int = 0
    tail_writes: int = 0
    virtual_rate_pps: float = 0.0
    wall_secs: float = 0.0

    def csv_row(self) -> str:
        return (f"{self.scenario},{self.batch},{self.ring},"
                f"{self.offered_pps:.3f},{self.secs:.6f},{self.forwarded},"
                f"{self.dev_drops},{self.app_drops},{self.p50},{self.p90},"
                f"{self.p99},{self.p999},{self.p9999},{self.p99999},"
                f"{self.p999999},{self.max},{self.unit}")


def export_csv(records, path) -> None:
    """Deterministic export: fixed column order and formats, LF newlines."""
    with open(path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for rec in records:
            fh.write(rec.csv_row() + "\n")


def export_latency_histogram(dist: LatencyDistribution, path) -> None:
    values, counts = dist.histogram()
    with open(path, "w", newline="\n") as fh:
        fh.write("latency_ticks,count\n")
        for v, c in zip(values.tolist(), counts.tolist()):
            fh.write(f"{v},{c}\n")


# ---------------------------------------------------------------------------
# deterministic forwarding scenario


@dataclass
class ScenarioConfig:
    scenario_id: str = "fwd"
    batch: int = 32
    ring: int = 512
    frame_size: int = 60
    pkts: int = 100_000
    pps: float | None = None  # None = saturating load
    fill_target: int | None = None  # wire backlog kept by the saturating injector
    seed: int = 0
    touch_offset: int = DEFAULT_TOUCH_OFFSET
    checked: bool = True
    kernel_mode: str | None = None
    drop_on_full: bool = True
    pool_capacity: int | None = None
    entry_size: int = 2048
    fifo_capacity: int = 4096
    pump_budget: int | None = None
    capture_pump_budget: int | None = None  # throttle the egress side
    cost: CostModel = field(default_factory=CostModel)
    track_outstanding: bool = False
    keep_frames: bool = False


@dataclass
class ScenarioResult:
    cfg: ScenarioConfig
    injected: int
    forwarded: int
    dev_drops: int       # receive-ring-full discards plus wire tail-drops
    ring_drops: int
    wire_drops: int
    app_drops: int
    duration_ticks: int
    wall_secs: float
    latencies: np.ndarray
    tail_writes: int
    iterations: int
    max_outstanding: int
    frames: tuple | None  # (flat, off, len) when keep_frames

    def conservation_holds(self) -> bool:
        return self.injected == (self.forwarded + self.ring_drops
                                 + self.wire_drops + self.app_drops)

    def to_record(self) -> BenchRecord:
        secs = self.duration_ticks / TICKS_PER_SEC
        dist = LatencyDistribution(self.latencies)
        if len(dist):
            ps = [dist.percentile(q) for q in PERCENTILES]
            mx = dist.max
        else:
            ps = [0] * len(PERCENTILES)
            mx = 0
        offered = self.injected / secs if secs > 0 else 0.0
        rate = self.forwarded / secs if secs > 0 else 0.0
        return BenchRecord(
            self.cfg.scenario_id, self.cfg.batch, self.cfg.ring,
            offered, secs, self.forwarded, self.dev_drops, self.app_drops,
            *ps, mx,
            injected=self.injected, tail_writes=self.tail_writes,
            virtual_rate_pps=rate, wall_secs=self.wall_secs)


def _unwrap_seq16(seq16: np.ndarray) -> np.ndarray:
    """Reconstruct full indices from in-order 16-bit sequence numbers."""
    if seq16.shape[0] == 0:
        return seq16.astype(np.int64)
    s = seq16.astype(np.int64)
    steps = np.diff(s) % 65536
    return np.concatenate(([s[0]], s[0] + np.cumsum(steps)))


def run_forward_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    """Inject -> forward A-to-B -> capture, entirely in virtual time.

    The loop per turn: charge the pump quantum, feed due frames onto A's
    wire, pump A's engines, run one bidirectional forwarder iteration, pump
    B's engines.  After the schedule is exhausted the pipeline drains until
    every injected frame is accounted for as captured or dropped.
    """
    ks = get_kernels(cfg.kernel_mode)
    pool_cap = cfg.pool_capacity or default_pool_capacity(cfg.ring)
    arena_need = 2 * pool_cap * cfg.entry_size + 4 * cfg.ring * R.DESC_BYTES
    host = ModelHost(arena_bytes=arena_need + (8 << 20), cost=cfg.cost)
    nic_a = ModelNic(host, seed=cfg.seed, fifo_capacity=cfg.fifo_capacity, kernels=ks)
    nic_b = ModelNic(host, seed=cfg.seed, fifo_capacity=cfg.fifo_capacity, kernels=ks)
    nic_a.capture_enabled = False  # nothing transmits toward A's wire
    dev_a = IxgbeDevice(open_device(nic_a.name, host), ring_size=cfg.ring,
                        pool_capacity=pool_cap, entry_size=cfg.entry_size,
                        checked=cfg.checked, drop_on_full=cfg.drop_on_full,
                        kernels=ks)
    dev_b = IxgbeDevice(open_device(nic_b.name, host), ring_size=cfg.ring,
                        pool_capacity=pool_cap, entry_size=cfg.entry_size,
                        checked=cfg.checked, drop_on_full=cfg.drop_on_full,
                        kernels=ks)
    pool_a = dev_a.rx_queues[0].pool
    pool_b = dev_b.rx_queues[0].pool

    template = build_frame_template(cfg.frame_size, cfg.seed, dst_mac=nic_a.mac)
    total = cfg.pkts
    inj_ts = np.zeros(max(total, 1), dtype=np.int64)
    interval = max(1, round(TICKS_PER_SEC / cfg.pps)) if cfg.pps else 0
    budget = cfg.pump_budget or max(64, 2 * cfg.batch)
    b_budget = cfg.capture_pump_budget or budget
    # keep exactly one batch queued on the wire: every receive batch runs
    # full without overrunning the ring (overload comes from rate mode or
    # an explicit larger fill_target)
    fill_target = min(cfg.fifo_capacity,
                      cfg.fill_target if cfg.fill_target else cfg.batch)

    tail_offsets = (R.RDT(0), R.TDT(0))
    before = (sum(nic_a.access_counts_for(o)[1] for o in tail_offsets)
              + sum(nic_b.access_counts_for(o)[1] for o in tail_offsets))
    ctrs = ForwardCounters()
    clock = host.clock
    start_tick = clock.now
    sched_base = clock.now + cfg.cost.pump_ns
    next_i = 0
    wire_dropped = 0
    iterations = 0
    max_outstanding = 0
    iteration_limit = 40 * max(total, 1) + 100_000

    t_wall = time.perf_counter()
    while True:
        clock.tick_pump()
        injected_before = next_i
        if next_i < total:
            if interval:
                (nic_a.fifo_tail, nic_a.fifo_count, next_i, wd) = ks.inject_due(
                    nic_a.fifo_buf, nic_a.fifo_len, nic_a.fifo_ts,
                    nic_a.fifo_tail, nic_a.fifo_count, nic_a.fifo_cap,
                    template, cfg.frame_size, SEQ_OFFSET, next_i, total,
                    sched_base, interval, clock.now, inj_ts)
                wire_dropped += int(wd)
            else:
                (nic_a.fifo_tail, nic_a.fifo_count, next_i) = ks.inject_fill(
                    nic_a.fifo_buf, nic_a.fifo_len, nic_a.fifo_ts,
                    nic_a.fifo_tail, nic_a.fifo_count, nic_a.fifo_cap,
                    template, cfg.frame_size, SEQ_OFFSET, next_i, total,
                    fill_target, clock.now, inj_ts)
            next_i = int(next_i)
            nic_a.fifo_tail = int(nic_a.fifo_tail)
            nic_a.fifo_count = int(nic_a.fifo_count)
        activity = next_i - injected_before
        activity += nic_a.step(budget)
        activity += forward_direction(dev_a, dev_b, cfg.batch,
                                      cfg.touch_offset, ctrs, True)
        activity += forward_direction(dev_b, dev_a, cfg.batch,
                                      cfg.touch_offset, ctrs, False)
        activity += nic_b.step(b_budget)
        iterations += 1
        if cfg.track_outstanding:
            out_now = max(pool_a.outstanding, pool_b.outstanding)
            if out_now > max_outstanding:
                max_outstanding = out_now
        if next_i >= total:
            accounted = (nic_b.captured_count + int(nic_a.ctrs[CTR_MPC])
                         + wire_dropped + ctrs.app_drops + nic_a.filtered_total)
            if accounted >= total:
                break
        elif activity == 0:
            # fully idle turn: fast-forward to just before the next arrival
            due_next = sched_base + next_i * interval
            jump = due_next - cfg.cost.pump_ns
            if jump > clock.now:
                clock.now = jump
        if iterations > iteration_limit:
            raise PollnicError(
                f"scenario failed to drain: {nic_b.captured_count} of {total} "
                f"captured after {iterations} iterations"
            )
    wall = time.perf_counter() - t_wall

    after = (sum(nic_a.access_counts_for(o)[1] for o in tail_offsets)
             + sum(nic_b.access_counts_for(o)[1] for o in tail_offsets))
    flat, off, lens, ts = nic_b.capture_arrays()
    if off.shape[0]:
        seq16 = (flat[off + SEQ_OFFSET].astype(np.int64)
                 | (flat[off + SEQ_OFFSET + 1].astype(np.int64) << 8))
        full = _unwrap_seq16(seq16)
        latencies = ts - inj_ts[full]
    else:
        latencies = np.zeros(0, dtype=np.int64)

    return ScenarioResult(
        cfg=cfg,
        injected=next_i,
        forwarded=int(off.shape[0]),
        dev_drops=int(nic_a.ctrs[CTR_MPC]) + wire_dropped + nic_a.filtered_total,
        ring_drops=int(nic_a.ctrs[CTR_MPC]) + nic_a.filtered_total,
        wire_drops=wire_dropped,
        app_drops=ctrs.app_drops,
        duration_ticks=clock.now - start_tick,
        wall_secs=wall,
        latencies=latencies,
        tail_writes=after - before,
        iterations=iterations,
        max_outstanding=max_outstanding if cfg.track_outstanding else -1,
        frames=(flat, off, lens) if cfg.keep_frames else None,
    )


# ---------------------------------------------------------------------------
# benchmark entry points


def sweep_batches(sizes, pkts: int = 50_000, ring: int = 512,
                  seed: int | None = None, kernel_mode: str | None = None,
                  scenario_id: str = "sweep") -> list[BenchRecord]:
    """One saturating-load record per batch size (duplicates dropped)."""
    seen = set()
    uniq = []
    for s in sizes:
        if not 1 <= s <= 256:
            raise ValueError(f"batch size {s} outside 1..256")
        if s in seen:
            log.warning("duplicate batch size %d ignored", s)
            continue
        seen.add(s)
        uniq.append(s)
    seed = env_seed() if seed is None else seed
    records = []
    for s in uniq:
        cfg = ScenarioConfig(scenario_id=scenario_id, batch=s, ring=ring,
                             pkts=pkts, pps=None, seed=seed,
                             kernel_mode=kernel_mode)
        records.append(run_forward_scenario(cfg).to_record())
    return records


def measure_latency(pps: float, secs: float, batch: int = 32, ring: int = 512,
                    seed: int | None = None, kernel_mode: str | None = None,
                    scenario_id: str = "latency"):
    """Fixed-rate run; returns (record, distribution).

    Offered loads beyond capacity are valid: the receive ring runs full and
    the distribution reports the resulting buffering delay.
    """
    if pps <= 0 or secs <= 0:
        raise ValueError("rate and duration must be positive")
    seed = env_seed() if seed is None else seed
    cfg = ScenarioConfig(scenario_id=scenario_id, batch=batch, ring=ring,
                         pkts=int(pps * secs), pps=pps, seed=seed,
                         kernel_mode=kernel_mode)
    result = run_forward_scenario(cfg)
    return result.to_record(), LatencyDistribution(result.latencies)


def overflow_cost(batch: int = 8, pkts: int = 60_000, trials: int = 5,
                  control: bool = False, seed: int | None = None,
                  kernel_mode: str | None = None) -> dict:
    """Relative throughput cost of the checked-arithmetic guards.

    Trials interleave guards-on and guards-off runs and each side reports
    its best rate: scheduling noise only ever slows a run down, so the
    per-side maximum converges on the true throughput and the delta on the
    true cost.  With `control` set both sides run the guarded build, so
    the delta is 0 by construction (harness sanity check).  A negative
    delta is measurement noise: it is clamped to 0 and annotated.
    """
    seed = env_seed() if seed is None else seed
    warmup(get_kernels(kernel_mode))

    def one_run(checked: bool, t: int) -> float:
        cfg = ScenarioConfig(scenario_id="overflow", batch=batch,
                             pkts=pkts, pps=None, seed=seed + t,
                             checked=checked, kernel_mode=kernel_mode)
        r = run_forward_scenario(cfg)
        return r.forwarded / r.wall_secs

    one_run(True, 0)  # throwaway: pay allocator/cache warmup once
    on_rates, off_rates = [], []
    for t in range(trials):
        on_rates.append(one_run(True, t))
        off_rates.append(on_rates[-1] if control else one_run(False, t))
    result = compute_overflow_delta(max(on_rates), max(off_rates))
    result["batch"] = batch
    result["control"] = control
    return result


def compute_overflow_delta(rate_checked: float, rate_unchecked: float) -> dict:
    """delta = (off - on) / off; negative values are noise, clamped to 0."""
    raw = (rate_unchecked - rate_checked) / rate_unchecked
    noise = raw < 0
    return {
        "rate_checked_pps": rate_checked,
        "rate_unchecked_pps": rate_unchecked,
        "delta": 0.0 if noise else raw,
        "raw_delta": raw,
        "noise_clamped": noise,
    }


def export_overflow_csv(result: dict, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("batch,rate_checked_pps,rate_unchecked_pps,delta,raw_delta,"
                 "noise_clamped,control\n")
        fh.write(f"{result['batch']},{result['rate_checked_pps']:.1f},"
                 f"{result['rate_unchecked_pps']:.1f},{result['delta']:.6f},"
                 f"{result['raw_delta']:.6f},{int(result['noise_clamped'])},"
                 f"{int(result['control'])}\n")


def compare_kernel_modes(pkts: int = 60_000, batch: int = 32,
                         seed: int | None = None) -> list[dict]:
    """Wall-clock forwarding rate of each available kernel mode."""
    seed = env_seed() if seed is None else seed
    rows = []
    for mode in available_modes():
        warmup(get_kernels(mode))
        cfg = ScenarioConfig(scenario_id=f"kernels-{mode}", batch=batch,
                             pkts=pkts, pps=None, seed=seed, kernel_mode=mode)
        r = run_forward_scenario(cfg)
        rows.append({
            "mode": mode,
            "pkts": r.forwarded,
            "wall_secs": r.wall_secs,
            "mpps": r.forwarded / r.wall_secs / 1e6,
        })
    return rows


def export_kernel_csv(rows, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("mode,pkts,wall_secs,mpps\n")
        for r in rows:
            fh.write(f"{r['mode']},{r['pkts']},{r['wall_secs']:.4f},"
                     f"{r['mpps']:.4f}\n")
