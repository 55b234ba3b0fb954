"""Executable entry points: bidirectional forwarder, packet generator, dump.

The forwarder moves batches between two ports, incrementing one byte per
packet as proof of payload work.  That increment is the single deliberately
wrapping operation in the datapath (255 rolls over to 0); everything else
uses checked or explicitly modular arithmetic -- see `decrement_ttl` for
the checked style applications are expected to use on header fields.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field

import numpy as np

from . import regs as R
from .errors import CheckedArithmeticError, FrameSizeError
from .ixgbe import IxgbeDevice
from .platform import DeviceHandle, default_host, open_device

# Where the generator stamps its 16-bit little-endian sequence number.
SEQ_OFFSET = 54
DEFAULT_TOUCH_OFFSET = 48
MAX_BATCH = 256


def decrement_ttl(value: int) -> int:
    """Checked decrement for time-to-live-style header fields.

    A zero field is an error to report, not a wrap to 255.
    """
    if value == 0:
        raise CheckedArithmeticError("decrement of a zero time-to-live field")
    if not 0 < value <= 255:
        raise CheckedArithmeticError(f"time-to-live {value} outside 1..255")
    return value - 1


def touch_packets(bufs, offset: int) -> None:
    """Increment one payload byte in each buffer (wraps 255 -> 0 by design)."""
    if not bufs:
        return
    pool = bufs[0].pool  # an rx batch always comes from one queue's pool
    idxs = np.fromiter((b.index for b in bufs), dtype=np.int64, count=len(bufs))
    pool.mem2d[idxs, offset] += 1


@dataclass
class ForwardCounters:
    rx_a: int = 0
    tx_a: int = 0
    rx_b: int = 0
    tx_b: int = 0
    app_drops: int = 0


def forward_direction(src: IxgbeDevice, dst: IxgbeDevice, batch: int,
                      touch_offset: int, ctrs: ForwardCounters,
                      a_to_b: bool) -> int:
    """One rx->touch->tx hop; frames the tx ring refuses are freed and counted."""
    bufs = src.rx_batch(0, batch)
    if not bufs:
        return 0
    touch_packets(bufs, touch_offset)
    sent = dst.tx_batch(0, bufs)
    for b in bufs[sent:]:
        b.pool.free(b)
    dropped = len(bufs) - sent
    ctrs.app_drops += dropped
    if a_to_b:
        ctrs.rx_a += len(bufs)
        ctrs.tx_b += sent
    else:
        ctrs.rx_b += len(bufs)
        ctrs.tx_a += sent
    return len(bufs)


@dataclass
class ForwarderConfig:
    dev_a: str = "model:0"
    dev_b: str = "model:1"
    batch_size: int = 32
    ring_size: int = 512
    duration: float = 2.0
    stats_interval: float = 1.0
    touch_offset: int = DEFAULT_TOUCH_OFFSET

    def validate(self) -> None:
        if not 1 <= self.batch_size <= MAX_BATCH:
            raise ValueError(f"batch size must be within 1..{MAX_BATCH}")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if not 0 <= self.touch_offset < R.MIN_FRAME:
            raise ValueError("touch offset must fall inside a minimum frame")


class ModelPump:
    """Background thread driving the DMA engines of model-backed devices.

    The datapath thread never prints and the pump never parses: statistics
    output cannot stall the engines for more than the batch in flight.
    """

    def __init__(self, nics, budget: int = 256):
        self.nics = nics
        self.budget = budget
        self.iterations = 0
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)

    def _run(self):
        while not self._stop.is_set():
            for nic in self.nics:
                nic.step(self.budget)
            self.iterations += 1
            time.sleep(0)

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._stop.set()
        self._thread.join(timeout=5.0)


def _open_for_cli(spec: str) -> DeviceHandle:
    """Open a device spec, creating model NICs in the default host on demand."""
    if spec.startswith("model:"):
        from .model import ModelNic

        host = default_host()
        try:
            want = int(spec.split(":", 1)[1])
        except ValueError as e:
            raise ValueError(f"bad model device spec {spec!r}") from e
        while len(host.nics) <= want:
            ModelNic(host)
        return open_device(spec, host)
    return open_device(spec)


def format_stats_line(name: str, rx_pps: float, rx_bps: float,
                      tx_pps: float, tx_bps: float) -> str:
    return (f"[{name}] RX: {rx_pps / 1e6:.2f} Mpps, {rx_bps * 8 / 1e6:.0f} Mbit/s"
            f" | TX: {tx_pps / 1e6:.2f} Mpps, {tx_bps * 8 / 1e6:.0f} Mbit/s")


def run_forwarder(cfg: ForwarderConfig, out=None) -> dict:
    """Wall-clock forwarder loop with 1 Hz statistics printing.

    Returns a per-direction summary; never aborts on empty batches.
    """
    cfg.validate()
    emit = print if out is None else (lambda s: out.write(s + "\n"))
    ha = _open_for_cli(cfg.dev_a)
    hb = _open_for_cli(cfg.dev_b)
    dev_a = IxgbeDevice(ha, ring_size=cfg.ring_size)
    dev_b = IxgbeDevice(hb, ring_size=cfg.ring_size)
    ctrs = ForwardCounters()
    stats_lines = 0
    pump_nics = [h.nic for h in (ha, hb) if h.backend == "model"]
    pump = ModelPump(pump_nics) if pump_nics else None
    start = time.monotonic()
    next_stats = start + cfg.stats_interval
    deadline = start + cfg.duration
    try:
        if pump:
            pump.__enter__()
        while True:
            now = time.monotonic()
            if now >= deadline:
                break
            forward_direction(dev_a, dev_b, cfg.batch_size, cfg.touch_offset,
                              ctrs, a_to_b=True)
            forward_direction(dev_b, dev_a, cfg.batch_size, cfg.touch_offset,
                              ctrs, a_to_b=False)
            if now >= next_stats:
                interval = cfg.stats_interval
                for name, dev in ((cfg.dev_a, dev_a), (cfg.dev_b, dev_b)):
                    d = dev.read_stats()
                    emit(format_stats_line(name, d.rx_packets / interval,
                                           d.rx_bytes / interval,
                                           d.tx_packets / interval,
                                           d.tx_bytes / interval))
                stats_lines += len((cfg.dev_a, cfg.dev_b))
                next_stats += cfg.stats_interval
    finally:
        if pump:
            pump.__exit__()
        dev_a.tx_flush(0)
        dev_b.tx_flush(0)
    return {
        "rx_a": ctrs.rx_a, "tx_a": ctrs.tx_a,
        "rx_b": ctrs.rx_b, "tx_b": ctrs.tx_b,
        "app_drops": ctrs.app_drops,
        "stats_lines": stats_lines,
        "pump_iterations": pump.iterations if pump else 0,
        "secs": time.monotonic() - start,
    }


# ---------------------------------------------------------------------------
# packet generator


def build_frame_template(size: int, seed: int,
                         dst_mac: bytes = b"\xff\xff\xff\xff\xff\xff") -> np.ndarray:
    """Deterministic test frame: Ethernet header plus seeded payload.

    Bytes at SEQ_OFFSET..SEQ_OFFSET+1 are reserved for the per-frame
    sequence number.
    """
    if size < R.MIN_FRAME or size > R.MAX_FRAME:
        raise FrameSizeError(f"frame size {size} outside [{R.MIN_FRAME}, {R.MAX_FRAME}]")
    rng = np.random.default_rng(seed)
    frame = rng.integers(0, 256, size=size, dtype=np.int64).astype(np.uint8)
    frame[0:6] = memoryview(dst_mac)
    frame[6:12] = memoryview(bytes([0x02, 0x50, 0x00, 0x00, 0x00, 0xFE]))
    frame[12:14] = (0x08, 0x00)
    frame[SEQ_OFFSET:SEQ_OFFSET + 2] = 0
    return frame


@dataclass
class GeneratorConfig:
    dev: str = "model:0"
    count: int = 1000
    rate_pps: float | None = None
    frame_size: int = 60
    seed: int = 0
    batch_size: int = 32


def run_generator(cfg: GeneratorConfig) -> int:
    """Transmit `count` seeded frames with embedded sequence numbers."""
    template = build_frame_template(cfg.frame_size, cfg.seed)
    handle = _open_for_cli(cfg.dev)
    dev = IxgbeDevice(handle)
    pump_nics = [handle.nic] if handle.backend == "model" else []
    sent = 0
    interval = 1.0 / cfg.rate_pps if cfg.rate_pps else 0.0
    next_send = time.monotonic()
    with ModelPump(pump_nics) if pump_nics else _null_ctx():
        while sent < cfg.count:
            n = min(cfg.batch_size, cfg.count - sent)
            pool = dev.rx_queues[0].pool
            bufs = pool.alloc_batch(n)
            if not bufs:
                dev.tx_flush(0)
                time.sleep(0)
                continue
            idxs = np.fromiter((b.index for b in bufs), np.int64, len(bufs))
            pool.mem2d[idxs, :cfg.frame_size] = template
            nums = np.arange(sent, sent + len(bufs))
            pool.mem2d[idxs, SEQ_OFFSET] = (nums & 0xFF).astype(np.uint8)
            pool.mem2d[idxs, SEQ_OFFSET + 1] = ((nums >> 8) & 0xFF).astype(np.uint8)
            for b in bufs:
                b.used_length = cfg.frame_size
            if interval:
                next_send += interval * len(bufs)
                lag = next_send - time.monotonic()
                if lag > 0:
                    time.sleep(lag)
            accepted = dev.tx_batch(0, bufs)
            for b in bufs[accepted:]:
                pool.free(b)
            sent += accepted
        while dev.tx_queues[0].held():  # drain: everything queued hits the wire
            dev.tx_flush(0)
            time.sleep(0)
    dev.read_stats()
    return sent


class _null_ctx:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


# ---------------------------------------------------------------------------
# device dump


def dump_report(dev: IxgbeDevice, name: str) -> str:
    """Render the snapshot for an already-initialized device.

    Reading drains the hardware's read-clear counters into the device
    totals, which is what gets printed; the report says so.
    """
    dev.read_stats()
    stats = dev.stats
    mac = dev.mac_address()
    lines = [
        f"device {name} ({dev.handle.backend} backend)",
        f"  mac        {':'.join(f'{b:02x}' for b in mac)}",
        f"  link       {dev.get_link_speed()} Mbit/s",
        f"  ring size  {dev.ring_size} rx / {dev.ring_size} tx",
        "  totals (read-clear hardware counters now consumed):",
        f"    rx_packets {stats.rx_packets}",
        f"    tx_packets {stats.tx_packets}",
        f"    rx_bytes   {stats.rx_bytes}",
        f"    tx_bytes   {stats.tx_bytes}",
    ]
    return "\n".join(lines)


def dump_device(spec: str, out=None) -> str:
    """Open a device and print its register/stats/link snapshot."""
    handle = _open_for_cli(spec)
    dev = IxgbeDevice(handle)
    report = dump_report(dev, spec)
    if out is not None:
        out.write(report + "\n")
    dev.close()
    return report
