"""Deterministic software model of an ixgbe-like NIC.

One ModelNic is a register file with per-register behavior, a descriptor-
ring DMA engine (receive write-back and transmit completion with done bits),
statistics counters, and a packet link endpoint.  Two NICs on the same host
can be wired back to back; a test harness injects frames into a NIC's link
queue and captures what the NIC puts on the wire.

Everything is explicit and seeded: the model only makes progress when
`step` is called, every register access lands in an ordered log, and with a
fixed seed and input schedule all observable behavior is bit-identical
across runs.  DMA is validated against the host's region table on every
descriptor; a stray address is a loud fault, never silent corruption.

The register subset modeled is exactly what a minimal poll-mode driver
touches; anything else behaves as plain storage that reads as written
(initially 0) and warns once.
"""

from __future__ import annotations

import logging
import threading

import numpy as np

from .. import regs as R
from ..errors import FrameSizeError, ModelFault
from ..kernels import get_kernels
from . import behaviors

log = logging.getLogger(__name__)

# counter array layout shared with the kernels
CTR_GPRC, CTR_GORC, CTR_GPTC, CTR_GOTC, CTR_MPC = range(5)

KNOWN_OFFSETS = frozenset(
    [
        R.CTRL, R.STATUS, R.EEC, R.RDRXCTL, R.AUTOC, R.LINKS,
        R.RXCTRL, R.RXPBSIZE0, R.FCTRL, R.HLREG0, R.DMATXCTL,
        R.RAL0, R.RAH0,
        R.GPRC, R.GPTC, R.GORCL, R.GORCH, R.GOTCL, R.GOTCH, R.MPC0,
    ]
    + [f(0) for f in (R.RDBAL, R.RDBAH, R.RDLEN, R.RDH, R.SRRCTL, R.RDT,
                      R.RXDCTL, R.TDBAL, R.TDBAH, R.TDLEN, R.TDH, R.TDT,
                      R.TXDCTL)]
)

_CAP_CHUNK_FRAMES = 1 << 16
_CAP_CHUNK_BYTES = 8 << 20


class ModelNic:
    """Software NIC attached to a :class:`~pollnic.platform.ModelHost`."""

    BAR_LEN = R.BAR0_LEN
    QUEUE_COUNT = 1  # single rx and tx queue; the driver API keeps indices

    def __init__(self, host, seed: int = 0, fifo_capacity: int = 4096,
                 frame_capacity: int = R.MAX_FRAME, kernels=None):
        self.host = host
        self.name = host.register_nic(self)
        self.kernels = kernels if kernels is not None else get_kernels()
        self.lock = threading.RLock()
        self.opened = False
        self.seed = seed
        nic_index = int(self.name.split(":")[1])
        # locally administered unicast MAC, unique per (seed, index)
        self.mac = bytes([0x02, 0x50, (seed >> 8) & 0xFF, seed & 0xFF, 0x00, nic_index])
        self.mac_int = int.from_bytes(self.mac, "big")

        self.reg_storage: dict[int, int] = {}
        self.scripts: dict[int, behaviors.Behavior] = {}
        self.access_log: list[tuple[str, int, int]] = []
        self.access_counts: dict[int, list[int]] = {}

        self.ctrs = np.zeros(8, dtype=np.int64)
        self._octet_latch = {}

        self.rx_ring = None
        self.rx_nslots = 0
        self.rdh = 0
        self.tx_ring = None
        self.tx_nslots = 0
        self.tdh = 0

        self.fifo_cap = fifo_capacity
        self.frame_cap = frame_capacity
        self.fifo_buf = np.zeros((fifo_capacity, frame_capacity), dtype=np.uint8)
        self.fifo_len = np.zeros(fifo_capacity, dtype=np.int64)
        self.fifo_ts = np.zeros(fifo_capacity, dtype=np.int64)
        self.fifo_head = 0
        self.fifo_tail = 0
        self.fifo_count = 0

        self.peer: ModelNic | None = None
        self.capture_enabled = True
        self._cap_sealed: list[tuple] = []
        self._new_cap_chunk()

        self.wire_drops = 0        # link queue tail-drops at this endpoint
        self.filtered_total = 0    # frames discarded by address filtering
        self.faulted: str | None = None
        self._warned: set[int] = set()
        self._dummy2d = np.zeros((1, 1), dtype=np.uint8)
        self._dummy1d = np.zeros(1, dtype=np.int64)

        self._apply_reset()

    # ------------------------------------------------------------------ #
    # register file

    def _apply_reset(self) -> None:
        self.reg_storage = {
            R.EEC: R.EEC_ARD,
            R.RDRXCTL: R.RDRXCTL_DMAIDONE,
            R.LINKS: R.LINKS_UP | R.LINKS_SPEED_10G,
            R.STATUS: 0,
            R.RAL0: int.from_bytes(self.mac[0:4], "little"),
            R.RAH0: (1 << 31) | int.from_bytes(self.mac[4:6], "little"),
        }
        self.ctrs[:] = 0
        self._octet_latch = {}
        self.rx_ring = None
        self.rx_nslots = 0
        self.rdh = 0
        self.tx_ring = None
        self.tx_nslots = 0
        self.tdh = 0

    def reg_read32(self, offset: int) -> int:
        with self.lock:
            self.host.clock.tick_mmio()
            value = self._read_value(offset)
            self.access_log.append(("r", offset, value))
            self.access_counts.setdefault(offset, [0, 0])[0] += 1
            return value

    def reg_write32(self, offset: int, value: int) -> None:
        with self.lock:
            self.host.clock.tick_mmio()
            self.access_log.append(("w", offset, value))
            self.access_counts.setdefault(offset, [0, 0])[1] += 1
            self._write_value(offset, value)

    def _read_value(self, offset: int) -> int:
        script = self.scripts.get(offset)
        if script is not None:
            return script.read(self, offset) & 0xFFFFFFFF
        if offset == R.GPRC:
            return self._read_clear_ctr(CTR_GPRC)
        if offset == R.GPTC:
            return self._read_clear_ctr(CTR_GPTC)
        if offset == R.MPC0:
            return self._read_clear_ctr(CTR_MPC)
        if offset == R.GORCL:
            return self._read_octets_low(CTR_GORC)
        if offset == R.GORCH:
            return self._octet_latch.pop(CTR_GORC, 0)
        if offset == R.GOTCL:
            return self._read_octets_low(CTR_GOTC)
        if offset == R.GOTCH:
            return self._octet_latch.pop(CTR_GOTC, 0)
        if offset == R.RDH(0):
            return self.rdh
        if offset == R.TDH(0):
            return self.tdh
        if offset not in KNOWN_OFFSETS and offset not in self.reg_storage:
            self._warn_unknown(offset)
        return self.reg_storage.get(offset, 0)

    def _read_clear_ctr(self, idx: int) -> int:
        v = int(self.ctrs[idx]) & 0xFFFFFFFF
        self.ctrs[idx] = 0
        return v

    def _read_octets_low(self, idx: int) -> int:
        v = int(self.ctrs[idx])
        self.ctrs[idx] = 0
        self._octet_latch[idx] = (v >> 32) & 0xF
        return v & 0xFFFFFFFF

    def _write_value(self, offset: int, value: int) -> None:
        script = self.scripts.get(offset)
        if script is not None:
            script.write(self, offset, value)
            return
        if offset == R.CTRL and value & R.CTRL_RST:
            self._apply_reset()
            self.reg_storage[R.CTRL] = value & ~R.CTRL_RST & 0xFFFFFFFF
            return
        if offset not in KNOWN_OFFSETS and offset not in self.reg_storage:
            self._warn_unknown(offset)
        self.reg_storage[offset] = value
        if offset == R.RXDCTL(0):
            if value & R.RXTX_DCTL_ENABLE:
                self._resolve_rx_ring()
            else:
                self.rx_ring = None
        elif offset == R.TXDCTL(0):
            if value & R.RXTX_DCTL_ENABLE:
                self._resolve_tx_ring()
            else:
                self.tx_ring = None
        elif offset == R.RDT(0) and self.rx_ring is not None and value >= self.rx_nslots:
            self._fault(f"rx tail {value} outside ring of {self.rx_nslots} slots")
        elif offset == R.TDT(0) and self.tx_ring is not None and value >= self.tx_nslots:
            self._fault(f"tx tail {value} outside ring of {self.tx_nslots} slots")

    def _warn_unknown(self, offset: int) -> None:
        if offset not in self._warned:
            self._warned.add(offset)
            log.warning("%s: access to unmodeled register 0x%05x", self.name, offset)

    def script_register(self, offset: int, behavior: behaviors.Behavior) -> None:
        """Attach a behavior to a modeled register offset."""
        if offset not in KNOWN_OFFSETS:
            raise ValueError(f"cannot script unmodeled register 0x{offset:05x}")
        self.scripts[offset] = behavior

    def access_counts_for(self, offset: int) -> tuple[int, int]:
        reads, writes = self.access_counts.get(offset, [0, 0])
        return reads, writes

    def clear_access_log(self) -> None:
        self.access_log.clear()

    # ------------------------------------------------------------------ #
    # ring resolution

    def _ring_view(self, base: int, nbytes: int, what: str):
        if nbytes <= 0 or nbytes % R.DESC_BYTES != 0:
            self._fault(f"{what} ring length {nbytes} is not a descriptor multiple")
        if base & 0x7:
            self._fault(f"{what} ring base 0x{base:x} is not 8-byte aligned")
        try:
            pos = self.host.resolve(base, nbytes)
        except Exception:
            self._fault(f"{what} ring 0x{base:x}+{nbytes} outside registered DMA regions")
        return self.host.arena[pos:pos + nbytes].view(np.int64)

    def _resolve_rx_ring(self) -> None:
        base = self.reg_storage.get(R.RDBAL(0), 0) | (self.reg_storage.get(R.RDBAH(0), 0) << 32)
        nbytes = self.reg_storage.get(R.RDLEN(0), 0)
        self.rx_ring = self._ring_view(base, nbytes, "rx")
        self.rx_nslots = nbytes // R.DESC_BYTES
        self.rdh = 0

    def _resolve_tx_ring(self) -> None:
        base = self.reg_storage.get(R.TDBAL(0), 0) | (self.reg_storage.get(R.TDBAH(0), 0) << 32)
        nbytes = self.reg_storage.get(R.TDLEN(0), 0)
        self.tx_ring = self._ring_view(base, nbytes, "tx")
        self.tx_nslots = nbytes // R.DESC_BYTES
        self.tdh = 0

    def _fault(self, msg: str):
        self.faulted = msg
        raise ModelFault(f"{self.name}: {msg}")

    def _rx_active(self) -> bool:
        return (self.rx_ring is not None
                and self.reg_storage.get(R.RXCTRL, 0) & R.RXCTRL_RXEN != 0)

    def _tx_active(self) -> bool:
        return (self.tx_ring is not None
                and self.reg_storage.get(R.DMATXCTL, 0) & R.DMATXCTL_TE != 0)

    # ------------------------------------------------------------------ #
    # link endpoints

    def inject(self, frame: bytes, ts: int | None = None) -> bool:
        """Put one frame on this NIC's ingress wire; False on tail-drop."""
        n = len(frame)
        if n < R.MIN_FRAME or n > self.frame_cap:
            raise FrameSizeError(
                f"frame of {n} bytes outside [{R.MIN_FRAME}, {self.frame_cap}]"
            )
        with self.lock:
            if self.fifo_count >= self.fifo_cap:
                self.wire_drops += 1
                return False
            t = self.fifo_tail
            self.fifo_buf[t, :n] = memoryview(frame)
            self.fifo_len[t] = n
            self.fifo_ts[t] = self.host.clock.now if ts is None else ts
            self.fifo_tail = (t + 1) % self.fifo_cap
            self.fifo_count += 1
            return True

    def _new_cap_chunk(self) -> None:
        self._cap_buf = np.zeros(_CAP_CHUNK_BYTES, dtype=np.uint8)
        self._cap_off = np.zeros(_CAP_CHUNK_FRAMES, dtype=np.int64)
        self._cap_len = np.zeros(_CAP_CHUNK_FRAMES, dtype=np.int64)
        self._cap_ts = np.zeros(_CAP_CHUNK_FRAMES, dtype=np.int64)
        self._cap_n = 0
        self._cap_pos = 0

    def _cap_ensure(self, frames: int) -> None:
        if (self._cap_n + frames > _CAP_CHUNK_FRAMES
                or self._cap_pos + frames * self.frame_cap > _CAP_CHUNK_BYTES):
            self._seal_cap_chunk()

    def _seal_cap_chunk(self) -> None:
        if self._cap_n:
            self._cap_sealed.append(
                (self._cap_buf[:self._cap_pos].copy(),
                 self._cap_off[:self._cap_n].copy(),
                 self._cap_len[:self._cap_n].copy(),
                 self._cap_ts[:self._cap_n].copy())
            )
        self._new_cap_chunk()

    @property
    def captured_count(self) -> int:
        return sum(int(c[1].shape[0]) for c in self._cap_sealed) + self._cap_n

    def capture_arrays(self):
        """Drain the capture log as (flat_bytes, offsets, lengths, tstamps)."""
        with self.lock:
            self._seal_cap_chunk()
            chunks = self._cap_sealed
            self._cap_sealed = []
        if not chunks:
            z = np.zeros(0, dtype=np.int64)
            return np.zeros(0, dtype=np.uint8), z, z, z
        bufs, offs, lens, tss = zip(*chunks)
        base = 0
        fixed = []
        for b, o in zip(bufs, offs):
            fixed.append(o + base)
            base += b.shape[0]
        return (np.concatenate(bufs), np.concatenate(fixed),
                np.concatenate(lens), np.concatenate(tss))

    def capture_records(self) -> list[tuple[bytes, int]]:
        """Drain the capture log as (frame, timestamp) pairs."""
        buf, off, ln, ts = self.capture_arrays()
        return [
            (buf[off[i]:off[i] + ln[i]].tobytes(), int(ts[i]))
            for i in range(off.shape[0])
        ]

    def capture(self) -> list[bytes]:
        """Drain the capture log as raw frames."""
        return [frame for frame, _ in self.capture_records()]

    # ------------------------------------------------------------------ #
    # DMA engines

    def step(self, budget: int = 256) -> int:
        """Process up to `budget` descriptor transactions; returns the count.

        Receive deliveries run before transmit completions; each engine
        consumes descriptors strictly in ring order.
        """
        if budget < 0:
            raise ValueError("budget must be non-negative")
        with self.lock:
            if self.faulted:
                raise ModelFault(f"{self.name}: {self.faulted}")
            ks = self.kernels
            host = self.host
            t_desc = host.clock.cost.desc_ns
            clock = host.clock.now
            processed = 0

            if budget > 0 and self._rx_active() and self.fifo_count > 0:
                srrctl = self.reg_storage.get(R.SRRCTL(0), 0)
                drop_on_full = 1 if srrctl & R.SRRCTL_DROP_EN else 0
                fctrl = self.reg_storage.get(R.FCTRL, 0)
                filter_on = 0 if fctrl & R.FCTRL_UPE else 1
                rdt = self.reg_storage.get(R.RDT(0), 0)
                (self.rdh, self.fifo_head, self.fifo_count, delivered, _dropped,
                 filtered, clock, fault) = ks.model_rx(
                    host.arena, host.region_base, host.region_len,
                    self.rx_ring, self.rx_nslots, self.rdh, rdt,
                    self.fifo_buf, self.fifo_len, self.fifo_head,
                    self.fifo_count, self.fifo_cap,
                    budget, drop_on_full, filter_on, self.mac_int,
                    self.ctrs, clock, t_desc)
                if fault:
                    host.clock.now = clock
                    self._fault("rx descriptor points outside registered DMA regions")
                self.filtered_total += int(filtered)
                processed += int(delivered)
                budget -= int(delivered)

            if budget > 0 and self._tx_active():
                peer = self.peer
                to_fifo = 1 if peer is not None else 0
                sink = peer if peer is not None else self
                to_cap = 1 if sink.capture_enabled else 0
                if to_cap:
                    sink._cap_ensure(budget)
                f_buf = peer.fifo_buf if peer is not None else self._dummy2d
                f_len = peer.fifo_len if peer is not None else self._dummy1d
                f_ts = peer.fifo_ts if peer is not None else self._dummy1d
                f_tail = peer.fifo_tail if peer is not None else 0
                f_count = peer.fifo_count if peer is not None else 0
                f_cap = peer.fifo_cap if peer is not None else 1
                c_buf = sink._cap_buf if to_cap else self._dummy2d[0]
                c_off = sink._cap_off if to_cap else self._dummy1d
                c_len = sink._cap_len if to_cap else self._dummy1d
                c_ts = sink._cap_ts if to_cap else self._dummy1d
                tdt = self.reg_storage.get(R.TDT(0), 0)
                (self.tdh, f_tail, f_count, c_n, c_pos, completed, overflow,
                 clock, fault) = ks.model_tx(
                    host.arena, host.region_base, host.region_len,
                    self.tx_ring, self.tx_nslots, self.tdh, tdt,
                    to_fifo, f_buf, f_len, f_ts, f_tail, f_count, f_cap,
                    to_cap, c_buf, c_off, c_len, c_ts,
                    sink._cap_n if to_cap else 0,
                    sink._cap_pos if to_cap else 0,
                    budget, self.ctrs, clock, t_desc)
                if fault:
                    host.clock.now = clock
                    self._fault("tx descriptor points outside registered DMA regions")
                if peer is not None:
                    peer.fifo_tail = int(f_tail)
                    peer.fifo_count = int(f_count)
                    peer.wire_drops += int(overflow)
                if to_cap:
                    sink._cap_n = int(c_n)
                    sink._cap_pos = int(c_pos)
                processed += int(completed)

            host.clock.now = int(clock)
            return processed

    def export_pcap(self, path) -> int:
        """Write the drained capture log to a pcap file; returns frame count."""
        from .pcap import write_pcap

        records = self.capture_records()
        write_pcap(path, records)
        return len(records)

    def __repr__(self):
        return f"ModelNic({self.name})"


def link_connect(a: ModelNic, b: ModelNic) -> None:
    """Wire two NICs back to back: a's transmit wire is b's ingress."""
    if a.host is not b.host:
        raise ValueError("linked NICs must share a host (one clock domain)")
    if a is b:
        raise ValueError("cannot connect a NIC to itself")
    a.peer = b
    b.peer = a


def model_step(nic: ModelNic, budget: int = 256) -> int:
    return nic.step(budget)


def inject(nic: ModelNic, frame: bytes) -> bool:
    return nic.inject(frame)


def capture(nic: ModelNic) -> list[bytes]:
    return nic.capture()
