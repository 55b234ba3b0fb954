"""Poll-mode driver for 82599-family NICs over the model or uio backend.

The driver never waits for interrupts: receive polls descriptor done bits,
transmit reclaims completed descriptors opportunistically, and all APIs move
batches of packets.  Ring discipline keeps one descriptor slot unposted so
tail == head unambiguously means the device owns nothing; the device tail
register is written at most once per batch, which is where batching wins
its throughput (every tail write is a device synchronization).

Buffer custody: every slot between the device head and the software tail
holds exactly one pool buffer.  rx_batch hands filled buffers to the caller
and immediately reposts fresh ones; tx_batch takes buffer custody until the
descriptor completes, then returns buffers to their owning pools.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import regs as R
from .errors import AllocationError, DeviceBusy, DriverFault, FrameSizeError
from .kernels import get_kernels
from .mempool import Mempool, PacketBuffer, create_mempool, default_pool_capacity
from .platform import DeviceHandle, allocate_dma, map_registers

MIN_RING = 64
MAX_RING = 4096
TX_CLEAN_CHUNK = 32


@dataclass
class DeviceStats:
    """Monotonic counter totals since the last reset."""

    rx_packets: int = 0
    tx_packets: int = 0
    rx_bytes: int = 0
    tx_bytes: int = 0

    def add(self, other: "DeviceStats") -> None:
        self.rx_packets += other.rx_packets
        self.tx_packets += other.tx_packets
        self.rx_bytes += other.rx_bytes
        self.tx_bytes += other.tx_bytes


class RxQueue:
    """Receive ring state: descriptor memory, indices, slot custody."""

    __slots__ = ("ring_region", "ring", "nslots", "next_idx", "gap_idx",
                 "slot_tab", "pool", "out_idx", "out_len")

    def __init__(self, ring_region, nslots: int, pool: Mempool):
        self.ring_region = ring_region
        self.ring = ring_region.mem.view(np.int64)
        self.nslots = nslots
        self.next_idx = 0
        self.gap_idx = nslots - 1
        self.slot_tab = np.full(nslots, -1, dtype=np.int64)
        self.pool = pool
        self.out_idx = np.zeros(nslots, dtype=np.int64)
        self.out_len = np.zeros(nslots, dtype=np.int64)

    def held(self) -> int:
        return int(np.count_nonzero(self.slot_tab >= 0))


class TxQueue:
    """Transmit ring state: clean index chases next; slots hold in-flight buffers."""

    __slots__ = ("ring_region", "ring", "nslots", "next_idx", "clean_idx",
                 "slot_pool", "slot_idx", "out_pool", "out_idx",
                 "in_addr", "in_len", "in_pid", "in_bidx")

    def __init__(self, ring_region, nslots: int):
        self.ring_region = ring_region
        self.ring = ring_region.mem.view(np.int64)
        self.nslots = nslots
        self.next_idx = 0
        self.clean_idx = 0
        self.slot_pool = np.full(nslots, -1, dtype=np.int64)
        self.slot_idx = np.full(nslots, -1, dtype=np.int64)
        self.out_pool = np.zeros(nslots, dtype=np.int64)
        self.out_idx = np.zeros(nslots, dtype=np.int64)
        self.in_addr = np.zeros(nslots, dtype=np.int64)
        self.in_len = np.zeros(nslots, dtype=np.int64)
        self.in_pid = np.zeros(nslots, dtype=np.int64)
        self.in_bidx = np.zeros(nslots, dtype=np.int64)

    def held(self) -> int:
        return int(np.count_nonzero(self.slot_idx >= 0))


class IxgbeDevice:
    """One initialized device; one thread per queue pair, init is exclusive."""

    def __init__(self, handle: DeviceHandle, num_rx: int = 1, num_tx: int = 1,
                 ring_size: int = 512, pool_capacity: int | None = None,
                 entry_size: int = 2048, checked: bool = True,
                 drop_on_full: bool = True, kernels=None,
                 reset_timeout: float = 1.0):
        if handle.driver_attached:
            raise DeviceBusy(f"{handle} already has a driver attached")
        queue_limit = handle.nic.QUEUE_COUNT if handle.backend == "model" else 1
        if not 1 <= num_rx <= queue_limit or not 1 <= num_tx <= queue_limit:
            raise ValueError(f"queue counts must be within 1..{queue_limit}")
        if not MIN_RING <= ring_size <= MAX_RING or ring_size & (ring_size - 1):
            raise ValueError(
                f"ring size must be a power of two in [{MIN_RING}, {MAX_RING}]"
            )
        if pool_capacity is None:
            pool_capacity = default_pool_capacity(ring_size)
        if pool_capacity < ring_size:
            raise AllocationError(
                f"pool of {pool_capacity} cannot keep a ring of {ring_size} filled"
            )
        self.handle = handle
        self.kernels = kernels if kernels is not None else get_kernels()
        self.checked = 1 if checked else 0
        self.drop_on_full = drop_on_full
        self.ring_size = ring_size
        self.mmio = map_registers(handle)
        self.stats = DeviceStats()
        self._pools_by_id: dict[int, Mempool] = {}
        self.rx_queues: list[RxQueue] = []
        self.tx_queues: list[TxQueue] = []

        if handle.backend == "uio":
            handle.uio.enable_bus_master()  # device may DMA from here on
        self._reset(reset_timeout)
        for i in range(num_rx):
            self._init_rx_queue(i, pool_capacity, entry_size)
        self.set_promisc(True)
        self.mmio.set_flags32(R.RXCTRL, R.RXCTRL_RXEN)
        self.mmio.set_flags32(R.HLREG0, R.HLREG0_TXCRCEN)
        self.mmio.set_flags32(R.DMATXCTL, R.DMATXCTL_TE)
        for i in range(num_tx):
            self._init_tx_queue(i)
        self.mmio.wait_set32(R.LINKS, R.LINKS_UP, timeout=reset_timeout)
        self.reset_stats()
        handle.driver_attached = True

    # ------------------------------------------------------------------ #
    # initialization

    def _reset(self, timeout: float) -> None:
        m = self.mmio
        m.write32(R.CTRL, R.CTRL_RST)
        m.wait_clear32(R.CTRL, R.CTRL_RST, timeout=timeout)
        m.wait_set32(R.EEC, R.EEC_ARD, timeout=timeout)
        m.wait_set32(R.RDRXCTL, R.RDRXCTL_DMAIDONE, timeout=timeout)

    def _init_rx_queue(self, i: int, pool_capacity: int, entry_size: int) -> None:
        m = self.mmio
        pool = create_mempool(self.handle, pool_capacity, entry_size)
        self._pools_by_id[pool.pool_id] = pool
        region = allocate_dma(self.handle, self.ring_size * R.DESC_BYTES)
        base = region.device_address
        m.write32(R.RDBAL(i), base & 0xFFFFFFFF)
        m.write32(R.RDBAH(i), base >> 32)
        m.write32(R.RDLEN(i), self.ring_size * R.DESC_BYTES)
        srrctl = R.SRRCTL_BSIZEPKT_2K | (R.SRRCTL_DROP_EN if self.drop_on_full else 0)
        m.write32(R.SRRCTL(i), srrctl)
        m.write32(R.RDT(i), 0)
        m.set_flags32(R.RXDCTL(i), R.RXTX_DCTL_ENABLE)
        m.wait_set32(R.RXDCTL(i), R.RXTX_DCTL_ENABLE)

        q = RxQueue(region, self.ring_size, pool)
        # post a buffer in every slot but the gap, then hand them to the device
        fill = self.ring_size - 1
        bufs = pool.alloc_batch(fill)
        if len(bufs) < fill:
            for b in bufs:
                pool.free(b)
            raise AllocationError(
                f"pool has {len(bufs)} free buffers, ring needs {fill}"
            )
        for slot, buf in enumerate(bufs):
            q.slot_tab[slot] = buf.index
            q.ring[2 * slot] = buf.device_address
            q.ring[2 * slot + 1] = 0
        m.write32(R.RDT(i), self.ring_size - 1)
        self.rx_queues.append(q)

    def _init_tx_queue(self, i: int) -> None:
        m = self.mmio
        region = allocate_dma(self.handle, self.ring_size * R.DESC_BYTES)
        base = region.device_address
        m.write32(R.TDBAL(i), base & 0xFFFFFFFF)
        m.write32(R.TDBAH(i), base >> 32)
        m.write32(R.TDLEN(i), self.ring_size * R.DESC_BYTES)
        m.write32(R.TDT(i), 0)
        m.set_flags32(R.TXDCTL(i), R.RXTX_DCTL_ENABLE)
        m.wait_set32(R.TXDCTL(i), R.RXTX_DCTL_ENABLE)
        self.tx_queues.append(TxQueue(region, self.ring_size))

    # ------------------------------------------------------------------ #
    # datapath

    def rx_batch(self, queue_id: int, max_n: int) -> list[PacketBuffer]:
        """Harvest up to max_n received packets and repost fresh buffers.

        One tail-register write per call that consumed anything.  Runs dry
        without error; a short list means nothing more was ready (or the
        pool could not cover reposting, leaving frames for the next call).
        """
        if max_n < 0:
            raise ValueError("max_n must be non-negative")
        q = self.rx_queues[queue_id]
        if max_n == 0:
            return []
        pool = q.pool
        next_idx, gap_idx, free_top, count, fault = self.kernels.rx_take(
            q.ring, q.nslots, q.next_idx, q.gap_idx, q.slot_tab,
            pool.free_stack, pool.free_top, pool.free_bitmap,
            pool.base_device_address, pool.entry_size,
            min(max_n, q.nslots), q.out_idx, q.out_len, self.checked)
        if fault:
            raise DriverFault(f"rx ring {queue_id} state check failed")
        if count == 0:
            return []
        q.next_idx = int(next_idx)
        q.gap_idx = int(gap_idx)
        pool.free_top = int(free_top)
        self.mmio.write32(R.RDT(queue_id), q.gap_idx)
        idxs = q.out_idx[:count].tolist()
        lens = q.out_len[:count].tolist()
        return [PacketBuffer(pool, i, ln) for i, ln in zip(idxs, lens)]

    def tx_batch(self, queue_id: int, bufs: list[PacketBuffer]) -> int:
        """Queue buffers for transmit; returns how many the ring accepted.

        Completed descriptors are reclaimed first (in chunks, their buffers
        go back to their pools), then buffers are posted until the ring is
        full.  Accepted buffers are consumed; the rest stay with the caller.
        Invalid lengths fail the whole call before any state changes.
        """
        q = self.tx_queues[queue_id]
        self._tx_reclaim(q, TX_CLEAN_CHUNK)
        if not bufs:
            return 0
        cap = min(len(bufs), q.nslots)  # the ring can never take more anyway
        for i, b in enumerate(bufs):
            n = b.used_length
            if n < R.MIN_FRAME or n > b.pool.entry_size:
                raise FrameSizeError(
                    f"tx frame of {n} bytes outside [{R.MIN_FRAME}, "
                    f"{b.pool.entry_size}]"
                )
            b.pool._check_held(b)
            if b.pool.pool_id not in self._pools_by_id:
                self._pools_by_id[b.pool.pool_id] = b.pool
            if i < cap:
                q.in_addr[i] = b.device_address
                q.in_len[i] = n
                q.in_pid[i] = b.pool.pool_id
                q.in_bidx[i] = b.index
        next_idx, accepted, fault = self.kernels.tx_place(
            q.ring, q.nslots, q.next_idx, q.clean_idx,
            q.in_addr, q.in_len, cap,
            q.slot_pool, q.slot_idx, q.in_pid, q.in_bidx, self.checked)
        if fault:
            raise DriverFault(f"tx ring {queue_id} state check failed")
        if accepted:
            q.next_idx = int(next_idx)
            self.mmio.write32(R.TDT(queue_id), q.next_idx)
        return int(accepted)

    def _tx_reclaim(self, q: TxQueue, chunk: int) -> int:
        clean_idx, n = self.kernels.tx_clean(
            q.ring, q.nslots, q.clean_idx, q.next_idx,
            q.slot_pool, q.slot_idx, q.out_pool, q.out_idx, chunk)
        if n == 0:
            return 0
        q.clean_idx = int(clean_idx)
        pids = q.out_pool[:n]
        idxs = q.out_idx[:n]
        for pid in np.unique(pids):
            pool = self._pools_by_id[int(pid)]
            pool._bulk_free(idxs[pids == pid])
        return int(n)

    def tx_flush(self, queue_id: int) -> int:
        """Reclaim every completed descriptor regardless of chunking."""
        return self._tx_reclaim(self.tx_queues[queue_id], 1)

    # ------------------------------------------------------------------ #
    # control and statistics

    def read_stats(self) -> DeviceStats:
        """Counters accumulated since the last read (hardware read-clears)."""
        m = self.mmio
        rx_p = m.read32(R.GPRC)
        tx_p = m.read32(R.GPTC)
        rx_b = m.read32(R.GORCL) | (m.read32(R.GORCH) << 32)
        tx_b = m.read32(R.GOTCL) | (m.read32(R.GOTCH) << 32)
        delta = DeviceStats(rx_p, tx_p, rx_b, tx_b)
        self.stats.add(delta)
        return delta

    def reset_stats(self) -> None:
        self.read_stats()
        self.stats = DeviceStats()

    def set_promisc(self, on: bool) -> None:
        if on:
            self.mmio.set_flags32(R.FCTRL, R.FCTRL_UPE | R.FCTRL_MPE | R.FCTRL_BAM)
        else:
            self.mmio.clear_flags32(R.FCTRL, R.FCTRL_UPE | R.FCTRL_MPE)

    def get_link_speed(self) -> int:
        """Current link speed in Mbit/s; 0 when down."""
        links = self.mmio.read32(R.LINKS)
        if not links & R.LINKS_UP:
            return 0
        speed = links & R.LINKS_SPEED_MASK
        return {R.LINKS_SPEED_10G: 10_000, 0x2 << 28: 1_000, 0x1 << 28: 100}.get(speed, 0)

    def mac_address(self) -> bytes:
        # station address registers hold the MAC octets little-endian
        ral = self.mmio.read32(R.RAL0)
        rah = self.mmio.read32(R.RAH0)
        return ral.to_bytes(4, "little") + (rah & 0xFFFF).to_bytes(2, "little")

    def close(self) -> None:
        self.handle.driver_attached = False
        self.handle.close()

    # test/diagnostic helpers ------------------------------------------- #

    def buffers_outside_pools(self) -> int:
        """Custody accounting across every pool this device has touched."""
        return sum(p.outstanding for p in self._pools_by_id.values())

    def __repr__(self):
        return f"IxgbeDevice({self.handle.ident}, ring={self.ring_size})"
