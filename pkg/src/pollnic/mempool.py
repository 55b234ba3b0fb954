"""DMA-capable packet buffer pools with exclusive-custody handles.

Packet memory never comes from the language allocator: not all memory is
usable for device DMA, so buffers live in pre-translated regions handed out
by a platform backend.  Each buffer is represented by a lightweight handle
carrying its pool identity, index, and device address.  At any instant a
buffer is held by exactly one party: the pool free list, a ring slot, or
application code.  APIs that take a handle either consume it (transmit,
free) or hand it back; the pool itself detects double frees and
wrong-pool returns via a free bitmap rather than trusting handles.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import (AllocationError, BoundsError, BufferStateError,
                     DoubleFree, PoolMismatch)

# Descriptor alignment granule; entry sizes must be multiples of this.
BUF_ALIGN = 64

_pool_ids = itertools.count(1)


class DmaRegion:
    """A pinned, device-visible memory window.

    The region is contiguous from the device's point of view: one base
    translation covers it.  It is never moved or released while buffers or
    rings reference it.
    """

    __slots__ = ("mem", "device_address", "length")

    def __init__(self, mem: np.ndarray, device_address: int):
        # Constructor is the one trusted spot binding raw backing memory to
        # a checked window; everything downstream goes through `mem`.
        if mem.dtype != np.uint8 or mem.ndim != 1:
            raise AllocationError("DMA region backing must be a flat byte array")
        self.mem = mem
        self.device_address = int(device_address)
        self.length = int(mem.shape[0])

    def translate(self, offset: int, span: int = 1) -> int:
        """Device address of `offset`; valid for `span` bytes."""
        if offset < 0 or span < 0 or offset + span > self.length or offset >= self.length:
            raise BoundsError(
                f"translate offset {offset}+{span} outside region of {self.length} bytes"
            )
        return self.device_address + offset


class PacketBuffer:
    """Handle to one pool entry; metadata lives here, packet bytes in the pool."""

    __slots__ = ("pool", "index", "device_address", "used_length")

    def __init__(self, pool: "Mempool", index: int, used_length: int):
        self.pool = pool
        self.index = index
        self.device_address = pool.base_device_address + index * pool.entry_size
        self.used_length = used_length

    @property
    def data(self) -> np.ndarray:
        """Byte window of exactly entry_size; accesses cannot leave it."""
        self.pool._check_held(self)
        return self.pool.mem2d[self.index]

    def write(self, offset: int, payload) -> None:
        self.pool._check_held(self)
        n = len(payload)
        if offset < 0 or offset + n > self.pool.entry_size:
            raise BoundsError(
                f"write of {n} bytes at {offset} exceeds entry size {self.pool.entry_size}"
            )
        self.pool.mem2d[self.index, offset:offset + n] = memoryview(bytes(payload))

    def read(self, offset: int, n: int) -> bytes:
        self.pool._check_held(self)
        if offset < 0 or n < 0 or offset + n > self.pool.entry_size:
            raise BoundsError(
                f"read of {n} bytes at {offset} exceeds entry size {self.pool.entry_size}"
            )
        return self.pool.mem2d[self.index, offset:offset + n].tobytes()

    def __repr__(self):
        return (f"PacketBuffer(pool={self.pool.pool_id}, index={self.index}, "
                f"used={self.used_length})")


class Mempool:
    """Fixed-capacity pool of DMA buffers with a LIFO free list.

    Confined to one queue pair's thread; no internal locking.
    """

    def __init__(self, region: DmaRegion, capacity: int, entry_size: int):
        if capacity <= 0:
            raise AllocationError("pool capacity must be positive")
        if entry_size < BUF_ALIGN or entry_size % BUF_ALIGN != 0:
            raise AllocationError(
                f"entry size must be a multiple of {BUF_ALIGN} and at least {BUF_ALIGN}"
            )
        if capacity * entry_size > region.length:
            raise AllocationError("region too small for capacity x entry_size")
        self.region = region
        self.capacity = capacity
        self.entry_size = entry_size
        self.pool_id = next(_pool_ids)
        self.base_device_address = region.device_address
        self.mem2d = region.mem[: capacity * entry_size].reshape(capacity, entry_size)
        # LIFO free stack plus a bitmap; the bitmap, not the handle, is the
        # authority on whether an index is free (double-free detection).
        self.free_stack = np.arange(capacity, dtype=np.int64)
        self.free_top = capacity
        self.free_bitmap = np.ones(capacity, dtype=np.uint8)

    @property
    def free_count(self) -> int:
        return self.free_top

    @property
    def outstanding(self) -> int:
        """Buffers currently outside the pool (rings or application)."""
        return self.capacity - self.free_top

    def alloc_batch(self, n: int) -> list[PacketBuffer]:
        """Take up to n buffers; a shorter list signals exhaustion."""
        if n < 0:
            raise ValueError("batch size must be non-negative")
        take = min(n, self.free_top)
        out = []
        for _ in range(take):
            self.free_top -= 1
            idx = int(self.free_stack[self.free_top])
            self.free_bitmap[idx] = 0
            out.append(PacketBuffer(self, idx, self.entry_size))
        return out

    def free(self, buf: PacketBuffer) -> None:
        """Return a buffer; the handle is dead afterwards."""
        if buf.pool is not self:
            raise PoolMismatch(
                f"buffer of pool {buf.pool.pool_id} returned to pool {self.pool_id}"
            )
        self._free_index(buf.index)

    def _free_index(self, idx: int) -> None:
        if idx < 0 or idx >= self.capacity:
            raise DoubleFree(f"buffer index {idx} outside pool of {self.capacity}")
        if self.free_bitmap[idx]:
            raise DoubleFree(f"buffer index {idx} is already on the free list")
        self.free_bitmap[idx] = 1
        self.free_stack[self.free_top] = idx
        self.free_top += 1

    def _bulk_free(self, idxs: np.ndarray) -> None:
        """Return reclaimed ring indices in one go (tx cleaning path)."""
        k = idxs.shape[0]
        if k == 0:
            return
        if np.any(self.free_bitmap[idxs]):
            dup = int(idxs[np.nonzero(self.free_bitmap[idxs])[0][0]])
            raise DoubleFree(f"buffer index {dup} is already on the free list")
        if np.unique(idxs).shape[0] != k:
            raise DoubleFree("duplicate buffer index in one reclaim batch")
        self.free_bitmap[idxs] = 1
        self.free_stack[self.free_top:self.free_top + k] = idxs
        self.free_top += k

    def _take_index(self) -> int:
        if self.free_top == 0:
            raise AllocationError("pool exhausted")
        self.free_top -= 1
        idx = int(self.free_stack[self.free_top])
        self.free_bitmap[idx] = 0
        return idx

    def _check_held(self, buf: PacketBuffer) -> None:
        if self.free_bitmap[buf.index]:
            raise BufferStateError(
                f"buffer {buf.index} accessed after being returned to the pool"
            )

    def __repr__(self):
        return (f"Mempool(id={self.pool_id}, capacity={self.capacity}, "
                f"entry_size={self.entry_size}, free={self.free_top})")


def default_pool_capacity(ring_size: int, max_batch: int = 32) -> int:
    """Covers both rings plus an in-flight batch each way for one port pair."""
    return 2 * ring_size + 2 * max_batch


def create_mempool(handle, capacity: int, entry_size: int = 2048) -> Mempool:
    """Allocate a DMA region from the device's platform and carve a pool."""
    if capacity <= 0:
        raise AllocationError("pool capacity must be positive")
    if entry_size < BUF_ALIGN or entry_size % BUF_ALIGN != 0:
        raise AllocationError(
            f"entry size must be a multiple of {BUF_ALIGN} and at least {BUF_ALIGN}"
        )
    from .platform import allocate_dma

    region = allocate_dma(handle, capacity * entry_size, require_contiguous=True)
    return Mempool(region, capacity, entry_size)
