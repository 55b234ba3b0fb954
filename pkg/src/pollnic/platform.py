"""Backend abstraction: device discovery, register mapping, DMA allocation.

Two backends exist behind one interface:

* ``model`` -- the software NIC (default, fully testable).  DMA memory is a
  single arena per :class:`ModelHost`; device addresses are
  ``(region_seq << 32) | offset`` with sequence numbers starting at 1, so a
  raw offset mistaken for a device address is loudly invalid instead of
  silently aliasing region 0.
* ``uio``   -- real hardware through the kernel's user-space I/O facility
  (see :mod:`pollnic.uio`); root-only, Linux/x86-specific, exercised only by
  an opt-in smoke test.

This module (together with :mod:`pollnic.uio` and the region constructors)
is the only place allowed to perform raw, unchecked memory operations;
everything above it works through bounds-checked windows.

Device spec grammar: ``model:<n>`` or a PCIe address ``0000:02:00.0``.
"""

from __future__ import annotations

import re
import threading

import numpy as np

from .errors import AllocationError, BoundsError, DeviceBusy, DeviceNotFound
from .mempool import DmaRegion
from .model.clock import CostModel, VirtualClock

PAGE = 4096
MAX_REGIONS = 64

_PCI_RE = re.compile(r"^[0-9a-fA-F]{4}:[0-9a-fA-F]{2}:[0-9a-fA-F]{2}\.[0-7]$")


class ModelHost:
    """One simulated machine: a DMA arena, a clock, and its model NICs.

    Regions are carved out of the arena so the device engines can resolve
    any registered device address against a single byte array.
    """

    def __init__(self, arena_bytes: int = 64 << 20, cost: CostModel | None = None):
        self.arena = np.zeros(arena_bytes, dtype=np.uint8)
        self.clock = VirtualClock(cost)
        self._alloc_pos = PAGE  # keep the zero page unused
        self._next_seq = 1
        # seq-indexed tables the DMA engines validate against; seq 0 invalid.
        self.region_base = np.zeros(MAX_REGIONS + 1, dtype=np.int64)
        self.region_len = np.zeros(MAX_REGIONS + 1, dtype=np.int64)
        self.nics: dict[str, object] = {}

    def register_nic(self, nic) -> str:
        name = f"model:{len(self.nics)}"
        self.nics[name] = nic
        return name

    def alloc_region(self, nbytes: int) -> DmaRegion:
        if nbytes <= 0:
            raise AllocationError("DMA allocation must be positive")
        if self._next_seq > MAX_REGIONS:
            raise AllocationError("out of DMA regions")
        aligned = (nbytes + PAGE - 1) // PAGE * PAGE
        if self._alloc_pos + aligned > self.arena.shape[0]:
            raise AllocationError(
                f"out of DMA memory: {nbytes} requested, "
                f"{self.arena.shape[0] - self._alloc_pos} left in arena"
            )
        seq = self._next_seq
        self._next_seq += 1
        pos = self._alloc_pos
        self._alloc_pos += aligned
        self.region_base[seq] = pos
        self.region_len[seq] = nbytes
        mem = self.arena[pos:pos + nbytes]
        return DmaRegion(mem, device_address=seq << 32)

    def resolve(self, device_address: int, span: int) -> int:
        """Arena position for a device address; raises if unregistered."""
        seq = device_address >> 32
        off = device_address & 0xFFFFFFFF
        if seq < 1 or seq > MAX_REGIONS or self.region_len[seq] == 0:
            raise BoundsError(f"device address 0x{device_address:x} not in any region")
        if off + span > self.region_len[seq]:
            raise BoundsError(
                f"device address 0x{device_address:x}+{span} leaves its region"
            )
        return int(self.region_base[seq]) + off


_default_host: ModelHost | None = None
_default_host_lock = threading.Lock()


def default_host() -> ModelHost:
    """Shared host used by CLI entry points; tests build their own."""
    global _default_host
    with _default_host_lock:
        if _default_host is None:
            _default_host = ModelHost()
        return _default_host


def reset_default_host() -> None:
    global _default_host
    with _default_host_lock:
        _default_host = None


class DeviceHandle:
    """One opened device; maps to exactly one NIC."""

    def __init__(self, backend: str, ident: str, *, nic=None, uio=None):
        self.backend = backend  # "model" | "uio" (a "vfio" tag is reserved)
        self.ident = ident
        self.nic = nic
        self.uio = uio
        self.driver_attached = False

    def close(self) -> None:
        if self.backend == "model":
            self.nic.opened = False
        elif self.uio is not None:
            self.uio.close()

    def __repr__(self):
        return f"DeviceHandle({self.backend}:{self.ident})"


def open_device(spec: str, host: ModelHost | None = None) -> DeviceHandle:
    """Open ``model:<n>`` (from `host` or the default host) or a PCIe address."""
    if spec.startswith("model:"):
        h = host if host is not None else default_host()
        nic = h.nics.get(spec)
        if nic is None:
            raise DeviceNotFound(f"no model NIC registered as {spec!r}")
        if getattr(nic, "opened", False):
            raise DeviceBusy(f"{spec} is already open")
        nic.opened = True
        return DeviceHandle("model", spec, nic=nic)
    if _PCI_RE.match(spec):
        from . import uio

        return DeviceHandle("uio", spec, uio=uio.UioDevice(spec))
    raise ValueError(
        f"device spec {spec!r} is neither model:<n> nor a PCIe address"
    )


def allocate_dma(handle: DeviceHandle, nbytes: int,
                 require_contiguous: bool = True) -> DmaRegion:
    """Pinned, translated DMA memory usable by the handle's device."""
    if nbytes <= 0:
        raise AllocationError("DMA allocation must be positive")
    if handle.backend == "model":
        return handle.nic.host.alloc_region(nbytes)
    return handle.uio.alloc_dma(nbytes, require_contiguous)


def translate(region: DmaRegion, offset: int) -> int:
    """Device address for an offset into a region (page-stable mapping)."""
    return region.translate(offset)


def map_registers(handle: DeviceHandle):
    """Register-space window for the device behind the handle."""
    from .mmio import MmioRegion

    if handle.backend == "model":
        return MmioRegion(handle.nic, handle.nic.BAR_LEN)
    return MmioRegion(handle.uio.bar_backing(), handle.uio.bar_len)
