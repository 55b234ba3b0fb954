"""Real-hardware backend: PCIe register access and DMA memory via sysfs.

This is the only module besides :mod:`pollnic.platform` allowed to touch
raw memory: it mmaps the device's BAR0 resource file for register access
and allocates DMA buffers from hugetlbfs, translating virtual to physical
addresses through the kernel's per-process page map.  The translation is
valid only because hugetlb pages are never migrated or swapped; this is a
Linux/x86 implementation detail, not a portable contract.

Requirements (documented, not auto-configured):

* the device bound away from its kernel driver
  (``echo $PCI_ADDR > /sys/bus/pci/devices/$PCI_ADDR/driver/unbind``)
* root, for ``/sys/bus/pci/.../resource0`` and ``/proc/self/pagemap``
* mounted hugetlbfs; default ``/mnt/huge``, override with the
  ``POLLNIC_HUGE_DIR`` environment variable; 2 MiB pages must be reserved
  (``vm.nr_hugepages``)

If huge pages are unavailable, allocation fails hard with guidance; there
is deliberately no fallback to unpinned memory a device could scribble
over after the kernel moves it.  Contiguous allocations are capped at one
2 MiB huge page, so hardware runs size their pools to fit (e.g.
``pool_capacity=960`` at the default 2 KiB entry size); rings fit easily.

Nothing here runs in CI; ``tests/test_uio_smoke.py`` exercises it when
``POLLNIC_HW_DEV`` names a prepared device.
"""

from __future__ import annotations

import mmap
import os
import struct

import numpy as np

from .errors import AllocationError, DeviceNotFound, PollnicError
from .mempool import DmaRegion

HUGE_PAGE_SIZE = 2 << 20
HUGE_DIR_ENV = "POLLNIC_HUGE_DIR"
DEFAULT_HUGE_DIR = "/mnt/huge"

PAGEMAP_PFN_MASK = (1 << 55) - 1
PAGEMAP_PRESENT = 1 << 63
X86_PAGE_SIZE = 4096


def _sysfs(pci_addr: str, leaf: str) -> str:
    return f"/sys/bus/pci/devices/{pci_addr}/{leaf}"


def parse_pagemap_entry(entry: int) -> int:
    """Physical frame number from one 64-bit page map entry."""
    if not entry & PAGEMAP_PRESENT:
        raise AllocationError("page not present; DMA memory must be resident")
    return entry & PAGEMAP_PFN_MASK


def virt_to_phys(vaddr: int) -> int:
    """Physical address backing a virtual address of this process (root only)."""
    with open("/proc/self/pagemap", "rb") as fh:
        fh.seek(vaddr // X86_PAGE_SIZE * 8)
        raw = fh.read(8)
    if len(raw) != 8:
        raise AllocationError("short pagemap read")
    pfn = parse_pagemap_entry(struct.unpack("<Q", raw)[0])
    return pfn * X86_PAGE_SIZE + vaddr % X86_PAGE_SIZE


class _BarBacking:
    """Register transactions against a mapped BAR.

    Each call performs exactly one access on the mapping; CPython executes
    these as written (no access elision), and x86 keeps UC mappings
    strongly ordered.
    """

    def __init__(self, bar_mmap: mmap.mmap):
        self._mm = bar_mmap
        self._words = np.frombuffer(bar_mmap, dtype=np.uint32)

    def reg_read32(self, offset: int) -> int:
        return int(self._words[offset >> 2])

    def reg_write32(self, offset: int, value: int) -> None:
        self._words[offset >> 2] = value


class UioDevice:
    """One opened PCIe device mapped for user-space driving."""

    def __init__(self, pci_addr: str):
        res = _sysfs(pci_addr, "resource0")
        if not os.path.exists(res):
            raise DeviceNotFound(f"no PCIe device at {pci_addr} (missing {res})")
        try:
            self._fd = os.open(res, os.O_RDWR)
        except PermissionError as e:
            raise PollnicError(f"opening {res} needs root: {e}") from e
        self.bar_len = os.fstat(self._fd).st_size
        self._bar = mmap.mmap(self._fd, self.bar_len,
                              mmap.MAP_SHARED,
                              mmap.PROT_READ | mmap.PROT_WRITE)
        self.pci_addr = pci_addr
        self._backing = _BarBacking(self._bar)
        self._dma_maps: list[mmap.mmap] = []
        self._huge_seq = 0
        # device stays quiesced until a driver attaches and calls
        # enable_bus_master(); mapping alone must not let it DMA

    def enable_bus_master(self) -> None:
        cfg = _sysfs(self.pci_addr, "config")
        with open(cfg, "r+b") as fh:
            fh.seek(4)
            cmd = struct.unpack("<H", fh.read(2))[0]
            if not cmd & (1 << 2):
                fh.seek(4)
                fh.write(struct.pack("<H", cmd | (1 << 2)))

    def bar_backing(self) -> _BarBacking:
        return self._backing

    def alloc_dma(self, nbytes: int, require_contiguous: bool = True) -> DmaRegion:
        """Pinned DMA memory from one huge page; physically contiguous."""
        if nbytes > HUGE_PAGE_SIZE and require_contiguous:
            raise AllocationError(
                f"contiguous DMA allocations are limited to one huge page "
                f"({HUGE_PAGE_SIZE} bytes); {nbytes} requested"
            )
        huge_dir = os.environ.get(HUGE_DIR_ENV, DEFAULT_HUGE_DIR)
        if not os.path.isdir(huge_dir):
            raise AllocationError(
                f"hugetlbfs not mounted at {huge_dir}; mount it or set "
                f"{HUGE_DIR_ENV} (no fallback to unpinned memory)"
            )
        path = os.path.join(
            huge_dir, f"pollnic-{os.getpid()}-{self._huge_seq}"
        )
        self._huge_seq += 1
        fd = os.open(path, os.O_CREAT | os.O_RDWR, 0o600)
        try:
            os.ftruncate(fd, HUGE_PAGE_SIZE)
            mm = mmap.mmap(fd, HUGE_PAGE_SIZE, mmap.MAP_SHARED,
                           mmap.PROT_READ | mmap.PROT_WRITE)
        except OSError as e:
            os.close(fd)
            os.unlink(path)
            raise AllocationError(
                f"huge page mmap failed ({e}); reserve pages via "
                f"vm.nr_hugepages"
            ) from e
        os.close(fd)
        os.unlink(path)  # anonymous after unlink; freed with the mapping
        mm[0] = 0  # fault the page in before translating
        self._dma_maps.append(mm)
        mem = np.frombuffer(mm, dtype=np.uint8)[:nbytes]
        vaddr = mem.__array_interface__["data"][0]
        return DmaRegion(mem, device_address=virt_to_phys(vaddr))

    def close(self) -> None:
        self._bar.close()
        os.close(self._fd)
        for mm in self._dma_maps:
            mm.close()
        self._dma_maps.clear()
