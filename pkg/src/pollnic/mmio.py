"""Bounds-checked register window with access-exactly-once semantics.

Register space is not memory: every read and write is a device transaction.
A logical access performed through this module results in exactly one
backing access -- never elided (a write with no read-back still happens),
never duplicated, never cached (two consecutive reads hit the device
twice), and in program order.  The software NIC counts and logs every
backing access, which is what the audit tests check.

Accesses are 32-bit and naturally aligned, matching the register file of
the targeted controllers.  CPython performs no access-eliding optimization,
and the backings below execute one transaction per call by construction;
on weakly-ordered architectures a real-hardware backing would additionally
need barriers, which is out of scope (x86 only).
"""

from __future__ import annotations

import time

from .errors import AlignmentError, BoundsError, DeviceTimeout

# Spin interval while polling a register; the device model flips state
# synchronously so this only matters on hardware.
DEFAULT_POLL_INTERVAL = 10e-6
DEFAULT_POLL_TIMEOUT = 1.0


class MmioRegion:
    """Window onto one device's register space.

    `backing` must provide reg_read32(offset) and reg_write32(offset, value),
    each performing exactly one device transaction.  Construction is the
    single trusted step that pairs a backing with its length; all accesses
    afterwards are checked here first, so an out-of-range or misaligned
    offset never reaches the backing.

    A region may be shared between threads; individual accesses are atomic
    at 32-bit granularity (the backings serialize internally).
    """

    __slots__ = ("backing", "length", "poll_interval")

    def __init__(self, backing, length: int,
                 poll_interval: float = DEFAULT_POLL_INTERVAL):
        self.backing = backing
        self.length = int(length)
        self.poll_interval = poll_interval

    def _check(self, offset: int) -> None:
        if offset % 4 != 0:
            raise AlignmentError(f"register offset 0x{offset:x} is not 32-bit aligned")
        if offset < 0 or offset + 4 > self.length:
            raise BoundsError(
                f"register offset 0x{offset:x} outside space of 0x{self.length:x} bytes"
            )

    def read32(self, offset: int) -> int:
        self._check(offset)
        return self.backing.reg_read32(offset)

    def write32(self, offset: int, value: int) -> None:
        self._check(offset)
        if not 0 <= value <= 0xFFFFFFFF:
            raise ValueError(f"register value 0x{value:x} does not fit in 32 bits")
        self.backing.reg_write32(offset, value)

    def set_flags32(self, offset: int, mask: int) -> None:
        """Read-modify-write OR; exactly one read and one write."""
        self.write32(offset, (self.read32(offset) | mask) & 0xFFFFFFFF)

    def clear_flags32(self, offset: int, mask: int) -> None:
        """Read-modify-write AND-NOT; exactly one read and one write."""
        self.write32(offset, self.read32(offset) & ~mask & 0xFFFFFFFF)

    def wait_set32(self, offset: int, mask: int,
                   timeout: float = DEFAULT_POLL_TIMEOUT) -> int:
        """Poll until (value & mask) == mask; returns the matching value."""
        return self._wait(offset, mask, timeout, want_set=True)

    def wait_clear32(self, offset: int, mask: int,
                     timeout: float = DEFAULT_POLL_TIMEOUT) -> int:
        """Poll until (value & mask) == 0; returns the matching value."""
        return self._wait(offset, mask, timeout, want_set=False)

    def _wait(self, offset: int, mask: int, timeout: float, want_set: bool) -> int:
        self._check(offset)
        deadline = time.monotonic() + timeout
        while True:
            value = self.backing.reg_read32(offset)
            hit = (value & mask) == mask if want_set else (value & mask) == 0
            if hit:
                return value
            if time.monotonic() >= deadline:
                raise DeviceTimeout(offset, mask, timeout)
            if self.poll_interval > 0:
                time.sleep(self.poll_interval)
