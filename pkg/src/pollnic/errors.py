"""Exception types shared across the driver stack."""


class PollnicError(Exception):
    """Base class for all errors raised by this package."""


class BoundsError(PollnicError):
    """Access outside a checked memory window."""


class AlignmentError(PollnicError):
    """Register access at an offset that is not naturally aligned."""


class DeviceTimeout(PollnicError):
    """A register poll did not observe the expected bits in time."""

    def __init__(self, offset: int, mask: int, timeout: float):
        super().__init__(
            f"register 0x{offset:05x} did not match mask 0x{mask:08x} "
            f"within {timeout * 1e3:.1f} ms"
        )
        self.offset = offset
        self.mask = mask


class PoolMismatch(PollnicError):
    """Buffer handed back to a pool it does not belong to."""


class DoubleFree(PollnicError):
    """Buffer index freed while already sitting on the free list."""


class BufferStateError(PollnicError):
    """Data access through a handle whose buffer is back on the free list."""


class AllocationError(PollnicError):
    """DMA memory exhausted or allocation request invalid."""


class DeviceNotFound(PollnicError):
    """Device spec does not name a reachable device."""


class DeviceBusy(PollnicError):
    """Device already opened or initialized."""


class DriverFault(PollnicError):
    """A checked-arithmetic guard tripped inside a driver hot loop."""


class ModelFault(PollnicError):
    """The software NIC detected a DMA access outside registered memory.

    Faults are loud by design: the model refuses to corrupt memory the way
    real hardware silently would.
    """


class FrameSizeError(PollnicError):
    """Frame shorter than the Ethernet minimum or larger than a buffer."""


class CheckedArithmeticError(PollnicError):
    """An arithmetic guard fired (e.g. decrementing a zero-valued field)."""
