"""Scriptable register behaviors for the software NIC.

A behavior owns one register offset: reads go through `read`, writes through
`write`.  Tests script these to exercise polling loops, read-clear counters,
and value sequences without real hardware.
"""


class Behavior:
    def read(self, nic, offset: int) -> int:
        raise NotImplementedError

    def write(self, nic, offset: int, value: int) -> None:
        # default: writes land in plain storage underneath the script
        nic.reg_storage[offset] = value


class Plain(Behavior):
    """Ordinary storage with an explicit initial value."""

    def __init__(self, value: int = 0):
        self.value = value

    def read(self, nic, offset):
        return self.value

    def write(self, nic, offset, value):
        self.value = value


class ReadClear(Behavior):
    """Returns the current value, then zero; writes set it."""

    def __init__(self, value: int = 0):
        self.value = value

    def read(self, nic, offset):
        v = self.value
        self.value = 0
        return v

    def write(self, nic, offset, value):
        self.value = value


class SetAfterReads(Behavior):
    """Mask bits appear from the n-th read on (device warm-up simulation)."""

    def __init__(self, mask: int, n: int, base: int = 0):
        self.mask = mask
        self.n = n
        self.base = base
        self.reads = 0

    def read(self, nic, offset):
        self.reads += 1
        if self.reads >= self.n:
            return self.base | self.mask
        return self.base & ~self.mask


class ClearAfterReads(Behavior):
    """Mask bits disappear from the n-th read on (self-clearing simulation)."""

    def __init__(self, mask: int, n: int, base: int = 0):
        self.mask = mask
        self.n = n
        self.reads = 0
        self.base = base

    def read(self, nic, offset):
        self.reads += 1
        if self.reads >= self.n:
            return self.base & ~self.mask
        return self.base | self.mask


class Sequence(Behavior):
    """Successive reads return successive values, holding the last."""

    def __init__(self, values):
        if not values:
            raise ValueError("sequence behavior needs at least one value")
        self.values = list(values)
        self.i = 0

    def read(self, nic, offset):
        v = self.values[self.i]
        if self.i + 1 < len(self.values):
            self.i += 1
        return v
