"""Virtual time base for the software NIC.

All model-mode measurements are expressed in integer ticks (1 tick = 1 ns of
simulated time) so that results are machine-independent and runs with the
same seed are bit-identical.  A wall-clock mode exists for hardware runs and
for the model's threaded throughput mode; that mode never feeds the CSV
exports.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class CostModel:
    """Tick charges for the events the simulation accounts for.

    mmio_ns  -- one register access (the per-batch synchronization cost)
    desc_ns  -- one descriptor transaction (DMA of one packet)
    pump_ns  -- one harness scheduling quantum (charged per event-loop turn)
    """

    mmio_ns: int = 30
    desc_ns: int = 4
    pump_ns: int = 50

    @property
    def per_packet_ns(self) -> int:
        """Service cost of one packet through rx delivery and tx completion,
        including an unamortized register sync on each side.  Used as the
        basis for analytic latency bounds."""
        return 2 * self.desc_ns + 2 * self.mmio_ns


class VirtualClock:
    """Monotonic tick counter shared by every NIC of one model host."""

    __slots__ = ("now", "cost")

    def __init__(self, cost: CostModel | None = None):
        self.now = 0
        self.cost = cost if cost is not None else CostModel()

    def advance(self, ticks: int) -> int:
        self.now += int(ticks)
        return self.now

    def tick_mmio(self) -> None:
        self.now += self.cost.mmio_ns

    def tick_pump(self) -> None:
        self.now += self.cost.pump_ns
