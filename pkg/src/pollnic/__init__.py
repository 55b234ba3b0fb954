"""pollnic: user-space poll-mode NIC driver framework.

Layers, bottom up: platform backends (software model / uio hardware) hand
out register windows and DMA regions; mempool manages exclusive-custody
packet buffers; the driver moves packet batches over descriptor rings; the
apps and bench modules put it all to work.  Hot loops live in
:mod:`pollnic.kernels` and run either numba-compiled or as plain numpy
(``POLLNIC_KERNELS=py``).
"""

from .apps import (ForwarderConfig, GeneratorConfig, build_frame_template,
                   decrement_ttl, dump_device, run_forwarder, run_generator)
from .bench import (BenchRecord, LatencyDistribution, ScenarioConfig,
                    compare_kernel_modes, export_csv, measure_latency,
                    overflow_cost, run_forward_scenario, sweep_batches)
from .errors import (AlignmentError, AllocationError, BoundsError,
                     BufferStateError, CheckedArithmeticError, DeviceBusy,
                     DeviceNotFound, DeviceTimeout, DoubleFree, DriverFault,
                     FrameSizeError, ModelFault, PollnicError, PoolMismatch)
from .ixgbe import DeviceStats, IxgbeDevice, RxQueue, TxQueue
from .kernels import available_modes, get_kernels
from .mempool import (DmaRegion, Mempool, PacketBuffer, create_mempool,
                      default_pool_capacity)
from .mmio import MmioRegion
from .model import (CostModel, ModelNic, VirtualClock, capture, inject,
                    link_connect, model_step)
from .platform import (DeviceHandle, ModelHost, allocate_dma, default_host,
                       map_registers, open_device, translate)

__version__ = "0.1.0"
