from .behaviors import (Behavior, ClearAfterReads, Plain, ReadClear,
                        Sequence, SetAfterReads)
from .clock import CostModel, VirtualClock
from .nic import ModelNic, capture, inject, link_connect, model_step
from .pcap import read_pcap, write_pcap

__all__ = [
    "Behavior", "ClearAfterReads", "Plain", "ReadClear", "Sequence",
    "SetAfterReads", "CostModel", "VirtualClock", "ModelNic",
    "capture", "inject", "link_connect", "model_step",
    "read_pcap", "write_pcap",
]
