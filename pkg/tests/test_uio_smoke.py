"""Hardware backend: pure helpers always; device smoke test opt-in.

Set POLLNIC_HW_DEV to a prepared PCIe address (driver unbound, hugepages
mounted, run as root) to exercise the real path:

    POLLNIC_HW_DEV=0000:02:00.0 pytest tests/test_uio_smoke.py
"""

import os

import pytest

from pollnic.errors import AllocationError
from pollnic.uio import PAGEMAP_PRESENT, parse_pagemap_entry

HW_DEV = os.environ.get("POLLNIC_HW_DEV")


def test_pagemap_entry_decoding():
    pfn = 0x1234
    entry = PAGEMAP_PRESENT | pfn
    assert parse_pagemap_entry(entry) == pfn


def test_pagemap_entry_not_present_rejected():
    with pytest.raises(AllocationError):
        parse_pagemap_entry(0x1234)  # present bit clear


@pytest.mark.skipif(not HW_DEV, reason="POLLNIC_HW_DEV not set")
def test_hardware_init_and_link():
    from pollnic.apps import dump_report
    from pollnic.ixgbe import IxgbeDevice
    from pollnic.platform import open_device

    dev = IxgbeDevice(open_device(HW_DEV))
    assert dev.get_link_speed() in (0, 100, 1_000, 10_000)
    print(dump_report(dev, HW_DEV))
    dev.close()
