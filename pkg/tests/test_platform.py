"""Device discovery, DMA allocation, and address translation."""

import pytest

from pollnic.errors import (AllocationError, BoundsError, DeviceBusy,
                            DeviceNotFound)
from pollnic.model import ModelNic
from pollnic.platform import ModelHost, allocate_dma, open_device, translate


def test_open_model_device(host, nic):
    handle = open_device(nic.name, host)
    assert handle.backend == "model"
    assert handle.nic is nic


def test_open_missing_model(host):
    with pytest.raises(DeviceNotFound):
        open_device("model:9", host)


def test_open_twice_rejected(host, nic):
    open_device(nic.name, host)
    with pytest.raises(DeviceBusy):
        open_device(nic.name, host)


def test_open_close_reopen(host, nic):
    handle = open_device(nic.name, host)
    handle.close()
    open_device(nic.name, host)


def test_malformed_spec_is_usage_error(host):
    with pytest.raises(ValueError):
        open_device("garbage", host)
    with pytest.raises(ValueError):
        open_device("0000:02:00", host)  # missing function number


def test_allocate_dma_basics(host, nic):
    handle = open_device(nic.name, host)
    region = allocate_dma(handle, 4096)
    assert region.length == 4096
    assert region.device_address & 0xFFF == 0  # page-aligned base offset
    assert region.mem.shape == (4096,)


def test_allocate_dma_zero_rejected(host, nic):
    handle = open_device(nic.name, host)
    with pytest.raises(AllocationError):
        allocate_dma(handle, 0)


def test_allocations_do_not_overlap(host, nic):
    handle = open_device(nic.name, host)
    spans = []
    for size in (4096, 8192, 100, 4096):
        r = allocate_dma(handle, size)
        spans.append((r.device_address, r.device_address + r.length))
    spans.sort()
    for (s0, e0), (s1, e1) in zip(spans, spans[1:]):
        assert e0 <= s1


def test_translate(host, nic):
    handle = open_device(nic.name, host)
    region = allocate_dma(handle, 8192)
    assert translate(region, 0) == region.device_address
    assert translate(region, 4096) == region.device_address + 4096
    with pytest.raises(BoundsError):
        translate(region, region.length)
    with pytest.raises(BoundsError):
        translate(region, -1)


def test_translation_injective_across_regions(host, nic):
    handle = open_device(nic.name, host)
    pages = set()
    for _ in range(8):
        region = allocate_dma(handle, 16384)
        for off in range(0, region.length, 4096):
            page = translate(region, off)
            assert page not in pages
            pages.add(page)


def test_out_of_dma_memory(nic_pair):
    small = ModelHost(arena_bytes=64 << 10)
    nic = ModelNic(small)
    handle = open_device(nic.name, small)
    with pytest.raises(AllocationError):
        allocate_dma(handle, 1 << 20)


def test_device_addresses_are_not_raw_offsets(host, nic):
    # sequence-tagged addresses make offset/address mixups loudly invalid
    handle = open_device(nic.name, host)
    region = allocate_dma(handle, 4096)
    assert region.device_address >> 32 >= 1
    with pytest.raises(BoundsError):
        host.resolve(123, 1)  # a raw offset is never a device address
