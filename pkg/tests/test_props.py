"""Property tests over ring arithmetic, pool custody, and register bounds."""

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from pollnic.errors import AlignmentError, BoundsError, DoubleFree
from pollnic.ixgbe import IxgbeDevice
from pollnic.mempool import PacketBuffer, create_mempool
from pollnic.model import ModelNic
from pollnic.platform import ModelHost, map_registers, open_device

RING_SIZES = st.sampled_from([64, 128, 256, 512, 1024, 2048, 4096])


@given(ring=RING_SIZES, i=st.integers(min_value=0, max_value=4095))
def test_index_advance_wraps_modulo(ring, i):
    i = i % ring
    nxt = (i + 1) % ring
    assert 0 <= nxt < ring
    if i == ring - 1:
        assert nxt == 0
    else:
        assert nxt == i + 1


@settings(max_examples=30, suppress_health_check=[HealthCheck.too_slow])
@given(st.lists(st.integers(min_value=-8, max_value=8), min_size=1, max_size=60),
       st.integers(min_value=1, max_value=64))
def test_pool_conservation_over_random_traces(trace, capacity):
    host = ModelHost(arena_bytes=1 << 22)
    nic = ModelNic(host)
    handle = open_device(nic.name, host)
    pool = create_mempool(handle, capacity, 64)
    held = []
    for move in trace:
        if move >= 0:
            held.extend(pool.alloc_batch(move))
        elif held:
            for _ in range(min(-move, len(held))):
                pool.free(held.pop())
        assert pool.free_count + len(held) == capacity
        assert pool.free_count == int(np.count_nonzero(pool.free_bitmap))
    for b in held:
        pool.free(b)
    assert pool.free_count == capacity


@settings(max_examples=30)
@given(st.integers(min_value=0, max_value=63))
def test_replayed_free_always_detected(idx):
    host = ModelHost(arena_bytes=1 << 22)
    nic = ModelNic(host)
    pool = create_mempool(open_device(nic.name, host), 64, 64)
    bufs = pool.alloc_batch(64)
    freed_index = bufs[idx].index
    pool.free(bufs[idx])
    with pytest.raises(DoubleFree):
        pool.free(PacketBuffer(pool, freed_index, 64))


@settings(max_examples=40, suppress_health_check=[HealthCheck.too_slow])
@given(offset=st.integers(min_value=-64, max_value=0x20040))
def test_register_bounds_never_touch_backing_when_invalid(offset):
    host = ModelHost()
    nic = ModelNic(host)
    region = map_registers(open_device(nic.name, host))
    invalid = offset % 4 != 0 or offset < 0 or offset + 4 > region.length
    before = sum(r + w for r, w in nic.access_counts.values())
    if invalid:
        with pytest.raises((BoundsError, AlignmentError)):
            region.read32(offset)
        assert sum(r + w for r, w in nic.access_counts.values()) == before
    else:
        region.read32(offset)
        assert sum(r + w for r, w in nic.access_counts.values()) == before + 1


@settings(max_examples=40)
@given(offset=st.integers(min_value=2040, max_value=2056),
       n=st.integers(min_value=0, max_value=16))
def test_buffer_window_bounds_sweep(offset, n):
    host = ModelHost(arena_bytes=1 << 22)
    nic = ModelNic(host)
    pool = create_mempool(open_device(nic.name, host), 2, 2048)
    buf = pool.alloc_batch(1)[0]
    if offset + n <= 2048:
        buf.write(offset, bytes(n))
        assert buf.read(offset, n) == bytes(n)
    else:
        with pytest.raises(BoundsError):
            buf.write(offset, bytes(n))


@settings(max_examples=15, deadline=None,
          suppress_health_check=[HealthCheck.too_slow])
@given(seed=st.integers(min_value=0, max_value=2**31 - 1))
def test_driver_custody_invariants_under_random_interleaving(seed):
    """rx/tx/pump interleavings keep custody partitioned and conserved."""
    rng = np.random.default_rng(seed)
    host = ModelHost()
    a = ModelNic(host)
    b = ModelNic(host)
    dev_a = IxgbeDevice(open_device(a.name, host), ring_size=64,
                        pool_capacity=192)
    dev_b = IxgbeDevice(open_device(b.name, host), ring_size=64,
                        pool_capacity=192)
    pool_a = dev_a.rx_queues[0].pool
    frame = bytes(np.asarray(rng.integers(0, 256, 60), dtype=np.uint8))
    held = []
    for _ in range(40):
        op = rng.integers(0, 5)
        if op == 0:
            a.inject(frame)
        elif op == 1:
            a.step(int(rng.integers(1, 30)))
        elif op == 2:
            held.extend(dev_a.rx_batch(0, int(rng.integers(0, 9))))
        elif op == 3 and held:
            take = held[:int(rng.integers(1, len(held) + 1))]
            del held[:len(take)]
            sent = dev_b.tx_batch(0, take)
            for buf in take[sent:]:
                buf.pool.free(buf)
        else:
            b.step(int(rng.integers(1, 30)))
        outside = pool_a.outstanding
        in_rx = dev_a.rx_queues[0].held()
        in_tx = int(np.count_nonzero(dev_b.tx_queues[0].slot_pool == pool_a.pool_id))
        assert outside == in_rx + in_tx + len(held)
    # drain to quiescence and verify exact conservation
    while a.fifo_count or b.fifo_count:
        a.step(256)
        b.step(256)
        held.extend(dev_a.rx_batch(0, 64))
    for buf in held:
        buf.pool.free(buf)
    b.step(256)
    dev_b.tx_flush(0)
    assert pool_a.free_count + dev_a.rx_queues[0].held() == pool_a.capacity
