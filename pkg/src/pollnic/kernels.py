"""Hot inner loops over descriptor rings, buffer pools, and packet queues.

Every function here operates only on numpy arrays and int64 scalars so the
same source runs in two modes:

* ``numba`` -- compiled with ``@njit(boundscheck=True)``; the default when
  numba is importable.
* ``py``    -- the identical functions interpreted over numpy arrays.

Select the mode with the ``POLLNIC_KERNELS`` environment variable (``numba``
or ``py``) or per call site via :func:`get_kernels`.  ``pollnic bench
kernels`` compares the two.

All descriptor math is int64: every field of the 16-byte descriptors fits in
a non-negative int64, so ring memory is viewed as ``int64[2 * ring_size]``.
Ring indices advance with an explicitly wrapping ``(i + 1) % ring_size``.

The ``checked`` flag enables the semantic arithmetic guards (index and
length validation, free-stack underflow) that are on by default; array
bounds are always enforced in both modes regardless of the flag.
"""

import os
from types import SimpleNamespace

import numpy as np

from .regs import TXD_FLAGS, TXD_STAT_DD


def rx_take(ring, nslots, next_idx, gap_idx, slot_tab,
            free_stack, free_top, free_bitmap,
            pool_base_addr, entry_size, max_n,
            out_idx, out_len, checked):
    """Consume ready rx descriptors and refill the ring from the pool.

    The consumed slot becomes the new gap slot; the fresh buffer is posted
    into the previous gap so exactly one slot is always unposted and
    tail == head unambiguously means an empty device window.
    Returns (next_idx, gap_idx, free_top, count, fault).
    """
    count = 0
    fault = 0
    while count < max_n:
        s = next_idx
        w1 = ring[2 * s + 1]
        if w1 & 3 != 3:  # DD and EOP both set
            break
        if free_top <= 0:
            break  # pool exhausted: never leave a slot unposted
        ln = (w1 >> 32) & 0xFFFF
        b = slot_tab[s]
        if checked != 0:
            if b < 0 or ln <= 0 or ln > entry_size or free_top > free_bitmap.shape[0]:
                fault = 1
                break
        free_top -= 1
        nb = free_stack[free_top]
        free_bitmap[nb] = 0
        ring[2 * gap_idx] = pool_base_addr + nb * entry_size
        ring[2 * gap_idx + 1] = 0
        slot_tab[gap_idx] = nb
        slot_tab[s] = -1
        out_idx[count] = b
        out_len[count] = ln
        count += 1
        gap_idx = s
        next_idx = (s + 1) % nslots
    return next_idx, gap_idx, free_top, count, fault


def tx_clean(ring, nslots, clean_idx, next_idx, slot_pool, slot_idx,
             out_pool, out_bidx, chunk):
    """Reclaim completed tx descriptors in chunks.

    Only whole chunks whose last descriptor reports done are reclaimed,
    amortizing status reads.  Returns (clean_idx, reclaimed).
    """
    n = 0
    while True:
        pending = (next_idx - clean_idx) % nslots
        if pending < chunk:
            break
        probe = (clean_idx + chunk - 1) % nslots
        if ring[2 * probe + 1] & TXD_STAT_DD == 0:
            break
        for _ in range(chunk):
            s = clean_idx
            out_pool[n] = slot_pool[s]
            out_bidx[n] = slot_idx[s]
            slot_pool[s] = -1
            slot_idx[s] = -1
            n += 1
            clean_idx = (clean_idx + 1) % nslots
    return clean_idx, n


def tx_place(ring, nslots, next_idx, clean_idx, addrs, lens, count,
             slot_pool, slot_idx, pids, bidxs, checked):
    """Post up to count buffers into free tx descriptors.

    One slot is kept unused so next == clean means empty.
    Returns (next_idx, accepted, fault).
    """
    accepted = 0
    fault = 0
    while accepted < count:
        nn = (next_idx + 1) % nslots
        if nn == clean_idx:
            break
        ln = lens[accepted]
        if checked != 0:
            if ln < 60 or ln > 0xFFFF or bidxs[accepted] < 0:
                fault = 1
                break
        ring[2 * next_idx] = addrs[accepted]
        ring[2 * next_idx + 1] = TXD_FLAGS | ln
        slot_pool[next_idx] = pids[accepted]
        slot_idx[next_idx] = bidxs[accepted]
        next_idx = nn
        accepted += 1
    return next_idx, accepted, fault


def model_rx(arena, reg_base, reg_len, ring, nslots, rdh, rdt,
             fifo_buf, fifo_len, fifo_head, fifo_count, fifo_cap,
             budget, drop_on_full, filter_on, mac, ctrs, clock, t_desc):
    """Device side of receive: DMA pending link frames into posted buffers.

    Writes packet bytes first, then the status word with DD|EOP, so a
    descriptor observed done always carries complete data.  Frames arriving
    at a full ring are discarded (missed-packet counter) when drop_on_full
    is set, matching the buffer-bloat-avoidance configuration.
    Returns (rdh, fifo_head, fifo_count, delivered, dropped, filtered,
    clock, fault).
    """
    delivered = 0
    dropped = 0
    filtered = 0
    fault = 0
    while fifo_count > 0 and budget > 0:
        head = fifo_head
        ln = fifo_len[head]
        if filter_on != 0:
            d = np.int64(0)  # widen before shifting; uint8 math would truncate
            for k in range(6):
                d = (d << 8) | np.int64(fifo_buf[head, k])
            if d != mac and d != 0xFFFFFFFFFFFF and (fifo_buf[head, 0] & 1) == 0:
                fifo_head = (head + 1) % fifo_cap
                fifo_count -= 1
                filtered += 1
                continue
        if rdh == rdt:
            if drop_on_full != 0:
                # head-of-queue shed: costs wire time (budget) but is not a
                # descriptor transaction
                fifo_head = (head + 1) % fifo_cap
                fifo_count -= 1
                dropped += 1
                ctrs[4] += 1
                budget -= 1
                continue
            break
        a = ring[2 * rdh]
        seq = a >> 32
        off = a & 0xFFFFFFFF
        if seq <= 0 or seq >= reg_base.shape[0] or reg_len[seq] <= 0 or off + ln > reg_len[seq]:
            fault = 1
            break
        pos = reg_base[seq] + off
        arena[pos:pos + ln] = fifo_buf[head, :ln]
        ring[2 * rdh] = 0  # write-back clobbers the posted address
        ring[2 * rdh + 1] = (ln << 32) | 3
        rdh = (rdh + 1) % nslots
        fifo_head = (head + 1) % fifo_cap
        fifo_count -= 1
        delivered += 1
        budget -= 1
        clock += t_desc
        ctrs[0] += 1
        ctrs[1] += ln
    return rdh, fifo_head, fifo_count, delivered, dropped, filtered, clock, fault


def model_tx(arena, reg_base, reg_len, ring, nslots, tdh, tdt,
             to_fifo, f_buf, f_len, f_ts, f_tail, f_count, f_cap,
             to_cap, c_buf, c_off, c_len, c_ts, c_n, c_pos,
             budget, ctrs, clock, t_desc):
    """Device side of transmit: DMA posted buffers out to the wire.

    Frames go to the peer's link queue (tail-dropping when it is full)
    and/or a capture store; the done bit is set only after the full frame
    has been read out.  Returns (tdh, f_tail, f_count, c_n, c_pos,
    completed, overflow, clock, fault).
    """
    completed = 0
    overflow = 0
    fault = 0
    while tdh != tdt and budget > 0:
        w1 = ring[2 * tdh + 1]
        ln = w1 & 0xFFFFF
        a = ring[2 * tdh]
        seq = a >> 32
        off = a & 0xFFFFFFFF
        if ln <= 0 or seq <= 0 or seq >= reg_base.shape[0] or reg_len[seq] <= 0 or off + ln > reg_len[seq]:
            fault = 1
            break
        pos = reg_base[seq] + off
        clock += t_desc
        if to_fifo != 0:
            if f_count >= f_cap:
                overflow += 1
            else:
                f_buf[f_tail, :ln] = arena[pos:pos + ln]
                f_len[f_tail] = ln
                f_ts[f_tail] = clock
                f_tail = (f_tail + 1) % f_cap
                f_count += 1
        if to_cap != 0:
            c_buf[c_pos:c_pos + ln] = arena[pos:pos + ln]
            c_off[c_n] = c_pos
            c_len[c_n] = ln
            c_ts[c_n] = clock
            c_pos += ln
            c_n += 1
        ring[2 * tdh + 1] = w1 | TXD_STAT_DD
        tdh = (tdh + 1) % nslots
        completed += 1
        budget -= 1
        ctrs[2] += 1
        ctrs[3] += ln
    return tdh, f_tail, f_count, c_n, c_pos, completed, overflow, clock, fault


def inject_due(f_buf, f_len, f_ts, f_tail, f_count, f_cap,
               template, tlen, seq_off, next_i, total,
               sched_base, interval, now, inj_ts):
    """Feed scheduled frames whose arrival time has passed into a link queue.

    Each frame is the template with a 16-bit sequence number patched in.
    Arrivals at a full queue are wire drops.  Returns (f_tail, f_count,
    next_i, wire_dropped).
    """
    wire_dropped = 0
    while next_i < total:
        t = sched_base + next_i * interval
        if t > now:
            break
        inj_ts[next_i] = t
        if f_count >= f_cap:
            wire_dropped += 1
            next_i += 1
            continue
        f_buf[f_tail, :tlen] = template[:tlen]
        f_buf[f_tail, seq_off] = next_i & 0xFF
        f_buf[f_tail, seq_off + 1] = (next_i >> 8) & 0xFF
        f_len[f_tail] = tlen
        f_ts[f_tail] = t
        f_tail = (f_tail + 1) % f_cap
        f_count += 1
        next_i += 1
    return f_tail, f_count, next_i, wire_dropped


def inject_fill(f_buf, f_len, f_ts, f_tail, f_count, f_cap,
                template, tlen, seq_off, next_i, total,
                target, now, inj_ts):
    """Keep a link queue topped up to a target depth (saturating load).

    Returns (f_tail, f_count, next_i).
    """
    while next_i < total and f_count < target and f_count < f_cap:
        inj_ts[next_i] = now
        f_buf[f_tail, :tlen] = template[:tlen]
        f_buf[f_tail, seq_off] = next_i & 0xFF
        f_buf[f_tail, seq_off + 1] = (next_i >> 8) & 0xFF
        f_len[f_tail] = tlen
        f_ts[f_tail] = now
        f_tail = (f_tail + 1) % f_cap
        f_count += 1
        next_i += 1
    return f_tail, f_count, next_i


_KERNEL_FNS = (rx_take, tx_clean, tx_place, model_rx, model_tx,
               inject_due, inject_fill)

_py_set = SimpleNamespace(mode="py", **{f.__name__: f for f in _KERNEL_FNS})
_numba_set = None


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def _build_numba_set():
    global _numba_set
    if _numba_set is None:
        from numba import njit

        jit = njit(cache=True, boundscheck=True)
        _numba_set = SimpleNamespace(
            mode="numba", **{f.__name__: jit(f) for f in _KERNEL_FNS}
        )
    return _numba_set


def available_modes() -> list[str]:
    modes = ["py"]
    if numba_available():
        modes.append("numba")
    return modes


def get_kernels(mode: str | None = None):
    """Resolve a kernel set.

    mode None consults POLLNIC_KERNELS, then falls back to numba when
    importable and py otherwise.
    """
    if mode is None:
        mode = os.environ.get("POLLNIC_KERNELS", "").strip().lower() or None
    if mode is None:
        mode = "numba" if numba_available() else "py"
    if mode == "py":
        return _py_set
    if mode == "numba":
        if not numba_available():
            raise RuntimeError("numba kernels requested but numba is not importable")
        return _build_numba_set()
    raise ValueError(f"unknown kernel mode {mode!r} (expected 'numba' or 'py')")


def warmup(kernel_set=None) -> None:
    """Force JIT compilation so timed runs never include compile time."""
    import numpy as np

    ks = kernel_set if kernel_set is not None else get_kernels()
    if ks.mode != "numba":
        return
    arena = np.zeros(4096, np.uint8)
    rb = np.zeros(3, np.int64)
    rl = np.zeros(3, np.int64)
    rl[1] = 4096
    ring = np.zeros(2 * 4, np.int64)
    tab = np.full(4, -1, np.int64)
    stack = np.arange(4, dtype=np.int64)
    bm = np.ones(4, np.uint8)
    o1 = np.zeros(4, np.int64)
    o2 = np.zeros(4, np.int64)
    fb = np.zeros((4, 64), np.uint8)
    fl = np.zeros(4, np.int64)
    ft = np.zeros(4, np.int64)
    ctrs = np.zeros(8, np.int64)
    tmpl = np.zeros(64, np.uint8)
    its = np.zeros(4, np.int64)
    ks.rx_take(ring, 4, 0, 3, tab, stack, 4, bm, 1 << 32, 64, 1, o1, o2, 1)
    ks.tx_clean(ring, 4, 0, 0, tab.copy(), tab.copy(), o1, o2, 2)
    ks.tx_place(ring, 4, 0, 0, o1, o2 + 60, 0, tab.copy(), tab.copy(), o1, o2, 1)
    ks.model_rx(arena, rb, rl, ring, 4, 0, 0, fb, fl, 0, 0, 4,
                1, 1, 0, 0, ctrs, 0, 4)
    ks.model_tx(arena, rb, rl, ring, 4, 0, 0,
                0, fb, fl, ft, 0, 0, 4,
                0, arena, o1, o2, ft, 0, 0,
                1, ctrs, 0, 4)
    ks.inject_due(fb, fl, ft, 0, 0, 4, tmpl, 60, 54, 0, 0, 0, 10, 0, its)
    ks.inject_fill(fb, fl, ft, 0, 0, 4, tmpl, 60, 54, 0, 0, 2, 0, its)
