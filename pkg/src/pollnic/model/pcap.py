"""Minimal pcap writer for wire captures (debugging aid).

Classic pcap: 24-byte global header (magic 0xa1b2c3d4, version 2.4,
linktype 1 = Ethernet) followed by 16-byte record headers.  Timestamps are
virtual ticks (1 tick = 1 ns) mapped to second/microsecond fields.
"""

import struct

PCAP_MAGIC = 0xA1B2C3D4
LINKTYPE_ETHERNET = 1
SNAPLEN = 65535


def write_pcap(path, records, ticks_per_second: int = 1_000_000_000) -> None:
    """records: iterable of (frame_bytes, timestamp_ticks)."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<IHHiIII", PCAP_MAGIC, 2, 4, 0, 0,
                             SNAPLEN, LINKTYPE_ETHERNET))
        for frame, ts in records:
            sec, rem = divmod(int(ts), ticks_per_second)
            usec = rem * 1_000_000 // ticks_per_second
            fh.write(struct.pack("<IIII", sec, usec, len(frame), len(frame)))
            fh.write(frame)


def read_pcap(path) -> list[tuple[bytes, int, int]]:
    """Parse records back as (frame, sec, usec); for tests and inspection."""
    out = []
    with open(path, "rb") as fh:
        head = fh.read(24)
        magic, _vmaj, _vmin, _tz, _sig, _snap, link = struct.unpack("<IHHiIII", head)
        if magic != PCAP_MAGIC or link != LINKTYPE_ETHERNET:
            raise ValueError("not an Ethernet pcap file")
        while True:
            rec = fh.read(16)
            if len(rec) < 16:
                break
            sec, usec, incl, _orig = struct.unpack("<IIII", rec)
            out.append((fh.read(incl), sec, usec))
    return out
