"""Forwarder, generator, and dump behavior."""

import io

import numpy as np
import pytest

from pollnic.apps import (ForwarderConfig, GeneratorConfig, build_frame_template,
                          decrement_ttl, dump_device, dump_report,
                          run_forwarder, run_generator)
from pollnic.bench import ScenarioConfig, run_forward_scenario
from pollnic.errors import CheckedArithmeticError, FrameSizeError
from pollnic.ixgbe import IxgbeDevice
from pollnic.model import ModelNic
from pollnic.platform import ModelHost, open_device, reset_default_host


@pytest.fixture(autouse=True)
def _fresh_default_host():
    reset_default_host()
    yield
    reset_default_host()


def test_forwarder_payload_integrity_small():
    cfg = ScenarioConfig(pkts=10_000, batch=32, seed=9, keep_frames=True)
    r = run_forward_scenario(cfg)
    assert r.forwarded == 10_000
    flat, off, lens = r.frames
    template = np.asarray(build_frame_template(60, seed=9,
                                               dst_mac=b"\x02\x50\x00\x09\x00\x00"))
    # compare every captured frame against the expected touched template
    assert np.all(lens == 60)
    frames = flat[(off[:, None] + np.arange(60)).reshape(-1)].reshape(-1, 60)
    expect = np.tile(template, (10_000, 1))
    nums = np.arange(10_000)
    expect[:, 54] = nums & 0xFF
    expect[:, 55] = (nums >> 8) & 0xFF
    expect[:, 48] = (int(template[48]) + 1) % 256  # the touched byte
    assert np.array_equal(frames, expect)


def test_touch_byte_wraps_at_255():
    from pollnic.apps import touch_packets

    host = ModelHost()
    nic = ModelNic(host)
    dev = IxgbeDevice(open_device(nic.name, host))
    buf = dev.rx_queues[0].pool.alloc_batch(1)[0]
    buf.write(48, b"\xff")
    touch_packets([buf], 48)  # the documented wrapping operation
    assert buf.read(48, 1) == b"\x00"


def test_forwarder_conservation_under_overload():
    cfg = ScenarioConfig(pkts=30_000, pps=500e6, batch=32, seed=2)
    r = run_forward_scenario(cfg)
    assert r.ring_drops > 0
    assert r.injected == 30_000
    assert r.forwarded + r.ring_drops + r.wire_drops + r.app_drops == r.injected


def test_forwarder_zero_load_two_seconds(capsys):
    cfg = ForwarderConfig(dev_a="model:0", dev_b="model:1", duration=2.0,
                          stats_interval=1.0)
    summary = run_forwarder(cfg)
    assert summary["rx_a"] == summary["rx_b"] == 0
    assert summary["tx_a"] == summary["tx_b"] == 0
    assert summary["app_drops"] == 0
    assert summary["stats_lines"] == 2  # one line per device, one interval
    out = capsys.readouterr().out
    assert sum(1 for line in out.splitlines() if "Mpps" in line) == 2
    assert "[model:0] RX: 0.00 Mpps, 0 Mbit/s | TX: 0.00 Mpps, 0 Mbit/s" in out


def test_forwarder_pump_keeps_running_while_stats_print():
    cfg = ForwarderConfig(duration=1.2, stats_interval=0.3)
    summary = run_forwarder(cfg, out=io.StringIO())
    assert summary["stats_lines"] >= 4
    assert summary["pump_iterations"] > 100  # engines never stalled on printing


def test_forwarder_config_validation():
    with pytest.raises(ValueError):
        ForwarderConfig(batch_size=0).validate()
    with pytest.raises(ValueError):
        ForwarderConfig(batch_size=512).validate()
    with pytest.raises(ValueError):
        ForwarderConfig(duration=0).validate()
    with pytest.raises(ValueError):
        ForwarderConfig(touch_offset=60).validate()


def test_generator_count_and_sequence_numbers():
    from pollnic.platform import default_host

    nic = ModelNic(default_host())
    sent = run_generator(GeneratorConfig(dev="model:0", count=1000, seed=4))
    assert sent == 1000
    frames = nic.capture()
    assert len(frames) == 1000
    seqs = [f[54] | (f[55] << 8) for f in frames]
    assert seqs == list(range(1000))


def test_generator_rejects_runt_frames():
    with pytest.raises(FrameSizeError):
        run_generator(GeneratorConfig(dev="model:0", count=1, frame_size=59))


def test_generator_deterministic_for_seed():
    from pollnic.platform import default_host

    def run_once():
        reset_default_host()
        nic = ModelNic(default_host())
        run_generator(GeneratorConfig(dev="model:0", count=50, seed=7))
        return nic.capture()

    assert run_once() == run_once()


def test_dump_fresh_device():
    report = dump_device("model:0")
    assert "link       10000 Mbit/s" in report
    assert "rx_packets 0" in report
    assert "tx_packets 0" in report
    assert "read-clear" in report


def test_dump_after_forwarding_shows_counts():
    host = ModelHost()
    nic = ModelNic(host)
    dev = IxgbeDevice(open_device(nic.name, host))
    frame = bytes(build_frame_template(60, seed=0))
    for _ in range(20):
        nic.inject(frame)
    nic.step(64)
    got = dev.rx_batch(0, 64)
    assert len(got) == 20
    report = dump_report(dev, nic.name)
    assert "rx_packets 20" in report


def test_decrement_ttl_checked():
    assert decrement_ttl(64) == 63
    assert decrement_ttl(1) == 0
    with pytest.raises(CheckedArithmeticError):
        decrement_ttl(0)
    with pytest.raises(CheckedArithmeticError):
        decrement_ttl(256)


def test_frame_template_properties():
    f = build_frame_template(60, seed=0)
    assert f.shape == (60,)
    assert bytes(f[0:6]) == b"\xff" * 6
    with pytest.raises(FrameSizeError):
        build_frame_template(59, seed=0)
    with pytest.raises(FrameSizeError):
        build_frame_template(4096, seed=0)
    assert np.array_equal(build_frame_template(60, 3), build_frame_template(60, 3))
