"""CLI surface: subcommands, outputs, exit codes."""

import pytest

from pollnic.cli import main
from pollnic.platform import reset_default_host


@pytest.fixture(autouse=True)
def _fresh_default_host():
    reset_default_host()
    yield
    reset_default_host()


def test_fwd_runs_and_reports(capsys):
    rc = main(["fwd", "--dev-a", "model:0", "--dev-b", "model:1",
               "--secs", "0.2"])
    assert rc == 0
    assert "forwarded" in capsys.readouterr().out


def test_gen_count(capsys):
    rc = main(["gen", "--dev", "model:0", "--count", "64"])
    assert rc == 0
    assert "sent 64" in capsys.readouterr().out


def test_dump(capsys):
    rc = main(["dump", "--dev", "model:0"])
    assert rc == 0
    assert "link       10000 Mbit/s" in capsys.readouterr().out


def test_dump_bad_spec_is_usage_error(capsys):
    assert main(["dump", "--dev", "nonsense"]) == 2


def test_missing_model_is_runtime_error():
    # a well-formed spec naming an absent device fails at runtime
    assert main(["dump", "--dev", "0000:99:00.0"]) == 1


def test_usage_error_exit_code_for_unknown_subcommand():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_bench_sweep_writes_csv(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    rc = main(["bench", "sweep", "--sizes", "1,32", "--pkts", "1024",
               "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 3
    assert lines[0].startswith("scenario,batch,ring,")


def test_bench_latency_writes_csv_and_histogram(tmp_path):
    out = tmp_path / "lat.csv"
    hist = tmp_path / "hist.csv"
    rc = main(["bench", "latency", "--pps", "1e6", "--secs", "0.001",
               "--out", str(out), "--samples-out", str(hist)])
    assert rc == 0
    assert out.read_text().count("\n") == 2
    assert hist.read_text().startswith("latency_ticks,count")


def test_bench_overflow_control(tmp_path, capsys):
    out = tmp_path / "ovf.csv"
    rc = main(["bench", "overflow", "--pkts", "1500", "--trials", "1",
               "--control", "--out", str(out)])
    assert rc == 0
    assert "0.00%" in capsys.readouterr().out
    assert out.read_text().splitlines()[1].endswith(",1")


def test_bench_kernels_compare(tmp_path, capsys):
    out = tmp_path / "k.csv"
    rc = main(["bench", "kernels", "--pkts", "2000", "--out", str(out)])
    assert rc == 0
    body = out.read_text().splitlines()
    assert body[0] == "mode,pkts,wall_secs,mpps"
    assert len(body) >= 2  # at least the numpy path; numba adds a row
