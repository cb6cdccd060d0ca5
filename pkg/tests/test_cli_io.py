import json
import os

import pytest
from hypothesis import given, strategies as st

from mecsim.cli import main
from mecsim.domain import ConfigError, SimConfig
from mecsim.engine import SlotRecord, run
from mecsim.io import (
    TRACE_HEADER, IoFailure, atomic_write, distance_table_csv, fmt_distance, gnuplot_script,
    load_config, parse_trace, read_trace, trace_to_csv, write_trace,
)


@pytest.fixture
def cfg_file(tmp_path):
    def make(**fields):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps({"n_devices": 5, "n_slots": 5, **fields}))
        return str(p)
    return make


# -- formatting

@pytest.mark.parametrize("x, s", [
    (20.214999, "20.21"), (0.125, "0.12"), (0.135, "0.14"), (2.675, "2.68"),
    (1.005, "1.00"), (0.0, "0.00"), (99.999, "100.00"), (70.71, "70.71"),
])
def test_fmt_distance(x, s):
    assert fmt_distance(x) == s


@given(st.floats(0, 1e6))
def test_fmt_distance_within_half_cent(x):
    assert abs(float(fmt_distance(x)) - x) <= 0.005 + 1e-9


# -- trace files

def test_empty_trace_is_header_only(tmp_path):
    p = tmp_path / "t.csv"
    write_trace([], p)
    assert p.read_text() == ",".join(TRACE_HEADER) + "\n"
    assert read_trace(p) == []


def test_five_by_five_trace_has_26_lines(tmp_path):
    trace, _ = run(SimConfig(n_devices=5, n_slots=5))
    p = tmp_path / "t.csv"
    write_trace(trace, p)
    lines = p.read_text().splitlines()
    assert len(lines) == 26
    assert lines[0] == "t,device_id,distance_m,q_bits,h_bits,action,energy_j,deadline_missed"


def test_trace_round_trip():
    trace, _ = run(SimConfig(n_slots=50, arrival_prob=0.7))
    back = parse_trace(trace_to_csv(trace))
    assert len(back) == len(trace)
    for a, b in zip(trace, back):
        assert (a.slot, a.device, a.q_bits, a.h_bits, a.action, a.energy_j, a.deadline_missed) == (
            b.slot, b.device, b.q_bits, b.h_bits, b.action, b.energy_j, b.deadline_missed)
        assert abs(a.distance_m - b.distance_m) <= 0.005 + 1e-9
    assert trace_to_csv(back) == trace_to_csv(trace)


def test_malformed_trace(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(IoFailure):
        read_trace(p)
    with pytest.raises(IoFailure):
        read_trace(tmp_path / "missing.csv")


def test_distance_table_layout():
    trace = [SlotRecord(t, d, 10.0 * t + d + 0.004, 0, 0.0, "Local", 0.0, 0)
             for t in range(3) for d in range(2)]
    lines = distance_table_csv(trace).splitlines()
    assert lines == ["Time Step,Device 1,Device 2", "0,0.00,1.00", "1,10.00,11.00", "2,20.00,21.00"]
    assert distance_table_csv(trace, steps=1).splitlines() == lines[:2]
    assert distance_table_csv([]) == "Time Step\n"


def test_gnuplot_script_names_every_device():
    script = gnuplot_script("table.csv", 3, "plot.png")
    assert "set output 'plot.png'" in script
    for d in (2, 3, 4):
        assert f"using 1:{d} " in script
    assert "title 'Device 3'" in script


def test_atomic_write_replaces_whole_file(tmp_path):
    p = tmp_path / "sub" / "f.txt"
    atomic_write(p, "first")
    atomic_write(p, "second")
    assert p.read_text() == "second"
    assert os.listdir(p.parent) == ["f.txt"]


def test_atomic_write_into_a_file_path_fails(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(IoFailure):
        atomic_write(blocker / "out.txt", "data")


# -- config loading

def test_load_config_overrides(cfg_file):
    path = cfg_file(seed=3)
    assert load_config(path).seed == 3
    assert load_config(path, {"seed": 8, "n_slots": None}).seed == 8


def test_load_config_bad_json(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)


# -- command line

def test_run_writes_bundle(cfg_file, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", cfg_file(), "--out", str(out)]) == 0
    assert sorted(os.listdir(out)) == ["config_echo.json", "distance_table.csv", "summary.json", "trace.csv"]
    assert len((out / "trace.csv").read_text().splitlines()) == 26
    summary = json.loads((out / "summary.json").read_text())
    assert summary["n_slots"] == 5
    assert "25 records" in capsys.readouterr().out


def test_cli_flag_beats_config_file(cfg_file, tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", cfg_file(seed=1), "--seed", "7", "--slots", "3",
                 "--policy", "local", "--out", str(out)]) == 0
    echo = json.loads((out / "config_echo.json").read_text())
    assert (echo["seed"], echo["n_slots"], echo["policy"]) == (7, 3, "local")


def test_same_run_twice_is_byte_identical(cfg_file, tmp_path):
    path = cfg_file(n_slots=40)
    for name in ("a", "b"):
        assert main(["run", "--config", path, "--out", str(tmp_path / name)]) == 0
    for f in ("trace.csv", "summary.json", "distance_table.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_compare(cfg_file, tmp_path, capsys):
    out = tmp_path / "cmp"
    assert main(["compare", "--config", cfg_file(n_slots=50), "--policies", "daee,local,offload",
                 "--out", str(out)]) == 0
    data = json.loads((out / "compare.json").read_text())
    assert list(data) == ["daee", "local", "offload"]
    assert len({d["arrived_bits"] for d in data.values()}) == 1
    assert "policy" in capsys.readouterr().out


def test_missing_config_exit_3(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.json")]) == 3
    assert "not found" in capsys.readouterr().err


def test_invalid_config_exit_3(cfg_file, tmp_path):
    assert main(["run", "--config", cfg_file(n_devices=0), "--out", str(tmp_path)]) == 3
    assert main(["run", "--config", cfg_file(bogus=1), "--out", str(tmp_path)]) == 3


@pytest.mark.parametrize("argv", [
    ["run", "--config", "x.json", "--frobnicate"],
    ["fly"],
    [],
])
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    err = capsys.readouterr().err
    assert err.startswith("mecsim: usage error") and err.count("\n") == 1


def test_conflicting_policies_exit_2(cfg_file, tmp_path):
    path = cfg_file()
    assert main(["run", "--config", path, "--policy", "daee", "--policy", "local", "--out", str(tmp_path)]) == 2
    assert main(["compare", "--config", path, "--policies", "daee,daee", "--out", str(tmp_path)]) == 2
    assert main(["compare", "--config", path, "--policies", "daee,warp", "--out", str(tmp_path)]) == 2


def test_unwritable_output_exit_4(cfg_file, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", "--config", cfg_file(), "--out", str(blocker / "out")]) == 4


def test_report_commands(cfg_file, tmp_path, capsys):
    out = tmp_path / "out"
    main(["run", "--config", cfg_file(), "--out", str(out)])
    capsys.readouterr()
    assert main(["report", "distance-table", "--trace", str(out / "trace.csv"), "--steps", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "Time Step,Device 1,Device 2,Device 3,Device 4,Device 5"
    assert len(lines) == 3
    assert main(["report", "gnuplot", "--table", str(out / "distance_table.csv")]) == 0
    assert "Device 5" in capsys.readouterr().out
    assert main(["report", "distance-table", "--trace", str(tmp_path / "none.csv")]) == 4


def test_demo_vote(capsys):
    assert main(["hfl", "demo-vote"]) == 0
    out = capsys.readouterr().out
    assert out.strip().splitlines()[-1] == "winner: v2"
    assert "v2: weight 5" in out
    assert main(["hfl", "demo-vote", "--counts", "A=1,B=3,C=2"]) == 0
    assert capsys.readouterr().out.strip().endswith("winner: v3")
    assert main(["hfl", "demo-vote", "--counts", "A=x"]) == 2


def test_hfl_round(tmp_path, capsys):
    p = tmp_path / "h.json"
    p.write_text(json.dumps({"rounds": 4, "eta": 0.5, "local_steps": 20}))
    assert main(["hfl", "round", "--config", str(p)]) == 0
    data = json.loads(capsys.readouterr().out)
    dists = [r["distance_to_optimum"] for r in data["rounds"]]
    assert len(dists) == 5
    assert dists[-1] < 1e-6 < dists[0]
    p.write_text(json.dumps({"eta": -1}))
    assert main(["hfl", "round", "--config", str(p)]) == 3
