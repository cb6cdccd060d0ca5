"""File formats: JSON config, trace CSV, summary JSON, distance table CSV.

All writers go through a temp file in the destination directory followed by
``os.replace``, so a reader never sees a half-written file. Output is a
pure function of its input, byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Any, Iterable, Sequence

from .domain import ConfigError, SimConfig, validate_config
from .engine import RunSummary, SlotRecord

TRACE_HEADER = ["t", "device_id", "distance_m", "q_bits", "h_bits", "action", "energy_j", "deadline_missed"]

_CENT = Decimal("0.01")


class IoFailure(OSError):
    pass


def fmt_distance(x: float) -> str:
    """Two decimals, round-half-even on the shortest decimal repr of ``x``."""
    return str(Decimal(repr(float(x))).quantize(_CENT, rounding=ROUND_HALF_EVEN))


def atomic_write(path: str | os.PathLike, data: str) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc.strerror or exc}") from exc


def load_config(path: str | os.PathLike, overrides: dict[str, Any] | None = None) -> SimConfig:
    """Read and validate a JSON config; ``overrides`` win over file values."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read config {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None
    if isinstance(raw, dict) and overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    return validate_config(raw)


def dump_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def trace_to_csv(trace: Iterable[SlotRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for r in trace:
        w.writerow([r.slot, r.device, fmt_distance(r.distance_m), r.q_bits, repr(r.h_bits),
                    r.action, repr(r.energy_j), r.deadline_missed])
    return buf.getvalue()


def write_trace(trace: Iterable[SlotRecord], path: str | os.PathLike) -> None:
    atomic_write(path, trace_to_csv(trace))


def parse_trace(text: str) -> list[SlotRecord]:
    rows = csv.reader(io.StringIO(text))
    header = next(rows, None)
    if header != TRACE_HEADER:
        raise ValueError(f"unexpected trace header: {header}")
    return [
        SlotRecord(int(t), int(dev), float(d), int(q), float(h), action, float(e), int(m))
        for t, dev, d, q, h, action, e, m in rows
    ]


def read_trace(path: str | os.PathLike) -> list[SlotRecord]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return parse_trace(fh.read())
    except ValueError as exc:
        raise IoFailure(f"malformed trace {path}: {exc}") from exc
    except OSError as exc:
        raise IoFailure(f"cannot read trace {path}: {exc.strerror or exc}") from exc


def distance_table_csv(trace: Sequence[SlotRecord], steps: int | None = None) -> str:
    """Slots as rows, devices as columns, like ``Time Step,Device 1,...``."""
    per_slot: dict[int, dict[int, float]] = {}
    devices: set[int] = set()
    for r in trace:
        if steps is not None and r.slot >= steps:
            continue
        per_slot.setdefault(r.slot, {})[r.device] = r.distance_m
        devices.add(r.device)
    cols = sorted(devices)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["Time Step"] + [f"Device {d + 1}" for d in cols])
    for t in sorted(per_slot):
        row = per_slot[t]
        w.writerow([t] + [fmt_distance(row[d]) if d in row else "" for d in cols])
    return buf.getvalue()


def gnuplot_script(table_path: str, n_devices: int, output: str = "distances.png") -> str:
    plots = ", \\\n     ".join(
        f"'{table_path}' using 1:{d + 2} with linespoints title 'Device {d + 1}'" for d in range(n_devices)
    )
    return (
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        "set terminal pngcairo size 900,500\n"
        f"set output '{output}'\n"
        "set xlabel 'Time step'\n"
        "set ylabel 'Distance to MEC server (m)'\n"
        f"plot {plots}\n"
    )


def write_bundle(out_dir: str | os.PathLike, cfg: SimConfig, trace: Sequence[SlotRecord], summary: RunSummary) -> None:
    out = Path(out_dir)
    write_trace(trace, out / "trace.csv")
    atomic_write(out / "summary.json", dump_json(summary.to_dict()))
    atomic_write(out / "distance_table.csv", distance_table_csv(trace))
    atomic_write(out / "config_echo.json", dump_json(cfg.to_dict()))
