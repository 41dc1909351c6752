"""File formats: load time series (CSV), power systems and run configuration (YAML)."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields
from datetime import datetime
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .system import Generator, Line, Network, PowerSystem, compute_ptdf


class DataError(ValueError):
    """Malformed input file; the message names the file and line."""


# -- time series ---------------------------------------------------------------

@dataclass
class TimeSeries:
    """Uniformly stepped load series (MW) with any missing stamps listed in ``gaps``.

    ``values`` has one entry per present row; use :meth:`filled` for a
    gap-free series on the full grid.
    """

    timestamps: list
    values: np.ndarray
    step: Any
    gaps: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.values)

    def filled(self) -> np.ndarray:
        """Values on the full grid, missing stamps linearly interpolated."""
        if not self.gaps:
            return np.asarray(self.values, dtype=float)
        t0 = self.timestamps[0]
        pos = np.array([_steps_between(t0, t, self.step) for t in self.timestamps], dtype=float)
        grid = np.arange(int(pos[-1]) + 1, dtype=float)
        return np.interp(grid, pos, self.values)


def _parse_stamp(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        return datetime.fromisoformat(text)


def _steps_between(a, b, step) -> float:
    return (b - a) / step


def load_timeseries(path: str | Path) -> TimeSeries:
    """Read a ``timestamp,load_mw`` CSV.

    Timestamps are ISO-8601 datetimes or integers (stage indices). They must
    increase strictly at a uniform step; a jump of a whole number of steps is
    accepted and reported in ``gaps``.

    Raises:
        DataError: on a malformed header or row, a non-numeric or non-finite
            load, a duplicate or decreasing timestamp, or a non-uniform step.
    """
    path = Path(path)
    stamps, values, linenos = [], [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        cols = [h.strip().lower() for h in header]
        if len(cols) < 2 or cols[0] != "timestamp" or cols[1] != "load_mw":
            raise DataError(f"{path}:1: header must be 'timestamp,load_mw', got {','.join(header)!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2:
                raise DataError(f"{path}:{lineno}: expected two fields, got {len(row)}")
            try:
                t = _parse_stamp(row[0])
            except ValueError:
                raise DataError(f"{path}:{lineno}: cannot parse timestamp {row[0]!r}") from None
            try:
                v = float(row[1])
            except ValueError:
                raise DataError(f"{path}:{lineno}: load {row[1]!r} is not numeric") from None
            if not math.isfinite(v):
                raise DataError(f"{path}:{lineno}: load {row[1]!r} is not finite")
            if stamps:
                if type(t) is not type(stamps[-1]):
                    raise DataError(f"{path}:{lineno}: mixed timestamp kinds")
                if t == stamps[-1]:
                    raise DataError(f"{path}:{lineno}: duplicate timestamp {row[0].strip()}")
                if t < stamps[-1]:
                    raise DataError(f"{path}:{lineno}: timestamp {row[0].strip()} goes backwards")
            stamps.append(t)
            values.append(v)
            linenos.append(lineno)

    if not stamps:
        raise DataError(f"{path}: no data rows")
    return _check_grid(path, stamps, values, linenos)


def _check_grid(path, stamps, values, linenos) -> TimeSeries:
    if len(stamps) == 1:
        return TimeSeries(stamps, np.array(values), None, [])
    diffs = [b - a for a, b in zip(stamps, stamps[1:])]
    step = min(diffs)
    gaps = []
    for i, dt in enumerate(diffs):
        k = dt / step
        if abs(k - round(k)) > 1e-9:
            raise DataError(f"{path}:{linenos[i + 1]}: non-uniform step, {stamps[i]} -> "
                            f"{stamps[i + 1]} is not a multiple of {step}")
        for j in range(1, int(round(k))):
            gaps.append(stamps[i] + j * step)
    return TimeSeries(stamps, np.array(values, dtype=float), step, gaps)


def save_timeseries(path: str | Path, values, start: int = 0) -> None:
    """Write ``values`` as a ``timestamp,load_mw`` CSV with integer stamps."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", "load_mw"])
        for i, v in enumerate(values):
            w.writerow([start + i, repr(float(v))])


# -- power systems ---------------------------------------------------------------

_GEN_FIELDS = [f.name for f in fields(Generator)]
_GEN_REQUIRED = ["id", "bus", "p_min", "p_max", "ramp_up", "ramp_down"]


def _require(doc: dict, keys, where: str) -> None:
    if not isinstance(doc, dict):
        raise DataError(f"{where}: expected a mapping")
    missing = [k for k in keys if k not in doc]
    if missing:
        raise DataError(f"{where}: missing {', '.join(missing)}")


def system_from_dict(doc: dict, source: str = "system") -> PowerSystem:
    """Build a :class:`PowerSystem` from the documented YAML schema."""
    _require(doc, ["buses", "generators"], source)
    buses, shares = [], []
    for i, b in enumerate(doc["buses"]):
        _require(b, ["id"], f"{source}: buses[{i}]")
        buses.append(int(b["id"]))
        shares.append(float(b.get("load_share", 0.0)))
    lines = []
    for i, ln in enumerate(doc.get("lines") or []):
        where = f"{source}: lines[{i}]"
        _require(ln, ["from", "to", "limit"], where)
        for end in ("from", "to"):
            if int(ln[end]) not in buses:
                raise DataError(f"{where}: unknown bus {ln[end]}")
        try:
            lines.append(Line(str(ln.get("id", f"L{i + 1}")), int(ln["from"]), int(ln["to"]),
                              float(ln["limit"]),
                              None if ln.get("reactance") is None else float(ln["reactance"])))
        except ValueError as exc:
            raise DataError(f"{where}: {exc}") from None
    gens = []
    for i, g in enumerate(doc["generators"]):
        where = f"{source}: generators[{i}]"
        _require(g, _GEN_REQUIRED, where)
        unknown = set(g) - set(_GEN_FIELDS)
        if unknown:
            raise DataError(f"{where}: unknown field(s) {', '.join(sorted(unknown))}")
        kw = {k: g[k] for k in _GEN_FIELDS if k in g}
        kw["id"] = str(kw["id"])
        kw["bus"] = int(kw["bus"])
        for k in ("min_up", "min_down"):
            if k in kw:
                if float(kw[k]) != int(kw[k]):
                    raise DataError(f"{where}: {k} must be an integer")
                kw[k] = int(kw[k])
        for k in ("p_min", "p_max", "ramp_up", "ramp_down", "c1", "c0", "startup_cost",
                  "shutdown_cost"):
            if k in kw:
                kw[k] = float(kw[k])
        try:
            gens.append(Generator(**kw))
        except ValueError as exc:
            raise DataError(f"{where}: {exc}") from None

    if doc.get("ptdf") is not None:
        ptdf = np.asarray(doc["ptdf"], dtype=float)
        if ptdf.shape != (len(lines), len(buses)):
            raise DataError(f"{source}: ptdf must be {len(lines)} x {len(buses)}, got {ptdf.shape}")
    elif lines:
        try:
            ptdf = compute_ptdf(buses, lines, doc.get("slack_bus"))
        except ValueError as exc:
            raise DataError(f"{source}: {exc}") from None
    else:
        ptdf = np.zeros((0, len(buses)))
    try:
        net = Network(tuple(buses), tuple(lines), ptdf, np.array(shares))
        meta = {"slack_bus": doc["slack_bus"]} if doc.get("slack_bus") is not None else {}
        return PowerSystem(tuple(gens), net, str(doc.get("name", "")), meta)
    except ValueError as exc:
        raise DataError(f"{source}: {exc}") from None


def system_to_dict(system: PowerSystem) -> dict:
    net = system.network
    doc: dict = {"name": system.name}
    if system.meta.get("slack_bus") is not None:
        doc["slack_bus"] = system.meta["slack_bus"]
    doc["buses"] = [{"id": b, "load_share": float(s)} for b, s in zip(net.buses, net.load_share)]
    doc["lines"] = [{"id": ln.id, "from": ln.from_bus, "to": ln.to_bus, "limit": ln.limit,
                     "reactance": ln.reactance} for ln in net.lines]
    doc["generators"] = [{k: getattr(g, k) for k in _GEN_FIELDS} for g in system.generators]
    recomputable = net.lines and all(ln.reactance for ln in net.lines)
    if net.lines and not (recomputable and np.array_equal(
            compute_ptdf(net.buses, net.lines, system.meta.get("slack_bus")), net.ptdf)):
        doc["ptdf"] = net.ptdf.tolist()
    return doc


def load_system(path: str | Path) -> PowerSystem:
    """Read and validate a YAML system file.

    Raises:
        DataError: on schema violations or load shares not summing to one.
    """
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise DataError(f"{path}: invalid YAML: {exc}") from None
    return system_from_dict(doc, str(path))


def save_system(system: PowerSystem, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(system_to_dict(system), sort_keys=False))


# -- run configuration -------------------------------------------------------------

@dataclass
class RunConfig:
    """Settings for a build or simulation run; CLI flags override file values."""

    data: str | None = None
    system: str | None = None
    library: str | None = None
    realized: str | None = None
    output: str | None = None
    pricing: str | None = None
    P: int = 24
    T: int = 5
    c: int = 3
    N: int = 2000
    seed: int = 0
    step_a0: float = 1.0
    step_n0: float = 30.0
    structure: list | None = None
    epochs: int = 5
    first_epoch: int = 0
    mip_gap: float = 1e-6
    time_limit: float | None = None
    node_limit: int | None = None
    backend: str = "auto"
    binary_threshold: int = 200
    workers: int = 1

    def validate(self, require_paths=()) -> None:
        if self.T < 2:
            raise DataError("config: T must be at least 2")
        if self.c < 1:
            raise DataError("config: c must be at least 1")
        if self.N < 1:
            raise DataError("config: N must be at least 1")
        if self.P < 1:
            raise DataError("config: P must be at least 1")
        if self.epochs < 1:
            raise DataError("config: epochs must be at least 1")
        for name in require_paths:
            value = getattr(self, name)
            if value is None:
                raise DataError(f"config: {name} path is required")
            if not Path(value).exists():
                raise DataError(f"config: {name} path {value} does not exist")


def load_config(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    """Config from a YAML file (optional) with non-``None`` ``overrides`` applied on top."""
    values: dict = {}
    known = {f.name for f in fields(RunConfig)}
    if path is not None:
        path = Path(path)
        doc = yaml.safe_load(path.read_text()) or {}
        if not isinstance(doc, dict):
            raise DataError(f"{path}: config must be a mapping")
        unknown = set(doc) - known
        if unknown:
            raise DataError(f"{path}: unknown config key(s) {', '.join(sorted(unknown))}")
        base = path.parent
        for k, v in doc.items():
            if k in ("data", "system", "library", "realized", "output", "pricing") and v is not None:
                v = str((base / v) if not Path(v).is_absolute() else Path(v))
            values[k] = v
    for k, v in (overrides or {}).items():
        if k in known and v is not None:
            values[k] = v
    return RunConfig(**values)
