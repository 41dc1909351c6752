"""Fixed-format MPS writer and a matching reader.

Names are at most eight characters. Values are written with ``repr`` so a
round trip is exact; a value longer than the twelve-character field simply
extends it, which every whitespace-tokenizing reader accepts.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .lp import LinearProgram

OBJ_ROW = "COST"
_NAME_OK = re.compile(r"^[A-Za-z0-9_.\[\]()-]{1,8}$")


def _names(given, prefix: str, count: int) -> list[str]:
    if given is not None and all(_NAME_OK.match(s) for s in given) \
            and len(set(given)) == count and OBJ_ROW not in given:
        return list(given)
    width = max(7, len(str(count)))
    if width + 1 > 8:
        raise ValueError(f"too many {prefix} entries for eight-character names")
    return [f"{prefix}{i + 1:0{width}d}" for i in range(count)]


def _num(v: float) -> str:
    v = float(v)
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _line(code: str, name: str, *pairs) -> str:
    out = f" {code:<2} {name:<8}"
    for i, (key, val) in enumerate(pairs):
        out += ("  " if i == 0 else "   ") + f"{key:<8}  {_num(val):>12}"
    return out.rstrip()


def format_mps(lp: LinearProgram) -> str:
    """Render ``lp`` as fixed-format MPS text."""
    if lp.n_vars == 0:
        raise ValueError("cannot export an empty problem (no variables)")
    cols = _names(lp.col_names, "C", lp.n_vars)
    rows = _names(lp.row_names, "R", lp.n_rows)
    name = (lp.name or "LP").replace(" ", "_")[:8]

    out = [f"NAME          {name}", "ROWS", f" N  {OBJ_ROW}"]
    out += [f" {s}  {r}" for s, r in zip(lp.sense, rows)]
    out.append("COLUMNS")
    A = lp.A.tocsc()
    in_int = False
    marker = 0
    for j in range(lp.n_vars):
        if lp.integer[j] != in_int:
            tag = "'INTORG'" if lp.integer[j] else "'INTEND'"
            out.append(f"    MARKER{marker:04d}  'MARKER'                 {tag}")
            marker += 1
            in_int = bool(lp.integer[j])
        entries = []
        if lp.c[j] != 0 or A.indptr[j] == A.indptr[j + 1]:
            entries.append((OBJ_ROW, lp.c[j]))
        for k in range(A.indptr[j], A.indptr[j + 1]):
            if A.data[k] != 0:
                entries.append((rows[A.indices[k]], A.data[k]))
        if not entries:
            entries.append((OBJ_ROW, 0.0))
        for k in range(0, len(entries), 2):
            out.append(_line("", cols[j], *entries[k:k + 2]))
    if in_int:
        out.append(f"    MARKER{marker:04d}  'MARKER'                 'INTEND'")

    out.append("RHS")
    rhs = [(OBJ_ROW, -lp.offset)] if lp.offset else []
    rhs += [(rows[i], lp.rhs[i]) for i in range(lp.n_rows) if lp.rhs[i] != 0]
    for k in range(0, len(rhs), 2):
        out.append(_line("", "RHS", *rhs[k:k + 2]))

    ranged = [i for i in range(lp.n_rows) if np.isfinite(lp.ranges[i])]
    if ranged:
        out.append("RANGES")
        for i in ranged:
            out.append(_line("", "RNG", (rows[i], lp.ranges[i])))

    bounds = []
    for j in range(lp.n_vars):
        lo, hi = lp.lower[j], lp.upper[j]
        if lp.integer[j]:
            bounds += [("LO", cols[j], lo), ("UP", cols[j], hi)]
        elif lo == hi:
            bounds.append(("FX", cols[j], lo))
        elif np.isneginf(lo) and np.isposinf(hi):
            bounds.append(("FR", cols[j], None))
        else:
            if np.isneginf(lo):
                bounds.append(("MI", cols[j], None))
            elif lo != 0 or hi < 0:
                bounds.append(("LO", cols[j], lo))
            if np.isfinite(hi):
                bounds.append(("UP", cols[j], hi))
    if bounds:
        out.append("BOUNDS")
        for code, col, val in bounds:
            if val is None:
                out.append(f" {code} BND       {col}")
            else:
                out.append(_line(code, "BND", (col, val)))
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def export_mps(lp: LinearProgram, destination: str | Path) -> Path:
    """Write ``lp`` to ``destination`` in fixed-format MPS and return the path."""
    text = format_mps(lp)
    path = Path(destination)
    path.write_text(text)
    return path


def read_mps(path: str | Path) -> LinearProgram:
    """Parse an MPS file (fixed or free spacing, names without blanks)."""
    section = None
    name = "LP"
    obj_row = None
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    row_pos: dict[str, int] = {}
    col_index: dict[str, int] = {}
    cost: list[float] = []
    integer: list[bool] = []
    trip_r: list[int] = []
    trip_c: list[int] = []
    trip_v: list[float] = []
    rhs: dict[str, float] = {}
    ranges: dict[str, float] = {}
    bounds: list[tuple[str, str, float | None]] = []
    in_int = False
    offset = 0.0

    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw[0].isspace():
            head = raw.split()
            section = head[0].upper()
            if section == "NAME" and len(head) > 1:
                name = head[1]
            if section == "ENDATA":
                break
            continue
        tok = raw.split()
        try:
            if section == "ROWS":
                sense, rname = tok[0].upper(), tok[1]
                if sense == "N":
                    if obj_row is None:
                        obj_row = rname
                    continue
                row_sense[rname] = sense
                row_pos[rname] = len(row_order)
                row_order.append(rname)
            elif section == "COLUMNS":
                if len(tok) >= 3 and tok[1] == "'MARKER'":
                    in_int = tok[2] == "'INTORG'"
                    continue
                cname = tok[0]
                if cname not in col_index:
                    col_index[cname] = len(cost)
                    cost.append(0.0)
                    integer.append(in_int)
                j = col_index[cname]
                for rname, val in zip(tok[1::2], tok[2::2]):
                    v = float(val)
                    if rname == obj_row:
                        cost[j] += v
                    else:
                        if rname not in row_pos:
                            raise ValueError(f"unknown row {rname}")
                        trip_r.append(row_pos[rname])
                        trip_c.append(j)
                        trip_v.append(v)
            elif section == "RHS":
                pairs = tok[1:] if len(tok) % 2 == 1 else tok
                for rname, val in zip(pairs[0::2], pairs[1::2]):
                    if rname == obj_row:
                        offset = -float(val)
                    else:
                        rhs[rname] = float(val)
            elif section == "RANGES":
                pairs = tok[1:] if len(tok) % 2 == 1 else tok
                for rname, val in zip(pairs[0::2], pairs[1::2]):
                    ranges[rname] = float(val)
            elif section == "BOUNDS":
                code = tok[0].upper()
                if code in ("FR", "MI", "PL", "BV"):
                    bounds.append((code, tok[2] if len(tok) >= 3 else tok[1], None))
                else:
                    bounds.append((code, tok[-2], float(tok[-1])))
        except (IndexError, KeyError, ValueError) as exc:
            raise ValueError(f"{path}:{lineno}: cannot parse MPS line: {raw!r}") from exc

    n, m = len(cost), len(row_order)
    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    is_int = np.array(integer, dtype=bool)
    for code, cname, val in bounds:
        j = col_index[cname]
        if code == "LO":
            lower[j] = val
        elif code == "UP":
            upper[j] = val
            if val < 0 and lower[j] == 0:
                lower[j] = -np.inf
        elif code == "FX":
            lower[j] = upper[j] = val
        elif code == "FR":
            lower[j], upper[j] = -np.inf, np.inf
        elif code == "MI":
            lower[j] = -np.inf
        elif code == "PL":
            upper[j] = np.inf
        elif code == "BV":
            lower[j], upper[j] = 0.0, 1.0
            is_int[j] = True
        else:
            raise ValueError(f"unsupported bound type {code}")
    # integer columns without an explicit upper bound are binaries by convention
    declared_up = {c for code, c, _ in bounds if code in ("UP", "FX", "BV")}
    for cname, j in col_index.items():
        if is_int[j] and cname not in declared_up:
            upper[j] = 1.0
    A = sp.csr_matrix((trip_v, (trip_r, trip_c)), shape=(m, n))
    return LinearProgram(
        np.array(cost), A, [row_sense[r] for r in row_order],
        np.array([rhs.get(r, 0.0) for r in row_order]), lower, upper, is_int,
        ranges=np.array([ranges.get(r, np.nan) for r in row_order]), offset=offset,
        col_names=list(col_index), row_names=row_order, name=name)

