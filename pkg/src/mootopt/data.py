"""MOOT-format tables: typed columns, goal directions, rows with lazy labels.

A MOOT CSV is a plain comma-separated file whose header encodes column
roles: a leading uppercase letter marks a numeric column, a trailing '+'
or '-' marks a goal to maximize or minimize, and a trailing 'X' marks a
column to ignore. Everything else is an independent input. Cells holding
'?' are missing.

Labeling a row means revealing its goal values; that is the scarce
resource every optimizer here budgets for, so the label flag and the
evaluation counter live together on the Dataset.
"""

from __future__ import annotations

import csv
import io
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

NUMERIC = "numeric"
SYMBOLIC = "symbolic"
INDEPENDENT = "independent"
GOAL = "goal"
IGNORED = "ignored"
MINIMIZE = "minimize"
MAXIMIZE = "maximize"

MISSING = "?"

Cell = Union[float, str, None]


class ParseError(ValueError):
    """Malformed header or body in a MOOT CSV."""


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    index: int
    kind: str  # NUMERIC | SYMBOLIC
    role: str  # INDEPENDENT | GOAL | IGNORED
    direction: Optional[str] = None  # MINIMIZE | MAXIMIZE for goals, else None


@dataclass
class NumStats:
    lo: float = 0.0
    hi: float = 0.0
    mean: float = 0.0
    median: float = 0.0
    sd: float = 0.0
    n: int = 0


@dataclass
class SymStats:
    mode: str = ""
    freq: dict[str, int] = field(default_factory=dict)
    n: int = 0


ColumnStats = Union[NumStats, SymStats]


@dataclass
class Row:
    id: int
    x: list[Cell]
    y: list[Optional[float]]
    labeled: bool = False


def parse_header(names: list[str]) -> list[ColumnSpec]:
    """Turn header names into column specs per the MOOT naming convention.

    Raises ParseError on duplicate names, zero goal columns, or zero
    independent columns.
    """
    if not names:
        raise ParseError("empty header")
    seen: set[str] = set()
    specs: list[ColumnSpec] = []
    for i, raw in enumerate(names):
        name = raw.strip()
        if not name:
            raise ParseError(f"blank column name at position {i}")
        if name in seen:
            raise ParseError(f"duplicate column name: {name!r}")
        seen.add(name)
        if name.endswith("+"):
            specs.append(ColumnSpec(name, i, NUMERIC, GOAL, MAXIMIZE))
        elif name.endswith("-"):
            specs.append(ColumnSpec(name, i, NUMERIC, GOAL, MINIMIZE))
        else:
            kind = NUMERIC if name[0].isupper() else SYMBOLIC
            role = IGNORED if name.endswith("X") else INDEPENDENT
            specs.append(ColumnSpec(name, i, kind, role))
    if not any(s.role == GOAL for s in specs):
        raise ParseError("header has zero goal columns (none end with '+' or '-')")
    if not any(s.role == INDEPENDENT for s in specs):
        raise ParseError("header has zero independent columns")
    return specs


def classify_dims(n_independent: int) -> str:
    """low / medium / high stratum from the independent-column count."""
    if n_independent < 6:
        return "low"
    if n_independent <= 11:
        return "medium"
    return "high"


class Dataset:
    """An in-memory MOOT table plus per-run label bookkeeping.

    Columns, rows' cell values, and stats are fixed after load. The only
    mutable state is which rows are labeled; `fresh()` hands each run a
    private copy of that state so runs can execute in parallel.
    """

    def __init__(self, name: str, columns: list[ColumnSpec], rows: list[Row],
                 stats: list[Optional[ColumnStats]],
                 ignored_cells: Optional[list[list[str]]] = None):
        self.name = name
        self.columns = columns
        self.rows = rows
        self.stats = stats
        self.x_cols = [c for c in columns if c.role == INDEPENDENT]
        self.y_cols = [c for c in columns if c.role == GOAL]
        self.dims = classify_dims(len(self.x_cols))
        self._ignored_cells = ignored_cells
        self._label_order: list[Row] = [r for r in rows if r.labeled]
        self._cache: dict[str, object] = {}

    # -- label accounting ---------------------------------------------------

    @property
    def evaluations(self) -> int:
        return len(self._label_order)

    def label(self, row: Row) -> Row:
        """Reveal a row's goal values. Each row may be labeled once."""
        if row.labeled:
            raise ValueError(f"row {row.id} is already labeled")
        row.labeled = True
        self._label_order.append(row)
        return row

    @property
    def label_order(self) -> list[Row]:
        return list(self._label_order)

    def labeled_rows(self) -> list[Row]:
        return [r for r in self.rows if r.labeled]

    def unlabeled_rows(self) -> list[Row]:
        return [r for r in self.rows if not r.labeled]

    def fresh(self) -> "Dataset":
        """A copy with all labels cleared; cell data and stats are shared."""
        rows = [Row(r.id, r.x, r.y) for r in self.rows]
        ds = Dataset.__new__(Dataset)
        ds.name = self.name
        ds.columns = self.columns
        ds.rows = rows
        ds.stats = self.stats
        ds.x_cols = self.x_cols
        ds.y_cols = self.y_cols
        ds.dims = self.dims
        ds._ignored_cells = self._ignored_cells
        ds._label_order = []
        ds._cache = self._cache  # derived from immutable cell data only
        return ds

    # -- normalization and distance ----------------------------------------

    def col_stats(self, col: ColumnSpec) -> Optional[ColumnStats]:
        return self.stats[col.index]

    def norm(self, col: ColumnSpec, v: float) -> float:
        """Map a numeric value into [0,1] using the column's observed range.

        Degenerate columns (hi == lo) map everything to 0.5 so they drop
        out of distances; out-of-range values clamp.
        """
        st = self.stats[col.index]
        if not isinstance(st, NumStats):
            raise ValueError(f"norm() needs a numeric column, got {col.name!r}")
        if st.hi == st.lo:
            return 0.5
        return min(1.0, max(0.0, (v - st.lo) / (st.hi - st.lo)))

    # -- cached numeric views used by the surrogates -------------------------

    def x_views(self) -> dict:
        """Whole-table arrays over the independent columns, built once.

        Returns a dict with:
          num_pos   x-list positions of numeric columns
          sym_pos   x-list positions of symbolic columns
          alphabets sorted observed values per symbolic column
          X_num     (n_rows, n_num) normalized values, NaN where missing
          X_sym     (n_rows, n_sym) alphabet codes, -1 where missing
        Only x values feed these views, so using them never leaks labels.
        """
        if "x_views" in self._cache:
            return self._cache["x_views"]  # type: ignore[return-value]
        num_pos = [i for i, c in enumerate(self.x_cols) if c.kind == NUMERIC]
        sym_pos = [i for i, c in enumerate(self.x_cols) if c.kind == SYMBOLIC]
        alphabets = []
        for p in sym_pos:
            st = self.stats[self.x_cols[p].index]
            alphabets.append(sorted(st.freq) if isinstance(st, SymStats) else [])
        n = len(self.rows)
        X_num = np.full((n, len(num_pos)), np.nan)
        X_sym = np.full((n, len(sym_pos)), -1, dtype=np.int64)
        for i, row in enumerate(self.rows):
            for j, p in enumerate(num_pos):
                v = row.x[p]
                if v is not None:
                    X_num[i, j] = self.norm(self.x_cols[p], float(v))
            for j, p in enumerate(sym_pos):
                v = row.x[p]
                if v is not None:
                    try:
                        X_sym[i, j] = alphabets[j].index(v)
                    except ValueError:
                        pass  # value never seen at load; keep as missing
        views = {"num_pos": num_pos, "sym_pos": sym_pos, "alphabets": alphabets,
                 "X_num": X_num, "X_sym": X_sym}
        self._cache["x_views"] = views
        return views


def x_distance(a: Row, b: Row, ds: Dataset) -> float:
    """Euclidean distance over independent columns.

    Numeric cells compare after normalization; symbolic cells contribute
    0 when equal else 1; whenever either cell is missing the column
    contributes 1 (pessimistic, keeps the distance bounded).
    """
    total = 0.0
    for i, col in enumerate(ds.x_cols):
        va, vb = a.x[i], b.x[i]
        if va is None or vb is None:
            d = 1.0
        elif col.kind == NUMERIC:
            d = ds.norm(col, float(va)) - ds.norm(col, float(vb))
        else:
            d = 0.0 if va == vb else 1.0
        total += d * d
    return math.sqrt(total)


def _parse_cell(raw: str, col: ColumnSpec, row_no: int) -> Cell:
    cell = raw.strip()
    if cell == MISSING:
        return None
    if col.kind == NUMERIC:
        try:
            return float(cell)
        except ValueError:
            raise ParseError(
                f"row {row_no}: non-numeric cell {cell!r} in numeric column {col.name!r}"
            ) from None
    return cell


def _column_stats(col: ColumnSpec, cells: list[Cell]) -> ColumnStats:
    if col.kind == NUMERIC:
        vals = [float(v) for v in cells if v is not None]
        if not vals:
            return NumStats()
        return NumStats(lo=min(vals), hi=max(vals),
                        mean=statistics.fmean(vals),
                        median=statistics.median(vals),
                        sd=statistics.pstdev(vals) if len(vals) > 1 else 0.0,
                        n=len(vals))
    freq: dict[str, int] = {}
    for v in cells:
        if v is not None:
            freq[str(v)] = freq.get(str(v), 0) + 1
    if not freq:
        return SymStats()
    mode = min((k for k, c in freq.items() if c == max(freq.values())))
    return SymStats(mode=mode, freq=freq, n=sum(freq.values()))


def load_csv(source: Union[str, Path, io.IOBase], name: Optional[str] = None) -> Dataset:
    """Load a MOOT CSV from a path or an open (byte or text) stream.

    All rows start unlabeled. Column stats cover the whole file; they feed
    prompts and reports only, never the surrogates, which see just labeled
    rows.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        ds_name = name or path.stem
        with open(path, "r", encoding="utf-8", newline="") as fh:
            return _load_csv_stream(fh, ds_name)
    if isinstance(source, (io.RawIOBase, io.BufferedIOBase)) or (
            hasattr(source, "read") and isinstance(source.read(0), bytes)):
        text = io.TextIOWrapper(source, encoding="utf-8", newline="")
        return _load_csv_stream(text, name or "<stream>")
    return _load_csv_stream(source, name or "<stream>")


def _load_csv_stream(fh, name: str) -> Dataset:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file: no header record") from None
    columns = parse_header(header)
    x_cols = [c for c in columns if c.role == INDEPENDENT]
    y_cols = [c for c in columns if c.role == GOAL]
    ignored_cols = [c for c in columns if c.role == IGNORED]

    rows: list[Row] = []
    ignored_cells: list[list[str]] = []
    col_cells: list[list[Cell]] = [[] for _ in columns]
    for row_no, record in enumerate(reader, start=2):
        if not record:
            continue  # blank trailing line
        if len(record) != len(columns):
            raise ParseError(
                f"row {row_no}: expected {len(columns)} cells, found {len(record)}")
        parsed = [_parse_cell(raw, col, row_no) for raw, col in zip(record, columns)]
        for cells, v in zip(col_cells, parsed):
            cells.append(v)
        x = [parsed[c.index] for c in x_cols]
        y = [parsed[c.index] for c in y_cols]  # type: ignore[list-item]
        rows.append(Row(id=len(rows), x=x, y=y))
        if ignored_cols:
            ignored_cells.append([record[c.index].strip() for c in ignored_cols])

    stats: list[Optional[ColumnStats]] = [
        None if c.role == IGNORED else _column_stats(c, col_cells[c.index])
        for c in columns
    ]
    return Dataset(name, columns, rows, stats,
                   ignored_cells if ignored_cols else None)


def format_cell(v: Cell) -> str:
    if v is None:
        return MISSING
    if isinstance(v, float):
        if math.isfinite(v) and v == int(v) and abs(v) < 1e16:
            return str(int(v))
        return repr(v)
    return str(v)


def save_csv(ds: Dataset, target: Union[str, Path, io.IOBase]) -> None:
    """Write the dataset back out in its original column order."""
    if isinstance(target, (str, Path)):
        with open(target, "w", encoding="utf-8", newline="") as fh:
            save_csv(ds, fh)
        return
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow([c.name for c in ds.columns])
    x_index = {c.index: i for i, c in enumerate(ds.x_cols)}
    y_index = {c.index: i for i, c in enumerate(ds.y_cols)}
    ignored_index = {c.index: i for i, c in
                     enumerate(c for c in ds.columns if c.role == IGNORED)}
    for row_pos, row in enumerate(ds.rows):
        record = []
        for col in ds.columns:
            if col.role == INDEPENDENT:
                record.append(format_cell(row.x[x_index[col.index]]))
            elif col.role == GOAL:
                record.append(format_cell(row.y[y_index[col.index]]))
            else:
                cells = ds._ignored_cells or []
                record.append(cells[row_pos][ignored_index[col.index]])
        writer.writerow(record)
