"""Warm starts: random cold draws, or few-shot synthesis of promising rows.

The synthesis pipeline runs once, before the acquisition loop: label a few
random rows, split them best/rest, render a three-part prompt (role plus
column metadata, tagged examples, task), ask a synthesizer for two better
and two poorer examples, parse its markdown reply, then map each synthetic
row onto its nearest unlabeled real row and label that. A deterministic
mock synthesizer makes the whole path runnable offline; a remote client
speaks a minimal provider-agnostic chat contract.
"""

from __future__ import annotations

import math
import os
import random
import re
import threading
from dataclasses import dataclass
from typing import Callable, Optional, Protocol, Union

import numpy as np

from .data import (MISSING, NUMERIC, Cell, ColumnSpec, Dataset, NumStats,
                   Row, SymStats, format_cell)
from .objective import chebyshev, split

BETTER = "better"
POORER = "poorer"

SYSTEM_ROLE = (
    'You are given a dataset with several features. The rows have been '
    'categorized into "Best" and "Rest" examples based on their overall '
    'performance. Below are the key features and their descriptions from '
    'the dataset:')

TASK_TEXT = """1. Generate Two New Examples that are Better:
These should outperform the given "Best" examples by optimizing the relevant features to better combinations.

2. Generate Two New Examples that are Poorer:
These should under perform the given "Rest" examples by modifying the relevant features to worse combinations.

Consider the inter-dependencies between features, and ensure that the generated examples follow logical consistency within the dataset's context.

Return the output in the same markdown structure:"""


class SynthesisError(RuntimeError):
    """Synthesizer returned nothing usable (parse or transport failure)."""


@dataclass(frozen=True)
class PromptBundle:
    system: str
    examples: str
    task: str

    def messages(self) -> list[tuple[str, str]]:
        """(role, content) pairs for a chat endpoint."""
        return [("system", self.system),
                ("user", self.examples + "\n\n" + self.task)]


@dataclass(frozen=True)
class SyntheticRow:
    """x cells aligned with the dataset's independent columns; no y values."""
    cells: tuple[Cell, ...]
    claim: str  # BETTER | POORER


class Synthesizer(Protocol):
    def __call__(self, bundle: PromptBundle, e0: list[Row],
                 ds: Dataset) -> str: ...


@dataclass
class WarmStartResult:
    rows: list[Row]       # all rows labeled during the warm start
    fallback: bool        # true when synthesis failed and only cold rows remain


RngOrSeed = Union[random.Random, int]

LogFn = Callable[[dict], None]


def _as_rng(seed: RngOrSeed) -> random.Random:
    return seed if isinstance(seed, random.Random) else random.Random(seed)


def cold_start(ds: Dataset, b0: int, seed: RngOrSeed) -> list[Row]:
    """Label b0 distinct unlabeled rows uniformly at random."""
    rng = _as_rng(seed)
    pool = ds.unlabeled_rows()
    if b0 > len(pool):
        raise ValueError(f"b0={b0} exceeds the {len(pool)} unlabeled rows")
    chosen = rng.sample(pool, b0)
    for row in chosen:
        ds.label(row)
    return chosen


# -- prompt rendering --------------------------------------------------------

def _markdown_table(headers: list[str], body: list[list[str]]) -> str:
    lines = ["| " + " | ".join(headers) + " |",
             "|" + "|".join(" --- " for _ in headers) + "|"]
    for cells in body:
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines)


def _fmt_stat(v: float) -> str:
    return format_cell(float(v)) if float(v) == int(v) else f"{v:g}"


def _meta_table(ds: Dataset) -> str:
    body = []
    for col in ds.columns:
        st = ds.stats[col.index]
        if st is None:
            continue
        if isinstance(st, NumStats):
            stats = (f"lo={_fmt_stat(st.lo)}, hi={_fmt_stat(st.hi)}, "
                     f"median={_fmt_stat(st.median)}, sd={_fmt_stat(st.sd)}")
        else:
            pairs = sorted(st.freq.items(), key=lambda kv: (-kv[1], kv[0]))
            shown = " ".join(f"{k}:{c}" for k, c in pairs)
            stats = f"mode={st.mode}, freq={shown}"
        kind = "NUM" if col.kind == NUMERIC else "SYM"
        body.append([col.name, kind, stats])
    return _markdown_table(["name", "kind", "stats"], body)


def render_examples(e0: list[Row], ds: Dataset) -> str:
    """Markdown table of e0's x values with a Best/Rest tag column."""
    parts = split(e0, ds)
    best_ids = {r.id for r in parts.best}
    headers = [c.name for c in ds.x_cols] + ["label"]
    body = [[format_cell(v) for v in row.x]
            + ["Best" if row.id in best_ids else "Rest"] for row in e0]
    return _markdown_table(headers, body)


def build_prompt(e0: list[Row], ds: Dataset) -> PromptBundle:
    """Prompt sections from labeled rows (expected sorted by chebyshev)."""
    if len(e0) < 2:
        raise ValueError("build_prompt needs at least 2 labeled rows")
    system = SYSTEM_ROLE + "\n\n" + _meta_table(ds)
    examples = "Given Examples:\n\n" + render_examples(e0, ds)
    return PromptBundle(system=system, examples=examples, task=TASK_TEXT)


def render_synthetic(rows: list[SyntheticRow], ds: Dataset) -> str:
    """The markdown reply shape the task asks for; inverse of parse_response."""
    headers = [c.name for c in ds.x_cols]
    sections = []
    for claim, title in ((BETTER, "Better Examples:"), (POORER, "Poorer Examples:")):
        body = [[format_cell(v) for v in r.cells] for r in rows if r.claim == claim]
        sections.append(title + "\n\n" + _markdown_table(headers, body))
    return "\n\n".join(sections)


# -- response parsing --------------------------------------------------------

_SEPARATOR = re.compile(r"^[\s:|\-]+$")


def _coerce_cells(cells: list[str], ds: Dataset) -> Optional[tuple[Cell, ...]]:
    out: list[Cell] = []
    for col, raw in zip(ds.x_cols, cells):
        cell = raw.strip().strip("*`").strip()
        if cell == MISSING:
            out.append(None)
            continue
        if col.kind != NUMERIC:
            out.append(cell)
            continue
        try:
            v = float(cell)
        except ValueError:
            return None
        if not math.isfinite(v):
            return None
        st = ds.stats[col.index]
        if isinstance(st, NumStats) and st.n > 0:
            v = min(st.hi, max(st.lo, v))
        out.append(v)
    return tuple(out)


def parse_response(text: str, ds: Dataset) -> list[SyntheticRow]:
    """Pull better/poorer example rows out of a markdown completion.

    Tolerates prose around the tables: any non-table line naming "better"
    or "poorer" switches the claim applied to subsequent table rows.
    Numeric cells clamp into the column's observed range; rows with
    uncoercible cells are dropped; at most two rows per claim are kept.
    Raises SynthesisError unless at least one row of each claim survives.
    """
    n = len(ds.x_cols)
    header = [c.name.lower() for c in ds.x_cols]
    claim: Optional[str] = None
    rows: dict[str, list[SyntheticRow]] = {BETTER: [], POORER: []}
    for raw_line in text.splitlines():
        line = raw_line.strip()
        if not line.startswith("|"):
            low = line.lower()
            if "better" in low:
                claim = BETTER
            elif "poorer" in low or "worse" in low:
                claim = POORER
            continue
        if claim is None or _SEPARATOR.match(line):
            continue
        cells = [c.strip() for c in line.strip("|").split("|")]
        if len(cells) == n + 1:
            cells = cells[:n]  # trailing tag column
        elif len(cells) != n:
            continue
        if [c.lower() for c in cells] == header:
            continue
        coerced = _coerce_cells(cells, ds)
        if coerced is not None and len(rows[claim]) < 2:
            rows[claim].append(SyntheticRow(cells=coerced, claim=claim))
    if not rows[BETTER] or not rows[POORER]:
        raise SynthesisError(
            f"usable rows: {len(rows[BETTER])} better, {len(rows[POORER])} poorer; "
            "need at least one of each")
    return rows[BETTER] + rows[POORER]


# -- synthesizers ------------------------------------------------------------

def _class_numeric_mean(rows: list[Row], pos: int) -> Optional[float]:
    vals = [float(r.x[pos]) for r in rows if r.x[pos] is not None]
    return sum(vals) / len(vals) if vals else None


def _class_mode(rows: list[Row], pos: int) -> Optional[str]:
    freq: dict[str, int] = {}
    for r in rows:
        v = r.x[pos]
        if v is not None:
            freq[str(v)] = freq.get(str(v), 0) + 1
    if not freq:
        return None
    top = max(freq.values())
    return min(k for k, c in freq.items() if c == top)


def _interpolated(source: Row, toward: list[Row], ds: Dataset, claim: str,
                  fractions: tuple[float, float]) -> list[SyntheticRow]:
    out = []
    for f in fractions:
        cells: list[Cell] = []
        for pos, col in enumerate(ds.x_cols):
            v = source.x[pos]
            if col.kind == NUMERIC:
                mean = _class_numeric_mean(toward, pos)
                if mean is None:
                    cells.append(v)
                elif v is None:
                    cells.append(mean)
                else:
                    cells.append(float(v) + f * (mean - float(v)))
            else:
                mode = _class_mode(toward, pos)
                cells.append(mode if mode is not None else v)
        out.append(SyntheticRow(cells=tuple(cells), claim=claim))
    return out


def mock_synthesize(e0: list[Row], ds: Dataset) -> list[SyntheticRow]:
    """Deterministic stand-in for the LLM.

    Better rows nudge the top-ranked row 10% then 20% of the way toward
    the best half's per-column mean (mode for symbolics); poorer rows do
    the same from the bottom-ranked row toward the rest half. Values never
    leave the observed column range because interpolation cannot overshoot
    either endpoint.
    """
    parts = split(e0, ds)
    top = parts.best[0]
    bottom = parts.rest[-1]
    return (_interpolated(top, parts.best, ds, BETTER, (0.1, 0.2))
            + _interpolated(bottom, parts.rest, ds, POORER, (0.1, 0.2)))


class MockSynthesizer:
    """Offline synthesizer; renders mock rows through the markdown reply
    format so runs exercise the same parse path as a real endpoint."""

    name = "mock"

    def __call__(self, bundle: PromptBundle, e0: list[Row], ds: Dataset) -> str:
        return render_synthetic(mock_synthesize(e0, ds), ds)


def extract_completion(payload: object) -> str:
    """Fish the completion text out of the few common response shapes."""
    if isinstance(payload, str):
        return payload
    if isinstance(payload, dict):
        choices = payload.get("choices")
        if isinstance(choices, list) and choices:
            first = choices[0]
            if isinstance(first, dict):
                msg = first.get("message")
                if isinstance(msg, dict) and isinstance(msg.get("content"), str):
                    return msg["content"]
                if isinstance(first.get("text"), str):
                    return first["text"]
        content = payload.get("content")
        if isinstance(content, str):
            return content
        if isinstance(content, list) and content:
            first = content[0]
            if isinstance(first, dict) and isinstance(first.get("text"), str):
                return first["text"]
        msg = payload.get("message")
        if isinstance(msg, dict) and isinstance(msg.get("content"), str):
            return msg["content"]
        for key in ("completion", "text", "output"):
            if isinstance(payload.get(key), str):
                return payload[key]
    raise SynthesisError(f"no completion text found in response: {payload!r:.200}")


class RemoteSynthesizer:
    """Chat-endpoint client. The request carries a model id plus ordered
    (role, content) messages; the API key comes from an environment
    variable so it never lands in configs or logs."""

    name = "remote"

    def __init__(self, endpoint: str, model: str,
                 key_env: str = "MOOTOPT_API_KEY", timeout: float = 60.0,
                 max_concurrent: int = 4):
        key = os.environ.get(key_env)
        if not key:
            raise ValueError(
                f"remote synthesizer needs the API key in ${key_env}, which is unset")
        self.endpoint = endpoint
        self.model = model
        self.timeout = timeout
        self._key = key
        self._gate = threading.BoundedSemaphore(max_concurrent)

    def __call__(self, bundle: PromptBundle, e0: list[Row], ds: Dataset) -> str:
        import requests

        payload = {"model": self.model,
                   "messages": [{"role": role, "content": content}
                                for role, content in bundle.messages()]}
        with self._gate:
            resp = requests.post(
                self.endpoint, json=payload, timeout=self.timeout,
                headers={"Authorization": f"Bearer {self._key}"})
        resp.raise_for_status()
        return extract_completion(resp.json())


# -- mapping synthetic rows onto the pool ------------------------------------

def map_to_pool(e1: list[SyntheticRow], pool: list[Row], ds: Dataset) -> list[Row]:
    """Nearest pool row (x distance) for each synthetic row, deduplicated.

    Mirrors data.x_distance: normalized numeric gaps, symbolic exact-match,
    a missing cell on either side contributes a full unit. Ties go to the
    lowest row id; duplicates keep first-hit order.
    """
    if not pool:
        raise ValueError("cannot map synthetic rows onto an empty pool")
    views = ds.x_views()
    pool = sorted(pool, key=lambda r: r.id)
    ids = np.array([r.id for r in pool], dtype=np.int64)
    X_num = views["X_num"][ids]
    X_sym = views["X_sym"][ids]
    chosen: list[Row] = []
    seen: set[int] = set()
    for sr in e1:
        d2 = np.zeros(len(pool))
        for j, pos in enumerate(views["num_pos"]):
            v = sr.cells[pos]
            col_vals = X_num[:, j]
            if v is None:
                d2 += 1.0
            else:
                gap = np.abs(col_vals - ds.norm(ds.x_cols[pos], float(v)))
                d2 += np.where(np.isnan(col_vals), 1.0, gap * gap)
        for j, pos in enumerate(views["sym_pos"]):
            v = sr.cells[pos]
            code = views["alphabets"][j].index(v) if v in views["alphabets"][j] else -2
            d2 += np.where(X_sym[:, j] == code, 0.0, 1.0)
        hit = pool[int(np.argmin(d2))]
        if hit.id not in seen:
            seen.add(hit.id)
            chosen.append(hit)
    return chosen


def warm_start(ds: Dataset, b0: int, synthesizer: Synthesizer, seed: RngOrSeed,
               retries: int = 2, paper_literal: bool = False,
               log: Optional[LogFn] = None) -> WarmStartResult:
    """Cold start, then synthesize/parse/map/label; cold rows alone on failure.

    The synthesizer gets `retries` extra attempts; if none yields at least
    one better and one poorer row, the run proceeds from the cold start and
    the result is flagged as a fallback (runs never abort on synthesis
    trouble). With paper_literal=True synthetic rows map back onto the
    already-labeled seed rows, so no new labels are consumed.
    """
    if b0 < 2:
        raise ValueError(f"warm start needs b0 >= 2, got {b0}")
    rng = _as_rng(seed)
    e0 = cold_start(ds, b0, rng)
    ranked = sorted(e0, key=lambda r: (chebyshev(r, ds), r.id))
    bundle = build_prompt(ranked, ds)
    synth: Optional[list[SyntheticRow]] = None
    for attempt in range(retries + 1):
        try:
            if log:
                log({"event": "request", "attempt": attempt,
                     "messages": [{"role": r, "content": c}
                                  for r, c in bundle.messages()]})
            text = synthesizer(bundle, ranked, ds)
            if log:
                log({"event": "response", "attempt": attempt, "text": text})
            synth = parse_response(text, ds)
            break
        except (SynthesisError, OSError, ValueError) as exc:
            if log:
                log({"event": "error", "attempt": attempt, "error": str(exc)})
    if synth is None:
        if log:
            log({"event": "fallback"})
        return WarmStartResult(rows=list(e0), fallback=True)
    pool = list(e0) if paper_literal else ds.unlabeled_rows()
    mapped = map_to_pool(synth, pool, ds) if pool else []
    added = []
    for row in mapped:
        if not row.labeled:
            ds.label(row)
            added.append(row)
    return WarmStartResult(rows=list(e0) + added, fallback=False)
