"""Tabular data: CSV loading, semantic types, splits, and training stats.

Columns are either numerical (float64 arrays, NaN marks a missing cell) or
categorical (object arrays of strings, None marks a missing cell).  Column
types are inferred from the file unless explicitly overridden.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .graph import CATEGORICAL, NUMERICAL, STYPES

__all__ = [
    "Dataset",
    "SplitSpec",
    "InputStats",
    "ParseError",
    "load_csv",
    "loads_csv",
    "stratified_split",
    "compute_stats",
]


class ParseError(ValueError):
    """A CSV file could not be read into a dataset."""


def _is_missing_token(cell: str) -> bool:
    return cell == ""


def _try_float(cell: str) -> float | None:
    try:
        v = float(cell)
    except ValueError:
        return None
    return v


@dataclass
class Dataset:
    """An ordered set of named, typed columns of equal length."""

    columns: tuple[tuple[str, str], ...]
    data: dict[str, np.ndarray]

    def __post_init__(self):
        if not isinstance(self.columns, tuple):
            object.__setattr__(self, "columns", tuple((n, s) for n, s in self.columns))
        lengths = {len(self.data[name]) for name, _ in self.columns}
        if len(lengths) > 1:
            raise ValueError(f"ragged columns: lengths {sorted(lengths)}")

    @property
    def n(self) -> int:
        if not self.columns:
            return 0
        return len(self.data[self.columns[0][0]])

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.columns)

    def stype(self, name: str) -> str:
        for cname, stype in self.columns:
            if cname == name:
                return stype
        raise KeyError(f"dataset has no column {name!r}")

    def column(self, name: str) -> np.ndarray:
        if name not in self.data:
            raise KeyError(f"dataset has no column {name!r}")
        return self.data[name]

    def subset(self, indices: Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.columns, {name: arr[idx] for name, arr in self.data.items()})

    def row(self, i: int) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for name, stype in self.columns:
            v = self.data[name][i]
            out[name] = float(v) if stype == NUMERICAL else v
        return out

    @classmethod
    def from_columns(
        cls,
        data: Mapping[str, Iterable],
        stypes: Mapping[str, str] | None = None,
    ) -> "Dataset":
        """Build a dataset from in-memory columns, inferring types as needed."""
        stypes = dict(stypes or {})
        cols: list[tuple[str, str]] = []
        arrays: dict[str, np.ndarray] = {}
        for name, values in data.items():
            vals = list(values)
            stype = stypes.get(name)
            if stype is None:
                stype = NUMERICAL
                for v in vals:
                    if v is None:
                        continue
                    if isinstance(v, str):
                        stype = CATEGORICAL
                        break
            if stype not in STYPES:
                raise ValueError(f"unknown stype {stype!r} for column {name!r}")
            if stype == NUMERICAL:
                arrays[name] = np.asarray(
                    [math.nan if v is None else float(v) for v in vals], dtype=float
                )
            else:
                arrays[name] = np.asarray(
                    [None if v is None else str(v) for v in vals], dtype=object
                )
            cols.append((name, stype))
        return cls(tuple(cols), arrays)

    def manifest(self) -> dict:
        """Shape summary: column names/types, row count, content digest."""
        h = hashlib.sha256()
        for name, stype in self.columns:
            h.update(name.encode("utf-8"))
            h.update(stype.encode("utf-8"))
            col = self.data[name]
            if stype == NUMERICAL:
                h.update(np.ascontiguousarray(col, dtype=float).tobytes())
            else:
                for v in col:
                    h.update(b"\x00" if v is None else str(v).encode("utf-8"))
                    h.update(b"\x1f")
        return {
            "columns": [[name, stype] for name, stype in self.columns],
            "rows": self.n,
            "digest": h.hexdigest(),
        }

    def to_json(self) -> dict:
        cols = {}
        for name, stype in self.columns:
            arr = self.data[name]
            if stype == NUMERICAL:
                cols[name] = [None if not math.isfinite(v) else float(v) for v in arr]
            else:
                cols[name] = [None if v is None else str(v) for v in arr]
        return {"columns": [[n, s] for n, s in self.columns], "data": cols}

    @classmethod
    def from_json(cls, payload: Mapping) -> "Dataset":
        stypes = {name: stype for name, stype in payload["columns"]}
        return cls.from_columns(
            {name: payload["data"][name] for name, _ in payload["columns"]}, stypes
        )

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(self.names)
            for i in range(self.n):
                row = []
                for name, stype in self.columns:
                    v = self.data[name][i]
                    if stype == NUMERICAL:
                        row.append("" if not math.isfinite(v) else repr(float(v)))
                    else:
                        row.append("" if v is None else str(v))
                w.writerow(row)


def loads_csv(text: str, stype_overrides: Mapping[str, str] | None = None) -> Dataset:
    """Parse CSV text (header row required, comma separated, UTF-8)."""
    reader = csv.reader(text.splitlines())
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty input: missing header row") from None
    if not header or all(h.strip() == "" for h in header):
        raise ParseError("missing header row")
    seen = set()
    for h in header:
        if h in seen:
            raise ParseError(f"duplicate column name {h!r}")
        seen.add(h)

    ncol = len(header)
    cells: list[list[str]] = [[] for _ in range(ncol)]
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != ncol:
            raise ParseError(f"line {lineno}: expected {ncol} fields, got {len(row)}")
        for j, cell in enumerate(row):
            cells[j].append(cell)

    overrides = dict(stype_overrides or {})
    for name, stype in overrides.items():
        if name not in seen:
            raise ParseError(f"stype override for unknown column {name!r}")
        if stype not in STYPES:
            raise ParseError(f"unknown stype {stype!r} for column {name!r}")

    cols: list[tuple[str, str]] = []
    arrays: dict[str, np.ndarray] = {}
    for j, name in enumerate(header):
        raw = cells[j]
        stype = overrides.get(name)
        if stype is None:
            stype = NUMERICAL
            for cell in raw:
                if _is_missing_token(cell):
                    continue
                if _try_float(cell) is None:
                    stype = CATEGORICAL
                    break
        if stype == NUMERICAL:
            vals = np.empty(len(raw), dtype=float)
            for i, cell in enumerate(raw):
                if _is_missing_token(cell):
                    vals[i] = math.nan
                    continue
                v = _try_float(cell)
                if v is None:
                    raise ParseError(
                        f"line {i + 2}: column {name!r} is numerical but got {cell!r}"
                    )
                # non-finite tokens (nan/inf) count as missing
                vals[i] = v if math.isfinite(v) else math.nan
        else:
            vals = np.asarray(
                [None if _is_missing_token(c) else c for c in raw], dtype=object
            )
        cols.append((name, stype))
        arrays[name] = vals
    return Dataset(tuple(cols), arrays)


def load_csv(path, stype_overrides: Mapping[str, str] | None = None) -> Dataset:
    """Load a CSV file from disk; see loads_csv for the format rules."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        text = f.read()
    return loads_csv(text, stype_overrides)


# ---------------------------------------------------------------------------
# splitting


@dataclass(frozen=True)
class SplitSpec:
    """How to cut a dataset into train / validation / holdout."""

    fractions: tuple[float, float, float] = (0.6, 0.2, 0.2)
    stratify_by: str | None = None
    seed: int = 0

    def __post_init__(self):
        fr = tuple(float(f) for f in self.fractions)
        object.__setattr__(self, "fractions", fr)
        if len(fr) != 3:
            raise ValueError("fractions must list (train, validation, holdout)")
        if any(f < 0 for f in fr):
            raise ValueError("fractions must be nonnegative")
        if abs(sum(fr) - 1.0) > 1e-9:
            raise ValueError(f"fractions must sum to 1, got {sum(fr)!r}")
        if fr[0] <= 0:
            raise ValueError("the train fraction must be positive")


def _largest_remainder(total: int, fracs: Sequence[float]) -> list[int]:
    exact = [total * f for f in fracs]
    base = [int(math.floor(e)) for e in exact]
    leftover = total - sum(base)
    order = sorted(range(len(fracs)), key=lambda j: (-(exact[j] - base[j]), j))
    for j in order[:leftover]:
        base[j] += 1
    return base


def stratified_split(data: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    """Deterministic stratified three-way split.

    Each stratum is shuffled with the spec seed and allocated to splits by
    largest-remainder rounding, then stratum leftovers are steered so the
    split sizes also match the largest-remainder allocation of the full row
    count.  Every (stratum, split) cell stays within one sample of exact
    proportionality.
    """
    fr = spec.fractions
    n = data.n
    if n == 0:
        raise ValueError("cannot split an empty dataset")

    if spec.stratify_by is not None:
        col = data.column(spec.stratify_by)
        stype = data.stype(spec.stratify_by)
        if stype == NUMERICAL:
            observed = sorted({float(v) for v in col if math.isfinite(v)})
            if len(observed) > 2:
                raise ValueError(
                    f"column {spec.stratify_by!r} has {len(observed)} distinct values; "
                    "stratification needs a categorical or binary column"
                )
        keys = [None if _is_missing(v) else v for v in col]
        strata: dict[Any, list[int]] = {}
        for i, k in enumerate(keys):
            strata.setdefault(k, []).append(i)
        stratum_items = sorted(strata.items(), key=lambda kv: str(kv[0]))
    else:
        stratum_items = [("all", list(range(n)))]

    requested = sum(1 for f in fr if f > 0)
    for key, idx in stratum_items:
        if len(idx) < requested:
            raise ValueError(
                f"stratum {key!r} has {len(idx)} row(s); need at least {requested}"
            )

    global_sizes = _largest_remainder(n, fr)

    # per-stratum floors, then steer leftovers toward the global split sizes
    alloc: list[list[int]] = []
    floors: list[list[int]] = []
    exacts: list[list[float]] = []
    for key, idx in stratum_items:
        m = len(idx)
        exact = [m * f for f in fr]
        base = [int(math.floor(e)) for e in exact]
        exacts.append(exact)
        floors.append(base)
        alloc.append(list(base))
    need = [global_sizes[j] - sum(a[j] for a in floors) for j in range(3)]
    leftover = [len(idx) - sum(base) for (key, idx), base in zip(stratum_items, floors)]

    candidates = [
        (s, j)
        for s in range(len(stratum_items))
        for j in range(3)
    ]
    # prefer cells with the largest fractional remainder; relaxing to
    # remainder zero still keeps every cell within one sample of exact
    candidates.sort(key=lambda sj: (-(exacts[sj[0]][sj[1]] - floors[sj[0]][sj[1]]), sj[0], sj[1]))
    for s, j in candidates:
        if leftover[s] > 0 and need[j] > 0:
            alloc[s][j] += 1
            leftover[s] -= 1
            need[j] -= 1
    if any(need):
        raise AssertionError("split allocation failed to meet global sizes")

    rng = np.random.default_rng(spec.seed)
    picks: list[list[int]] = [[], [], []]
    for (key, idx), counts in zip(stratum_items, alloc):
        order = rng.permutation(len(idx))
        shuffled = [idx[i] for i in order]
        at = 0
        for j in range(3):
            picks[j].extend(shuffled[at : at + counts[j]])
            at += counts[j]
    return tuple(data.subset(sorted(p)) for p in picks)  # type: ignore[return-value]


def _is_missing(v) -> bool:
    if v is None:
        return True
    if isinstance(v, float) and math.isnan(v):
        return True
    try:
        return bool(np.isnan(v))
    except (TypeError, ValueError):
        return False


# ---------------------------------------------------------------------------
# training statistics


@dataclass
class InputStats:
    """Per-feature summaries computed from training rows only."""

    numerical: dict[str, dict[str, float]]
    categorical: dict[str, dict[str, int]]

    def to_json(self) -> dict:
        return {"numerical": self.numerical, "categorical": self.categorical}


def compute_stats(train: Dataset) -> InputStats:
    """min/max/mean/std per numerical column, category counts per
    categorical column.  A column with no observed values is an error."""
    numerical: dict[str, dict[str, float]] = {}
    categorical: dict[str, dict[str, int]] = {}
    for name, stype in train.columns:
        col = train.data[name]
        if stype == NUMERICAL:
            vals = col[np.isfinite(col.astype(float))]
            if len(vals) == 0:
                raise ValueError(f"column {name!r} has no observed values")
            numerical[name] = {
                "min": float(np.min(vals)),
                "max": float(np.max(vals)),
                "mean": float(np.mean(vals)),
                "std": float(np.std(vals)),
            }
        else:
            counts: dict[str, int] = {}
            for v in col:
                if v is None:
                    continue
                counts[v] = counts.get(v, 0) + 1
            if not counts:
                raise ValueError(f"column {name!r} has no observed values")
            categorical[name] = dict(sorted(counts.items()))
    return InputStats(numerical, categorical)
