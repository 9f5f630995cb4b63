"""Persistent interactive sessions.

A Session bundles one lattice with loaded datasets, the question pools
drawn against them, and an append-only history of everything that
happened.  The holdout split is locked by default: any evaluation touching
it fails until unlock_holdout() records the (single, irreversible) unlock
event.

Saved files carry a format tag, a version, and a content digest; resume
refuses files whose digest does not match, and rebuilds lattice counts,
RNG state and pool membership byte for byte from the stored snapshots.
The history is kept in full as an audit trail of how the state arose.
"""

from __future__ import annotations

import gzip
import hashlib
import json
import secrets
from datetime import datetime, timezone
from typing import Any, Mapping, Sequence

from .analysis import plot_data
from .data import Dataset, SplitSpec, loads_csv, stratified_split
from .expression import expr_to_json, graph_equation, to_expression, weight_tables
from .graph import Graph
from .lattice import (
    GraphSpec,
    Lattice,
    LatticeConfig,
    filter_from_json,
    filter_to_json,
)
from .pool import GraphPool

__all__ = [
    "Session",
    "SPLITS",
    "UnknownIdError",
    "HoldoutLockedError",
    "SessionIntegrityError",
    "SessionVersionError",
    "FORMAT_TAG",
    "FORMAT_VERSION",
]

SPLITS = ("train", "valid", "holdout")
FORMAT_TAG = "symlattice-session"
FORMAT_VERSION = 1


class UnknownIdError(KeyError):
    """A session, dataset, pool or graph id that the session does not hold."""

    def __init__(self, kind: str, key):
        self.kind = kind
        self.key = key
        super().__init__(f"unknown {kind}: {key!r}")

    def __str__(self) -> str:
        return f"unknown {self.kind}: {self.key!r}"


class HoldoutLockedError(RuntimeError):
    def __init__(self):
        super().__init__(
            "holdout locked: the holdout split is evaluated once, after "
            "hypotheses are final; unlock it explicitly first"
        )


class SessionIntegrityError(ValueError):
    """Session file content does not match its digest."""


class SessionVersionError(ValueError):
    """Session file format or version is not supported."""


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _split_spec_json(spec: SplitSpec) -> dict:
    return {
        "fractions": list(spec.fractions),
        "stratify_by": spec.stratify_by,
        "seed": spec.seed,
    }


def _split_spec_from_json(payload: Mapping) -> SplitSpec:
    return SplitSpec(
        fractions=tuple(payload["fractions"]),
        stratify_by=payload.get("stratify_by"),
        seed=payload.get("seed", 0),
    )


def _canonical(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


class Session:
    """One lattice plus its datasets, question pools and event history."""

    def __init__(self, config: LatticeConfig | None = None, session_id: str | None = None):
        self.id = session_id or secrets.token_hex(8)
        self.created = _now()
        self.lattice = Lattice(config)
        self.datasets: dict[str, dict] = {}
        self.pools: dict[str, dict] = {}
        self.history: list[dict] = []
        self.holdout_unlocked = False
        self._next_pool = 0
        self._log("session-created", lattice=self.lattice.config.to_json())

    # -- history ------------------------------------------------------------

    def _log(self, event: str, **payload) -> None:
        self.history.append(
            {"seq": len(self.history), "at": _now(), "event": event, **payload}
        )

    # -- data ---------------------------------------------------------------

    def load_data(
        self,
        csv_text: str,
        split: SplitSpec,
        label: str = "data",
        stype_overrides: Mapping[str, str] | None = None,
    ) -> dict:
        """Parse CSV text, split it, and file it under a label."""
        if label in self.datasets:
            raise ValueError(f"dataset label {label!r} is already loaded")
        ds = loads_csv(csv_text, stype_overrides)
        train, valid, holdout = stratified_split(ds, split)
        manifest = ds.manifest()
        entry = {
            "manifest": manifest,
            "split_spec": split,
            "splits": {"train": train, "valid": valid, "holdout": holdout},
        }
        self.datasets[label] = entry
        self._log(
            "data-loaded",
            label=label,
            manifest=manifest,
            split=_split_spec_json(split),
            sizes={k: v.n for k, v in entry["splits"].items()},
        )
        return self.dataset_summary(label)

    def dataset_summary(self, label: str) -> dict:
        entry = self._dataset(label)
        return {
            "label": label,
            "manifest": entry["manifest"],
            "split": _split_spec_json(entry["split_spec"]),
            "sizes": {k: v.n for k, v in entry["splits"].items()},
        }

    def _dataset(self, label: str) -> dict:
        try:
            return self.datasets[label]
        except KeyError:
            raise UnknownIdError("dataset", label) from None

    def _default_label(self) -> str:
        if not self.datasets:
            raise ValueError("no dataset loaded; load data before asking a question")
        return next(reversed(self.datasets))

    def split(self, label: str, name: str, allow_locked: bool = False) -> Dataset:
        """One split of a loaded dataset; the holdout split is gated."""
        if name not in SPLITS:
            raise ValueError(f"unknown split {name!r}; expected one of {SPLITS}")
        if name == "holdout" and not self.holdout_unlocked and not allow_locked:
            raise HoldoutLockedError()
        return self._dataset(label)["splits"][name]

    # -- questions ------------------------------------------------------------

    def ask(
        self,
        inputs: Sequence[str],
        output: str,
        task: str,
        max_depth: int = 2,
        filters: Sequence = (),
        capacity: int = 200,
        dataset: str | None = None,
        **pool_kwargs,
    ) -> str:
        """Pose a question against a loaded dataset; returns the pool id.

        Input stypes are taken from the dataset's columns, so callers pass
        plain column names.
        """
        label = dataset if dataset is not None else self._default_label()
        entry = self._dataset(label)
        ds: Dataset = entry["splits"]["train"]
        for name in list(inputs) + [output]:
            if name not in ds.names:
                raise UnknownIdError("column", name)
        spec = GraphSpec(
            inputs=tuple((n, ds.stype(n)) for n in inputs),
            output=output,
            task=task,
            max_depth=max_depth,
        )
        pool = self.lattice.ask(spec, filters=filters, capacity=capacity, **pool_kwargs)
        pid = f"q{self._next_pool}"
        self._next_pool += 1
        self.pools[pid] = {"pool": pool, "dataset": label}
        self._log(
            "question-posed",
            pool_id=pid,
            dataset=label,
            spec=spec.to_json(),
            filters=[filter_to_json(f) for f in filters],
            capacity=capacity,
        )
        return pid

    def _pool_entry(self, pid: str) -> dict:
        try:
            return self.pools[pid]
        except KeyError:
            raise UnknownIdError("pool", pid) from None

    def pool(self, pid: str) -> GraphPool:
        return self._pool_entry(pid)["pool"]

    def default_pool_id(self) -> str:
        if not self.pools:
            raise ValueError("no question posed yet; ask one first")
        return next(reversed(self.pools))

    # -- fitting and steering -------------------------------------------------

    def fit(
        self, pid: str, rounds: int = 1, workers: int = 1, auto_update: bool = False
    ) -> list[dict]:
        """Run fit rounds on one pool; optionally reinforce with best() each round."""
        if rounds < 1:
            raise ValueError("rounds must be at least 1")
        entry = self._pool_entry(pid)
        pool: GraphPool = entry["pool"]
        train = self.split(entry["dataset"], "train")
        out: list[dict] = []
        for _ in range(int(rounds)):
            pool.fit(train, workers=workers)
            top = pool.members[0]
            row = {
                "round": pool.generation,
                "best_id": top.id,
                "best_loss": top.value,
                "best_hash": top.graph.structure_hash,
            }
            if auto_update:
                self.lattice.update(pool.best())
            self._log("fit-round", pool_id=pid, auto_update=bool(auto_update), **row)
            out.append(row)
        return out

    def update(self, graph_ids: Sequence[int], pool_id: str | None = None) -> int:
        """Reinforce the lattice with exactly the chosen pool members."""
        if not graph_ids:
            raise ValueError("update needs at least one graph id")
        graphs: list[Graph] = []
        resolved: list[int] = []
        for gid in graph_ids:
            gid = int(gid)
            member = None
            if pool_id is not None:
                member = self._find_member(pool_id, gid)
            else:
                # latest question first: that is the pool being steered
                for pid in reversed(self.pools):
                    try:
                        member = self._find_member(pid, gid)
                        break
                    except UnknownIdError:
                        continue
            if member is None:
                raise UnknownIdError("graph", gid)
            graphs.append(member.graph)
            resolved.append(gid)
        self.lattice.update(graphs)
        self._log(
            "update-applied",
            pool_id=pool_id,
            graph_ids=resolved,
            structure_hashes=[g.structure_hash for g in graphs],
        )
        return len(graphs)

    def _find_member(self, pid: str, gid: int):
        pool = self.pool(pid)
        try:
            return pool.member(int(gid))
        except KeyError:
            raise UnknownIdError("graph", gid) from None

    # -- inspection -------------------------------------------------------------

    def graphs(self, pid: str, n: int | None = None, with_structure: bool = True) -> list[dict]:
        pool = self.pool(pid)
        rows = pool.summaries(n)
        if with_structure:
            for row in rows:
                row["structure"] = pool.member(row["id"]).graph.to_json()
        return rows

    def equation(self, pid: str, gid: int, signif: int = 6, format: str = "text") -> dict:
        member = self._find_member(pid, gid)
        expr = to_expression(member.graph)
        return {
            "graph_id": member.id,
            "signif": signif,
            "format": format,
            "equation": graph_equation(member.graph, signif=signif, format=format),
            "weight_tables": weight_tables(expr),
            "tree": expr_to_json(expr),
        }

    def plot(
        self,
        pid: str,
        gid: int,
        kind: str,
        dataset: str = "train",
        **params,
    ) -> dict:
        """PlotData for one fitted graph on one split (holdout is gated)."""
        entry = self._pool_entry(pid)
        member = self._find_member(pid, gid)
        data = self.split(entry["dataset"], dataset)
        graph = member.graph
        feats = [name for name, _ in graph.features()]
        if kind == "partial2d":
            params.setdefault("fx", feats[0])
            if "fy" not in params:
                if len(feats) < 2:
                    raise ValueError("partial2d needs a graph with at least two features")
                params["fy"] = feats[1]
        if kind == "segmented_loss":
            params.setdefault("by", feats[0])
        pd = plot_data(graph, data, kind, **params)
        payload = pd.to_json()
        payload["meta"] = {
            **payload.get("meta", {}),
            "dataset": entry["dataset"],
            "split": dataset,
            "graph_id": member.id,
            "structure_hash": graph.structure_hash,
        }
        return payload

    def overview(self) -> dict:
        pools = {}
        for pid, entry in self.pools.items():
            pool: GraphPool = entry["pool"]
            pools[pid] = {
                "dataset": entry["dataset"],
                "spec": pool.spec.to_json(),
                "filters": [filter_to_json(f) for f in pool.filters],
                "capacity": pool.capacity,
                "generation": pool.generation,
                "size": len(pool),
                "sort_criterion": pool.sort_criterion,
            }
        return {
            "id": self.id,
            "created": self.created,
            "holdout_unlocked": self.holdout_unlocked,
            "datasets": {label: self.dataset_summary(label) for label in self.datasets},
            "pools": pools,
            "history_length": len(self.history),
        }

    # -- holdout gate -------------------------------------------------------------

    def unlock_holdout(self) -> dict:
        """Set the irreversible unlock flag; logged exactly once."""
        already = self.holdout_unlocked
        if not already:
            self.holdout_unlocked = True
            self._log("holdout-unlocked")
        return {"holdout_unlocked": True, "already_unlocked": already}

    # -- persistence ----------------------------------------------------------------

    def to_json(self) -> dict:
        datasets = {}
        for label, entry in self.datasets.items():
            datasets[label] = {
                "manifest": entry["manifest"],
                "split_spec": _split_spec_json(entry["split_spec"]),
                "splits": {k: v.to_json() for k, v in entry["splits"].items()},
            }
        return {
            "format": FORMAT_TAG,
            "version": FORMAT_VERSION,
            "id": self.id,
            "created": self.created,
            "holdout_unlocked": self.holdout_unlocked,
            "next_pool": self._next_pool,
            "lattice": self.lattice.snapshot(),
            "datasets": datasets,
            "pools": {
                pid: {"dataset": e["dataset"], "pool": e["pool"].to_json()}
                for pid, e in self.pools.items()
            },
            "history": list(self.history),
        }

    @classmethod
    def from_json(cls, payload: Mapping[str, Any]) -> "Session":
        if payload.get("format") != FORMAT_TAG:
            raise SessionVersionError("not a session file (format tag missing)")
        if payload.get("version") != FORMAT_VERSION:
            raise SessionVersionError(
                f"unsupported session version {payload.get('version')!r}; "
                f"this build reads version {FORMAT_VERSION}"
            )
        s = cls.__new__(cls)
        s.id = payload["id"]
        s.created = payload["created"]
        s.lattice = Lattice.from_snapshot(payload["lattice"])
        s.datasets = {}
        for label, entry in payload["datasets"].items():
            s.datasets[label] = {
                "manifest": entry["manifest"],
                "split_spec": _split_spec_from_json(entry["split_spec"]),
                "splits": {
                    k: Dataset.from_json(v) for k, v in entry["splits"].items()
                },
            }
        s.pools = {
            pid: {
                "dataset": e["dataset"],
                "pool": GraphPool.from_json(s.lattice, e["pool"]),
            }
            for pid, e in payload["pools"].items()
        }
        s.history = list(payload["history"])
        s.holdout_unlocked = bool(payload["holdout_unlocked"])
        s._next_pool = int(payload["next_pool"])
        return s

    def save(self, path) -> None:
        payload = self.to_json()
        payload["digest"] = hashlib.sha256(_canonical(payload)).hexdigest()
        blob = json.dumps(payload, sort_keys=True).encode("utf-8")
        path = str(path)
        if path.endswith(".gz"):
            with gzip.open(path, "wb") as fh:
                fh.write(blob)
        else:
            with open(path, "wb") as fh:
                fh.write(blob)

    @classmethod
    def load(cls, path) -> "Session":
        path = str(path)
        if path.endswith(".gz"):
            with gzip.open(path, "rb") as fh:
                blob = fh.read()
        else:
            with open(path, "rb") as fh:
                blob = fh.read()
        try:
            payload = json.loads(blob.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise SessionIntegrityError(f"unreadable session file: {exc}") from None
        if not isinstance(payload, dict):
            raise SessionIntegrityError("unreadable session file: not a JSON object")
        stored = payload.pop("digest", None)
        if stored is None:
            raise SessionIntegrityError("session file has no digest")
        actual = hashlib.sha256(_canonical(payload)).hexdigest()
        if actual != stored:
            raise SessionIntegrityError(
                "session file digest mismatch: content was altered after saving"
            )
        return cls.from_json(payload)
