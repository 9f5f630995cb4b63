"""A bounded, sorted population of candidate graphs for one question.

Each fit call trains every member on the training rows, sorts the pool
ascending by the chosen criterion, discards the worst fraction, and
replenishes from the lattice.  Replenished members join unfitted and are
trained on the next call, so the pool is a rolling search frontier rather
than a one-shot sample.

Member fits are independent: each member carries a stable id, and its
training seed derives from (pool seed, member id).  The worker count
therefore changes wall time, never results.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .data import Dataset, compute_stats
from .fitting import (
    AIC,
    BIC,
    CRITERIA,
    CROSS_ENTROPY,
    RMSE,
    FitConfig,
    criterion_value,
    fit_graph,
)
from .graph import CLASSIFIER, Graph
from .lattice import Filter, GraphSpec, Lattice, filter_from_json, filter_to_json

__all__ = ["GraphPool", "Member", "DEFAULT_CAPACITY", "DEFAULT_DISCARD"]

DEFAULT_CAPACITY = 200
DEFAULT_DISCARD = 0.5


@dataclass
class Member:
    id: int
    graph: Graph
    value: float | None = None  # sort criterion on train; None until fitted

    @property
    def fitted(self) -> bool:
        return self.value is not None


def _member_seed(pool_seed: int, member_id: int) -> int:
    blob = f"{pool_seed}:{member_id}".encode("ascii")
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")


class GraphPool:
    """Pool of candidate graphs; index 0 is the current best."""

    def __init__(
        self,
        lattice: Lattice,
        spec: GraphSpec,
        filters: Sequence[Filter] = (),
        capacity: int = DEFAULT_CAPACITY,
        sort_criterion: str | None = None,
        fit_config: FitConfig | None = None,
        discard_fraction: float = DEFAULT_DISCARD,
        seed: int | None = None,
        _populate: bool = True,
    ):
        if capacity < 1:
            raise ValueError("capacity must be at least 1")
        if not (0.0 < discard_fraction < 1.0):
            raise ValueError("discard_fraction must be inside (0, 1)")
        if sort_criterion is None:
            sort_criterion = CROSS_ENTROPY if spec.task == CLASSIFIER else RMSE
        if sort_criterion not in CRITERIA:
            raise ValueError(f"unknown criterion {sort_criterion!r}")
        if sort_criterion == CROSS_ENTROPY and spec.task != CLASSIFIER:
            raise ValueError("cross_entropy applies to classifier questions only")
        if sort_criterion == RMSE and spec.task == CLASSIFIER:
            raise ValueError("rmse applies to regressor questions only")
        self.lattice = lattice
        self.spec = spec
        self.filters = tuple(filters)
        self.capacity = capacity
        self.sort_criterion = sort_criterion
        self.fit_config = fit_config or FitConfig()
        self.discard_fraction = discard_fraction
        # drawing the seed from the lattice keeps one deterministic stream
        self.seed = seed if seed is not None else int(lattice._rng.integers(2**63))
        self.generation = 0
        self._next_id = 0
        self.members: list[Member] = []
        if _populate:
            self._replenish()

    # -- plumbing ---------------------------------------------------------

    def _replenish(self) -> None:
        while len(self.members) < self.capacity:
            g = self.lattice.sample_graph(self.spec, self.filters)
            self.members.append(Member(self._next_id, g))
            self._next_id += 1

    def __len__(self) -> int:
        return len(self.members)

    @property
    def graphs(self) -> tuple[Graph, ...]:
        return tuple(m.graph for m in self.members)

    def _require_fitted(self) -> None:
        if self.generation == 0:
            raise RuntimeError("pool has not been fitted yet")

    def __getitem__(self, i: int) -> Graph:
        self._require_fitted()
        if not (0 <= i < len(self.members)):
            raise IndexError(f"pool index {i} out of range [0, {len(self.members)})")
        return self.members[i].graph

    def head(self, n: int = 5) -> list[Graph]:
        """The n best members by the sort criterion."""
        self._require_fitted()
        if n < 0:
            raise ValueError("head size must be nonnegative")
        return [m.graph for m in self.members[:n]]

    def member(self, member_id: int) -> Member:
        for m in self.members:
            if m.id == member_id:
                return m
        raise KeyError(f"pool has no member {member_id}")

    # -- fitting ----------------------------------------------------------

    def fit(self, train: Dataset, workers: int = 1) -> "GraphPool":
        """Fit every member, sort, discard the worst, replenish.

        After the call the pool holds `capacity` members again: the fitted
        survivors sorted ascending by the criterion, then the fresh
        unfitted replacements.
        """
        if workers < 1:
            raise ValueError("workers must be at least 1")
        missing = [n for n in self.spec.input_names if n not in train.names]
        if missing:
            raise KeyError(f"training data lacks question inputs {missing}")
        if self.spec.output not in train.names:
            raise KeyError(f"training data lacks the target column {self.spec.output!r}")
        stats = compute_stats(train)

        def run(member: Member) -> Member:
            cfg = FitConfig(
                learning_rate=self.fit_config.learning_rate,
                epochs=self.fit_config.epochs,
                seed=_member_seed(self.seed, member.id),
                optimizer=self.fit_config.optimizer,
                max_epochs=self.fit_config.max_epochs,
            )
            fitted = fit_graph(member.graph, train, cfg, stats=stats)
            return Member(member.id, fitted, None)

        if workers == 1:
            fitted = [run(m) for m in self.members]
        else:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                fitted = list(ex.map(run, self.members))

        usable = [m for m in fitted if not m.graph.unusable]
        for m in usable:
            if self.sort_criterion == CROSS_ENTROPY:
                m.value = m.graph.train_loss
            elif self.sort_criterion == RMSE:
                m.value = math.sqrt(m.graph.train_loss)
            else:
                m.value = criterion_value(m.graph, train, self.sort_criterion)
        usable.sort(key=lambda m: (m.value, m.id))

        keep = self.capacity - int(self.capacity * self.discard_fraction)
        self.members = usable[:keep]
        self._replenish()
        self.generation += 1
        return self

    # -- inspection -------------------------------------------------------

    def best(self, limit: int = 4) -> list[Graph]:
        """Top members with pairwise distinct structure; at most `limit`."""
        self._require_fitted()
        out: list[Graph] = []
        seen: set[str] = set()
        for m in self.members:
            if not m.fitted:
                continue
            h = m.graph.structure_hash
            if h in seen:
                continue
            seen.add(h)
            out.append(m.graph)
            if len(out) >= limit:
                break
        return out

    def summaries(self, n: int | None = None) -> list[dict]:
        """Sorted member summaries for display layers."""
        rows = []
        for m in self.members[: n if n is not None else len(self.members)]:
            rows.append(
                {
                    "id": m.id,
                    "fitted": m.fitted,
                    "value": None if m.value is None else float(m.value),
                    "train_loss": None
                    if m.graph.train_loss is None
                    else float(m.graph.train_loss),
                    "depth": m.graph.depth(),
                    "param_count": m.graph.param_count,
                    "structure_hash": m.graph.structure_hash,
                }
            )
        return rows

    # -- persistence ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "spec": self.spec.to_json(),
            "filters": [filter_to_json(f) for f in self.filters],
            "capacity": self.capacity,
            "sort_criterion": self.sort_criterion,
            "discard_fraction": self.discard_fraction,
            "seed": self.seed,
            "generation": self.generation,
            "next_id": self._next_id,
            "fit_config": {
                "learning_rate": self.fit_config.learning_rate,
                "epochs": self.fit_config.epochs,
                "seed": self.fit_config.seed,
                "optimizer": self.fit_config.optimizer,
            },
            "members": [
                {
                    "id": m.id,
                    "value": None if m.value is None else float(m.value),
                    "graph": m.graph.to_json(),
                }
                for m in self.members
            ],
        }

    @classmethod
    def from_json(cls, lattice: Lattice, payload: Mapping) -> "GraphPool":
        pool = cls(
            lattice,
            GraphSpec.from_json(payload["spec"]),
            filters=tuple(filter_from_json(f) for f in payload["filters"]),
            capacity=payload["capacity"],
            sort_criterion=payload["sort_criterion"],
            fit_config=FitConfig(**payload["fit_config"]),
            discard_fraction=payload["discard_fraction"],
            seed=payload["seed"],
            _populate=False,
        )
        pool.generation = payload["generation"]
        pool._next_id = payload["next_id"]
        pool.members = [
            Member(row["id"], Graph.from_json(row["graph"]), row["value"])
            for row in payload["members"]
        ]
        return pool
