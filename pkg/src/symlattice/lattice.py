"""Reinforcable sampling lattice.

The lattice is a width x depth grid of cells.  Each cell keeps two count
tables: one over interaction kinds, one over connection sources (input
features, or cells in shallower layers of the same island).  Sampling
probabilities are Laplace-smoothed normalized counts, so a fresh lattice
samples uniformly, and `update` reinforces whatever structures it is shown.

Columns are partitioned into contiguous islands; a sampled graph never
crosses an island boundary.

Only structure crosses this module's boundary.  Feature *names* are
registered and sampled graphs are unfitted skeletons; data values and
fitted losses never enter the lattice.

Concurrency contract: `update`, `register_features`, and `reset` are
writer operations and take the instance lock.  `sample_graph` advances the
shared RNG under the same lock, so all samples drawn from one lattice form
a single deterministic stream; concurrent callers are safe but serialized
at the draw.
"""

from __future__ import annotations

import threading
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .graph import (
    ARITY,
    CATEGORICAL,
    CLASSIFIER,
    INPUT,
    INTERACTION,
    KINDS,
    NUMERICAL,
    OUTPUT,
    STYPES,
    TASKS,
    Graph,
    Node,
)

__all__ = [
    "LatticeConfig",
    "Lattice",
    "GraphSpec",
    "Contains",
    "Excludes",
    "MaxDepth",
    "Functions",
    "Filter",
    "ConfigError",
    "FilterStarvationError",
    "REJECTION_CAP",
]

REJECTION_CAP = 1000  # attempts per requested graph before starvation


class ConfigError(ValueError):
    """Invalid lattice or question configuration."""


class FilterStarvationError(RuntimeError):
    """Rejection sampling failed to produce a graph satisfying the filters."""

    def __init__(self, attempts: int, accepted: int):
        self.attempts = attempts
        self.accepted = accepted
        self.acceptance_rate = accepted / attempts if attempts else 0.0
        super().__init__(
            f"filters starved sampling: {accepted}/{attempts} accepted "
            f"(rate {self.acceptance_rate:.4f})"
        )


@dataclass(frozen=True)
class LatticeConfig:
    width: int = 8
    depth: int = 4
    islands: int = 2
    alpha: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.width < 1:
            raise ConfigError("width must be at least 1")
        if self.depth < 1:
            raise ConfigError("depth must be at least 1")
        if self.islands < 1:
            raise ConfigError("islands must be at least 1")
        if self.islands > self.width:
            raise ConfigError("islands cannot exceed width")
        if not self.alpha > 0:
            raise ConfigError("alpha must be positive")

    def to_json(self) -> dict:
        return {
            "width": self.width,
            "depth": self.depth,
            "islands": self.islands,
            "alpha": self.alpha,
            "seed": self.seed,
        }


def _normalize_inputs(inputs) -> tuple[tuple[str, str], ...]:
    out = []
    for item in inputs:
        if isinstance(item, str):
            out.append((item, NUMERICAL))
        else:
            name, stype = item
            if stype not in STYPES:
                raise ConfigError(f"unknown stype {stype!r} for input {name!r}")
            out.append((str(name), stype))
    return tuple(out)


@dataclass(frozen=True)
class GraphSpec:
    """What a pool of candidate graphs should model."""

    inputs: tuple[tuple[str, str], ...]
    output: str
    task: str = CLASSIFIER
    max_depth: int = 1
    allowed_kinds: frozenset = frozenset(KINDS)

    def __post_init__(self):
        object.__setattr__(self, "inputs", _normalize_inputs(self.inputs))
        object.__setattr__(self, "allowed_kinds", frozenset(self.allowed_kinds))
        if not self.inputs:
            raise ConfigError("a question needs at least one input feature")
        names = [n for n, _ in self.inputs]
        if len(set(names)) != len(names):
            raise ConfigError("input feature names must be unique")
        if self.output in names:
            raise ConfigError("the output feature cannot also be an input")
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be at least 1")
        unknown = self.allowed_kinds - set(KINDS)
        if unknown:
            raise ConfigError(f"unknown interaction kinds {sorted(unknown)}")
        if not self.allowed_kinds:
            raise ConfigError("allowed_kinds cannot be empty")

    @property
    def input_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.inputs)

    def to_json(self) -> dict:
        return {
            "inputs": [[n, s] for n, s in self.inputs],
            "output": self.output,
            "task": self.task,
            "max_depth": self.max_depth,
            "allowed_kinds": sorted(self.allowed_kinds),
        }

    @classmethod
    def from_json(cls, payload: Mapping) -> "GraphSpec":
        return cls(
            inputs=tuple((n, s) for n, s in payload["inputs"]),
            output=payload["output"],
            task=payload.get("task", CLASSIFIER),
            max_depth=payload.get("max_depth", 1),
            allowed_kinds=frozenset(payload.get("allowed_kinds", KINDS)),
        )


# ---------------------------------------------------------------------------
# filters


@dataclass(frozen=True)
class Contains:
    """Every sampled graph must use this input feature."""

    feature: str


@dataclass(frozen=True)
class Excludes:
    """No sampled graph may use this input feature."""

    feature: str


@dataclass(frozen=True)
class MaxDepth:
    """Cap the interaction depth of sampled graphs."""

    depth: int

    def __post_init__(self):
        if self.depth < 1:
            raise ConfigError("MaxDepth must be at least 1")


@dataclass(frozen=True)
class Functions:
    """Restrict sampled graphs to these interaction kinds."""

    kinds: frozenset

    def __init__(self, kinds):
        if isinstance(kinds, str):
            kinds = (kinds,)
        object.__setattr__(self, "kinds", frozenset(kinds))
        unknown = self.kinds - set(KINDS)
        if unknown:
            raise ConfigError(f"unknown interaction kinds {sorted(unknown)}")


Filter = Union[Contains, Excludes, MaxDepth, Functions]


def filter_to_json(f: Filter) -> dict:
    if isinstance(f, Contains):
        return {"type": "contains", "feature": f.feature}
    if isinstance(f, Excludes):
        return {"type": "excludes", "feature": f.feature}
    if isinstance(f, MaxDepth):
        return {"type": "max_depth", "depth": f.depth}
    if isinstance(f, Functions):
        return {"type": "functions", "kinds": sorted(f.kinds)}
    raise TypeError(f"not a filter: {f!r}")


def filter_from_json(payload: Mapping) -> Filter:
    t = payload["type"]
    if t == "contains":
        return Contains(payload["feature"])
    if t == "excludes":
        return Excludes(payload["feature"])
    if t == "max_depth":
        return MaxDepth(payload["depth"])
    if t == "functions":
        return Functions(payload["kinds"])
    raise ValueError(f"unknown filter type {t!r}")


# ---------------------------------------------------------------------------
# the lattice


def _island_columns(width: int, islands: int) -> list[list[int]]:
    # contiguous blocks whose sizes differ by at most one
    bounds = [i * width // islands for i in range(islands + 1)]
    return [list(range(bounds[i], bounds[i + 1])) for i in range(islands)]


class Lattice:
    def __init__(self, config: LatticeConfig | None = None):
        self.config = config or LatticeConfig()
        self._lock = threading.RLock()
        self._rng = np.random.default_rng(self.config.seed)
        w, d = self.config.width, self.config.depth
        # kind counts: dense (width, depth, kinds); source counts: sparse
        self._kind_counts = np.zeros((w, d, len(KINDS)), dtype=float)
        self._source_counts: dict[tuple[int, int], dict] = {}
        self._features: dict[str, str] = {}
        self._outputs: set[str] = set()
        self._island_cols = _island_columns(w, self.config.islands)
        self._col_island = {}
        for i, cols in enumerate(self._island_cols):
            for c in cols:
                self._col_island[c] = i

    # -- registration -----------------------------------------------------

    @property
    def registered_features(self) -> dict[str, str]:
        with self._lock:
            return dict(self._features)

    def island_of(self, cell: tuple[int, int]) -> int:
        self._check_cell(cell)
        return self._col_island[cell[0]]

    def register_features(self, inputs, output: str | None = None) -> "Lattice":
        """Record input feature names/stypes (and the output name).

        Registering the same (name, stype) again is a no-op; registering a
        name with a different stype is an error.
        """
        pairs = _normalize_inputs(inputs)
        if not pairs:
            raise ConfigError("register_features needs at least one input")
        names = [n for n, _ in pairs]
        if len(set(names)) != len(names):
            raise ConfigError("feature names must be unique")
        for name, _ in pairs:
            if not name:
                raise ConfigError("feature names must be nonempty")
        with self._lock:
            for name, stype in pairs:
                have = self._features.get(name)
                if have is not None and have != stype:
                    raise ConfigError(
                        f"feature {name!r} already registered as {have!r}, got {stype!r}"
                    )
                self._features[name] = stype
            if output:
                self._outputs.add(output)
        return self

    # -- distributions ----------------------------------------------------

    def _check_cell(self, cell) -> tuple[int, int]:
        col, layer = cell
        if not (0 <= col < self.config.width and 0 <= layer < self.config.depth):
            raise KeyError(f"unknown cell {cell!r}")
        return (int(col), int(layer))

    def _admissible_sources(self, cell: tuple[int, int]) -> list:
        """Registered features plus shallower cells of the same island."""
        col, layer = cell
        island = self._col_island[col]
        sources: list = list(self._features)
        for l2 in range(layer):
            for c2 in self._island_cols[island]:
                sources.append((c2, l2))
        return sources

    def sampling_distribution(self, cell) -> tuple[dict, dict]:
        """Smoothed (kind -> p, source -> p) tables at one cell.

        Sources are feature names or (column, layer) tuples of shallower
        same-island cells.
        """
        cell = self._check_cell(cell)
        with self._lock:
            alpha = self.config.alpha
            kc = self._kind_counts[cell[0], cell[1]]
            kw = kc + alpha
            kinds = {k: float(w / kw.sum()) for k, w in zip(KINDS, kw)}
            sources = self._admissible_sources(cell)
            sc = self._source_counts.get(cell, {})
            weights = np.asarray([sc.get(s, 0.0) + alpha for s in sources])
            total = weights.sum()
            src = {s: float(w / total) for s, w in zip(sources, weights)}
            return kinds, src

    # -- sampling ---------------------------------------------------------

    def _digest_filters(self, spec: GraphSpec, filters) -> tuple[set, list, int, frozenset]:
        contains: set[str] = set()
        excludes: set[str] = set()
        max_depth = spec.max_depth
        kinds = spec.allowed_kinds
        for f in filters:
            if isinstance(f, Contains):
                if f.feature not in spec.input_names:
                    raise ConfigError(
                        f"Contains({f.feature!r}) names a feature outside the question inputs"
                    )
                contains.add(f.feature)
            elif isinstance(f, Excludes):
                if f.feature not in spec.input_names:
                    warnings.warn(
                        f"Excludes({f.feature!r}) names a feature not in the question; ignored",
                        stacklevel=3,
                    )
                else:
                    excludes.add(f.feature)
            elif isinstance(f, MaxDepth):
                max_depth = min(max_depth, f.depth)
            elif isinstance(f, Functions):
                kinds = kinds & f.kinds
            else:
                raise TypeError(f"not a filter: {f!r}")
        allowed_features = [n for n in spec.input_names if n not in excludes]
        if not allowed_features:
            raise FilterStarvationError(0, 0)
        if not kinds:
            raise FilterStarvationError(0, 0)
        return contains, allowed_features, max_depth, kinds

    def _check_spec_registered(self, spec: GraphSpec) -> None:
        if not self._features:
            raise ConfigError("no features registered; call register_features first")
        for name, stype in spec.inputs:
            have = self._features.get(name)
            if have is None:
                raise ConfigError(f"feature {name!r} is not registered")
            if have != stype:
                raise ConfigError(
                    f"feature {name!r} registered as {have!r}, question says {stype!r}"
                )

    def sample_graph(self, spec: GraphSpec, filters: Sequence[Filter] = ()) -> Graph:
        """Draw one unfitted graph honoring the spec and filters.

        Excludes/Functions/MaxDepth restrict the draw itself; Contains is
        enforced by rejection with a capped number of attempts.
        """
        with self._lock:
            self._check_spec_registered(spec)
            contains, feats, max_depth, kinds = self._digest_filters(spec, filters)
            for attempt in range(1, REJECTION_CAP + 1):
                g = self._draw(spec, feats, kinds, max_depth)
                if not contains or contains <= {n for n, _ in g.features()}:
                    return g
            raise FilterStarvationError(REJECTION_CAP, 0)

    def sample_graphs(self, spec: GraphSpec, count: int, filters=()) -> list[Graph]:
        return [self.sample_graph(spec, filters) for _ in range(count)]

    def _draw(self, spec: GraphSpec, feats: list, kinds: frozenset, max_depth: int) -> Graph:
        rng = self._rng
        alpha = self.config.alpha
        eff = min(max_depth, self.config.depth)
        island = int(rng.integers(self.config.islands))
        cols = self._island_cols[island]
        out_col = cols[int(rng.integers(len(cols)))]

        kind_list = [k for k in KINDS if k in kinds]
        kind_idx = [KINDS.index(k) for k in kind_list]

        registers: dict[str, Node] = {}
        interactions: list[Node] = []
        counter = [0]
        stype_of = dict(spec.inputs)

        def register_for(name: str) -> str:
            node = registers.get(name)
            if node is None:
                node = Node(
                    id=f"in:{name}",
                    role=INPUT,
                    feature=name,
                    stype=stype_of[name],
                )
                registers[name] = node
            return node.id

        def draw_kind(cell) -> str:
            w = self._kind_counts[cell[0], cell[1]][kind_idx] + alpha
            return kind_list[int(rng.choice(len(kind_list), p=w / w.sum()))]

        def draw_source(cell):
            col, layer = cell
            candidates: list = list(feats)
            for l2 in range(layer):
                for c2 in cols:
                    candidates.append((c2, l2))
            sc = self._source_counts.get(cell, {})
            w = np.asarray([sc.get(s, 0.0) + alpha for s in candidates])
            return candidates[int(rng.choice(len(candidates), p=w / w.sum()))]

        def build(cell) -> str:
            kind = draw_kind(cell)
            incoming = []
            for _ in range(ARITY[kind]):
                src = draw_source(cell)
                if isinstance(src, str):
                    incoming.append(register_for(src))
                else:
                    incoming.append(build(src))
            node = Node(
                id=f"i{counter[0]}",
                role=INTERACTION,
                kind=kind,
                incoming=tuple(incoming),
                cell=cell,
            )
            counter[0] += 1
            interactions.append(node)
            return node.id

        root = build((out_col, eff - 1))
        out = Node(id="out", role=OUTPUT, feature=spec.output, incoming=(root,))
        nodes = tuple(registers.values()) + tuple(interactions) + (out,)
        return Graph(nodes=nodes, task=spec.task)

    # -- reinforcement ----------------------------------------------------

    def update(self, graphs: Iterable[Graph]) -> "Lattice":
        """Reinforce the lattice with the structures of the given graphs.

        Only topology, kinds, and feature names are read.  Every
        interaction node must carry its lattice cell.
        """
        graphs = list(graphs)
        with self._lock:
            for g in graphs:
                problems = g.validate()
                if problems:
                    raise ValueError("graph does not validate: " + "; ".join(problems))
                for name, stype in g.features():
                    have = self._features.get(name)
                    if have is None:
                        raise ConfigError(
                            f"graph references unregistered feature {name!r}"
                        )
                    if have != stype:
                        raise ConfigError(
                            f"graph uses feature {name!r} as {stype!r}, "
                            f"registered as {have!r}"
                        )
                for node in g.interactions:
                    if node.cell is None:
                        raise ValueError(
                            f"interaction {node.id!r} has no lattice cell; "
                            "only lattice-sampled structures can reinforce"
                        )
                    self._check_cell(node.cell)
            for g in graphs:
                for node in g.interactions:
                    cell = (int(node.cell[0]), int(node.cell[1]))
                    self._kind_counts[cell[0], cell[1]][KINDS.index(node.kind)] += 1.0
                    table = self._source_counts.setdefault(cell, {})
                    for src_id in node.incoming:
                        src = g.node(src_id)
                        key = src.feature if src.role == INPUT else (
                            int(src.cell[0]),
                            int(src.cell[1]),
                        )
                        table[key] = table.get(key, 0.0) + 1.0
        return self

    def reset(self) -> "Lattice":
        """Forget all counts and features; reseed deterministically."""
        with self._lock:
            new_seed = int(self._rng.integers(2**63))
            self.config = replace(self.config, seed=new_seed)
            self._rng = np.random.default_rng(new_seed)
            self._kind_counts[:] = 0.0
            self._source_counts = {}
            self._features = {}
            self._outputs = set()
        return self

    # -- pools ------------------------------------------------------------

    def ask(self, spec: GraphSpec, filters=(), capacity: int = 200, **kwargs):
        """Open a pool of candidate graphs for this question."""
        from .pool import GraphPool

        self.register_features(spec.inputs, spec.output)
        return GraphPool(self, spec, filters=filters, capacity=capacity, **kwargs)

    # -- persistence ------------------------------------------------------

    @staticmethod
    def _source_key_to_json(key) -> str:
        if isinstance(key, str):
            return f"feature:{key}"
        return f"cell:{key[0]},{key[1]}"

    @staticmethod
    def _source_key_from_json(text: str):
        tag, _, rest = text.partition(":")
        if tag == "feature":
            return rest
        col, _, layer = rest.partition(",")
        return (int(col), int(layer))

    def snapshot(self) -> dict:
        """Full JSON-serializable state: config, counts, features, RNG."""
        with self._lock:
            counts = []
            for col in range(self.config.width):
                for layer in range(self.config.depth):
                    kc = self._kind_counts[col, layer]
                    sc = self._source_counts.get((col, layer), {})
                    if not kc.any() and not sc:
                        continue
                    counts.append(
                        {
                            "cell": [col, layer],
                            "kinds": {k: float(c) for k, c in zip(KINDS, kc) if c},
                            "sources": {
                                self._source_key_to_json(k): float(v)
                                for k, v in sorted(sc.items(), key=lambda kv: str(kv[0]))
                            },
                        }
                    )
            state = self._rng.bit_generator.state
            return {
                "version": 1,
                "config": self.config.to_json(),
                "counts": counts,
                "islands": [self._col_island[c] for c in range(self.config.width)],
                "features": [[n, s] for n, s in sorted(self._features.items())],
                "outputs": sorted(self._outputs),
                "rng": _jsonable(state),
            }

    @classmethod
    def from_snapshot(cls, payload: Mapping) -> "Lattice":
        if payload.get("version") != 1:
            raise ValueError(f"unsupported lattice snapshot version {payload.get('version')!r}")
        config = LatticeConfig(**payload["config"])
        lat = cls(config)
        for row in payload["counts"]:
            cell = (int(row["cell"][0]), int(row["cell"][1]))
            lat._check_cell(cell)
            for kind, c in row.get("kinds", {}).items():
                lat._kind_counts[cell[0], cell[1]][KINDS.index(kind)] = float(c)
            sources = {
                cls._source_key_from_json(k): float(v)
                for k, v in row.get("sources", {}).items()
            }
            if sources:
                lat._source_counts[cell] = sources
        for name, stype in payload.get("features", []):
            lat._features[name] = stype
        lat._outputs = set(payload.get("outputs", []))
        lat._rng.bit_generator.state = payload["rng"]
        return lat


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj
