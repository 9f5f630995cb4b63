"""Model graphs and their deterministic forward evaluation.

A graph is a small directed acyclic dataflow.  Input registers bind named
feature columns and encode raw values into a bounded working range,
interaction nodes apply one of ten fixed scalar functions, and a single
output register turns its incoming signal into the prediction through an
affine transform (plus a logistic squash for classifiers).

Graphs behave as value objects: after construction, and after fitting
(which operates on a private copy), nothing mutates them in place, so they
can be shared and evaluated from any number of threads without locking.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Iterable, Mapping

import numpy as np

__all__ = [
    "NUMERICAL",
    "CATEGORICAL",
    "STYPES",
    "INPUT",
    "INTERACTION",
    "OUTPUT",
    "CLASSIFIER",
    "REGRESSOR",
    "TASKS",
    "KINDS",
    "ARITY",
    "GUARD_EPS",
    "CLIP_BOUND",
    "PROB_FLOOR",
    "Node",
    "Graph",
    "EvaluationError",
    "SingularInputError",
    "NonFiniteError",
    "MissingFeatureError",
    "GraphStructureError",
    "UnseenCategoryWarning",
    "eval_interaction",
    "interaction_arity",
    "encode_register",
    "forward",
    "logistic",
]

# semantic types for register features
NUMERICAL = "numerical"
CATEGORICAL = "categorical"
STYPES = (NUMERICAL, CATEGORICAL)

# node roles
INPUT = "input-register"
INTERACTION = "interaction"
OUTPUT = "output-register"

# tasks
CLASSIFIER = "classifier"
REGRESSOR = "regressor"
TASKS = (CLASSIFIER, REGRESSOR)

GUARD_EPS = 1e-12   # log/inverse singularity guard
CLIP_BOUND = 3.0    # encoded register values live in [-3, 3]
PROB_FLOOR = 1e-15  # classifier outputs stay strictly inside (0, 1)


class EvaluationError(ValueError):
    """A forward pass could not produce a finite value."""


class SingularInputError(EvaluationError):
    """log/inverse received an argument inside the guard band."""

    def __init__(self, node_id: str, sample_index: int | None = None):
        self.node_id = node_id
        self.sample_index = sample_index
        at = f" (sample {sample_index})" if sample_index is not None else ""
        super().__init__(f"singular input to node {node_id!r}{at}")


class NonFiniteError(EvaluationError):
    def __init__(self, node_id: str, sample_index: int | None = None):
        self.node_id = node_id
        self.sample_index = sample_index
        at = f" (sample {sample_index})" if sample_index is not None else ""
        super().__init__(f"non-finite evaluation at node {node_id!r}{at}")


class MissingFeatureError(KeyError):
    def __init__(self, feature: str):
        self.feature = feature
        super().__init__(feature)

    def __str__(self) -> str:
        return f"sample is missing feature {self.feature!r}"


class GraphStructureError(ValueError):
    """The node list does not describe a usable graph."""


class UnseenCategoryWarning(UserWarning):
    """A categorical register met a value absent from its weight table."""


# ---------------------------------------------------------------------------
# the ten interaction functions

ARITY = {
    "add": 2,
    "multiply": 2,
    "squared": 1,
    "linear": 1,
    "tanh": 1,
    "gaussian1": 1,
    "gaussian2": 2,
    "exp": 1,
    "log": 1,
    "inverse": 1,
}
KINDS = tuple(ARITY)

# forward functions; `linear` is handled separately because it carries
# trainable parameters (w, b)
G = {
    "add": lambda a, b: a + b,
    "multiply": lambda a, b: a * b,
    "squared": lambda a: a * a,
    "tanh": np.tanh,
    "gaussian1": lambda a: np.exp(-(a * a)),
    "gaussian2": lambda a, b: np.exp(-(a * a + b * b)),
    "exp": np.exp,
    "log": np.log,
    "inverse": lambda a: 1.0 / a,
}

# partial derivatives with respect to each argument; `v` is the already
# computed function value, reused where that saves work
DG = {
    "add": (lambda a, b, v: np.ones_like(v), lambda a, b, v: np.ones_like(v)),
    "multiply": (lambda a, b, v: b, lambda a, b, v: a),
    "squared": (lambda a, v: 2.0 * a,),
    "tanh": (lambda a, v: 1.0 - v * v,),
    "gaussian1": (lambda a, v: -2.0 * a * v,),
    "gaussian2": (lambda a, b, v: -2.0 * a * v, lambda a, b, v: -2.0 * b * v),
    "exp": (lambda a, v: v,),
    "log": (lambda a, v: 1.0 / a,),
    "inverse": (lambda a, v: -v * v,),
}


def interaction_arity(kind: str) -> int:
    if kind not in ARITY:
        raise ValueError(f"unknown interaction kind {kind!r}")
    return ARITY[kind]


def _first_true(mask: np.ndarray) -> int:
    return int(np.argmax(np.atleast_1d(mask)))


def apply_kind(kind: str, args: list, params=(), node_id: str = "?"):
    """Apply one interaction function elementwise, with singularity guards."""
    if kind == "linear":
        if len(params) != 2:
            raise ValueError(f"linear node {node_id!r} needs params (w, b)")
        w, b = params
        return args[0] * w + b
    if kind == "log":
        bad = args[0] <= GUARD_EPS
        if np.any(bad):
            raise SingularInputError(node_id, _first_true(bad))
    elif kind == "inverse":
        bad = np.abs(args[0]) <= GUARD_EPS
        if np.any(bad):
            raise SingularInputError(node_id, _first_true(bad))
    try:
        fn = G[kind]
    except KeyError:
        raise ValueError(f"unknown interaction kind {kind!r}") from None
    return fn(*args)


def eval_interaction(kind: str, inputs: Iterable[float], params: Iterable[float] = ()) -> float:
    """Evaluate one interaction at scalar inputs.

    Raises SingularInputError inside the guard band of log/inverse and
    ValueError for an unknown kind or an arity mismatch.
    """
    vals = [float(x) for x in inputs]
    if len(vals) != interaction_arity(kind):
        raise ValueError(
            f"kind {kind!r} takes {interaction_arity(kind)} input(s), got {len(vals)}"
        )
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        out = apply_kind(kind, [np.float64(v) for v in vals], tuple(params), kind)
    return float(out)


def logistic(z):
    """Numerically clipped logistic; output is strictly inside (0, 1)."""
    with np.errstate(over="ignore"):
        p = 1.0 / (1.0 + np.exp(-z))
    return np.clip(p, PROB_FLOOR, 1.0 - PROB_FLOOR)


# ---------------------------------------------------------------------------
# nodes and graphs


@dataclass
class Node:
    """One vertex of a model graph.

    params holds the node's real parameters keyed by name:

    * numerical input register: ``w``, ``b`` (trainable) plus the frozen
      training range ``min``, ``max``
    * categorical input register: ``bias`` plus ``weights`` (a dict keyed
      by category string)
    * linear interaction: ``w``, ``b``
    * output register: ``w``, ``b``

    ``cell`` records the lattice cell (column, layer) that produced an
    interaction node; it is bookkeeping for reinforcement, not structure.
    """

    id: str
    role: str
    incoming: tuple[str, ...] = ()
    feature: str | None = None
    stype: str = NUMERICAL
    kind: str | None = None
    params: dict | None = None
    cell: tuple[int, int] | None = None

    def trainable_count(self) -> int:
        if self.role == INPUT:
            if self.stype == NUMERICAL:
                return 2
            return 1 + len(self.params["weights"]) if self.params else 0
        if self.role == OUTPUT or self.kind == "linear":
            return 2
        return 0


def _copy_params(params: dict | None) -> dict | None:
    if params is None:
        return None
    out = dict(params)
    if "weights" in out:
        out["weights"] = dict(out["weights"])
    return out


def _plain_params(params: dict | None) -> dict | None:
    """Param dict with every number as a plain Python float (JSON-safe)."""
    if params is None:
        return None
    out: dict[str, Any] = {}
    for k, v in params.items():
        if k == "weights":
            out[k] = {str(c): float(w) for c, w in v.items()}
        else:
            out[k] = float(v)
    return out


def encode_register(node: Node, col: np.ndarray) -> np.ndarray:
    """Encode one raw feature column through an input register.

    Numerical registers rescale the frozen training range onto [-1, 1],
    apply the trainable (w, b), and clip the result to [-3, 3].
    Categorical registers look the category up in the weight table and add
    the shared bias; unseen categories fall back to bias only and a
    counting warning is emitted.
    """
    p = node.params
    if p is None:
        raise ValueError(f"register {node.id!r} has uninitialized parameters")
    if node.stype == NUMERICAL:
        try:
            x = np.asarray(col, dtype=float)
        except (TypeError, ValueError):
            raise TypeError(
                f"numerical register {node.feature!r} got a non-numeric value"
            ) from None
        lo, hi = p["min"], p["max"]
        if hi > lo:
            s = (x - lo) / (hi - lo) * 2.0 - 1.0
        else:
            s = np.zeros_like(x)
        return np.clip(s * p["w"] + p["b"], -CLIP_BOUND, CLIP_BOUND)
    weights, bias = p["weights"], p["bias"]
    vals = np.empty(len(col), dtype=float)
    unseen = 0
    for i, c in enumerate(col):
        wv = weights.get(c)
        if wv is None:
            wv = 0.0
            unseen += 1
        vals[i] = wv + bias
    if unseen:
        warnings.warn(
            f"{unseen} value(s) of {node.feature!r} unseen in training; "
            "bias-only encoding used",
            UnseenCategoryWarning,
            stacklevel=2,
        )
    return vals


@dataclass
class Graph:
    """An immutable model graph plus its fitting status."""

    nodes: tuple[Node, ...]
    task: str
    train_loss: float | None = None
    unusable: bool = False

    def __post_init__(self):
        if not isinstance(self.nodes, tuple):
            object.__setattr__(self, "nodes", tuple(self.nodes))
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")

    # -- lookups ----------------------------------------------------------

    @cached_property
    def _by_id(self) -> dict[str, Node]:
        seen: dict[str, Node] = {}
        for node in self.nodes:
            if node.id in seen:
                raise GraphStructureError(f"duplicate node id {node.id!r}")
            seen[node.id] = node
        return seen

    def node(self, node_id: str) -> Node:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise KeyError(f"graph has no node {node_id!r}") from None

    @property
    def input_registers(self) -> tuple[Node, ...]:
        return tuple(n for n in self.nodes if n.role == INPUT)

    @property
    def interactions(self) -> tuple[Node, ...]:
        return tuple(n for n in self.nodes if n.role == INTERACTION)

    @cached_property
    def output_register(self) -> Node:
        outs = [n for n in self.nodes if n.role == OUTPUT]
        if len(outs) != 1:
            raise GraphStructureError(f"expected one output register, found {len(outs)}")
        return outs[0]

    def features(self) -> tuple[tuple[str, str], ...]:
        """Ordered unique (name, stype) pairs over the input registers."""
        seen = {}
        for n in self.input_registers:
            seen.setdefault(n.feature, n.stype)
        return tuple(seen.items())

    # -- structure --------------------------------------------------------

    @cached_property
    def _topo(self) -> tuple[str, ...]:
        pending = {n.id: len(n.incoming) for n in self.nodes}
        consumers: dict[str, list[str]] = {nid: [] for nid in pending}
        for n in self.nodes:
            for src in n.incoming:
                if src not in pending:
                    raise GraphStructureError(
                        f"node {n.id!r} references unknown source {src!r}"
                    )
                consumers[src].append(n.id)
        ready = sorted(nid for nid, deg in pending.items() if deg == 0)
        order: list[str] = []
        while ready:
            nid = ready.pop(0)
            order.append(nid)
            inserted = False
            for c in consumers[nid]:
                pending[c] -= 1
                if pending[c] == 0:
                    ready.append(c)
                    inserted = True
            if inserted:
                ready.sort()
        if len(order) != len(self.nodes):
            raise GraphStructureError("cycle detected; graph is not a DAG")
        return tuple(order)

    def topo_order(self) -> tuple[str, ...]:
        """Deterministic topological order (ties broken by node id)."""
        return self._topo

    def depth(self) -> int:
        """Longest chain of interaction nodes on any input-to-output path."""
        d: dict[str, int] = {}
        for nid in self.topo_order():
            node = self.node(nid)
            base = max((d[s] for s in node.incoming), default=0)
            d[nid] = base + (1 if node.role == INTERACTION else 0)
        return d[self.output_register.id]

    def validate(self) -> list[str]:
        """Structural checks; returns a list of violations (empty if clean)."""
        problems: list[str] = []
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            problems.append("duplicate node ids")
            return problems
        by_id = {n.id: n for n in self.nodes}

        outs = [n for n in self.nodes if n.role == OUTPUT]
        if len(outs) != 1:
            problems.append(f"expected exactly one output register, found {len(outs)}")
        if not any(n.role == INPUT for n in self.nodes):
            problems.append("no input registers")

        for n in self.nodes:
            if n.role == INPUT:
                if n.incoming:
                    problems.append(f"input register {n.id!r} has incoming edges")
                if not n.feature:
                    problems.append(f"input register {n.id!r} has no feature name")
                if n.stype not in STYPES:
                    problems.append(f"register {n.id!r} has unknown stype {n.stype!r}")
            elif n.role == INTERACTION:
                if n.kind not in ARITY:
                    problems.append(f"node {n.id!r} has unknown kind {n.kind!r}")
                elif len(n.incoming) != ARITY[n.kind]:
                    problems.append(
                        f"node {n.id!r} ({n.kind}) takes {ARITY[n.kind]} input(s), "
                        f"has {len(n.incoming)}"
                    )
            elif n.role == OUTPUT:
                if len(n.incoming) != 1:
                    problems.append(
                        f"output register {n.id!r} needs exactly one incoming edge"
                    )
                if not n.feature:
                    problems.append(f"output register {n.id!r} has no feature name")
            else:
                problems.append(f"node {n.id!r} has unknown role {n.role!r}")
            for src in n.incoming:
                if src not in by_id:
                    problems.append(f"node {n.id!r} references unknown source {src!r}")
                elif by_id[src].role == OUTPUT:
                    problems.append(f"output register feeds node {n.id!r}")

        # cycle check via Kahn's algorithm, without raising
        pending = {n.id: sum(1 for s in n.incoming if s in by_id) for n in self.nodes}
        ready = [nid for nid, deg in pending.items() if deg == 0]
        seen = 0
        while ready:
            nid = ready.pop()
            seen += 1
            for m in self.nodes:
                # a node may list the same source twice (e.g. add(a, a))
                hits = m.incoming.count(nid)
                if hits:
                    pending[m.id] -= hits
                    if pending[m.id] == 0:
                        ready.append(m.id)
        if seen != len(self.nodes):
            problems.append("cycle detected")
            return problems

        if len(outs) == 1:
            # every node must sit on a path that reaches the output register
            reach = {outs[0].id}
            stack = [outs[0].id]
            while stack:
                for src in by_id[stack.pop()].incoming:
                    if src in by_id and src not in reach:
                        reach.add(src)
                        stack.append(src)
            for n in self.nodes:
                if n.id not in reach:
                    problems.append(f"node {n.id!r} is not connected to the output")
        return problems

    @property
    def param_count(self) -> int:
        """Number of trainable real parameters (frozen scaling excluded)."""
        return sum(n.trainable_count() for n in self.nodes)

    @cached_property
    def structure_hash(self) -> str:
        """Digest of (topology, kinds, feature names); parameters excluded.

        The serialization is a canonical traversal from the output register,
        so the hash does not depend on node id spelling or list order.
        """
        index: dict[str, int] = {}
        rows: list = []

        def visit(nid: str) -> int:
            if nid in index:
                return index[nid]
            node = self.node(nid)
            srcs = [visit(s) for s in node.incoming]
            if node.role == INPUT:
                rows.append([node.role, node.feature, node.stype, srcs])
            elif node.role == INTERACTION:
                rows.append([node.role, node.kind, None, srcs])
            else:
                rows.append([node.role, None, None, srcs])
            index[nid] = len(rows) - 1
            return index[nid]

        visit(self.output_register.id)
        blob = json.dumps([self.task, rows], separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    # -- evaluation -------------------------------------------------------

    def eval(self, sample: Mapping[str, Any]) -> float:
        """Evaluate the graph at a single sample (feature name -> value)."""
        cols: dict[str, np.ndarray] = {}
        for node in self.input_registers:
            if node.feature not in sample:
                raise MissingFeatureError(node.feature)
            raw = sample[node.feature]
            if node.stype == NUMERICAL:
                cols[node.feature] = np.asarray([raw])
            else:
                cols[node.feature] = np.asarray([raw], dtype=object)
        values = forward(self, cols)
        return float(values[self.output_register.id][0])

    def with_params(self, params_by_node: Mapping[str, dict]) -> "Graph":
        """Copy of the graph with some node parameter dicts replaced."""
        nodes = tuple(
            replace(n, params=_copy_params(params_by_node.get(n.id, n.params)))
            for n in self.nodes
        )
        return replace(self, nodes=nodes)

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        nodes = []
        for n in self.nodes:
            row: dict[str, Any] = {"id": n.id, "role": n.role, "incoming": list(n.incoming)}
            if n.role == INTERACTION:
                row["kind"] = n.kind
                if n.cell is not None:
                    row["cell"] = list(n.cell)
            else:
                row["feature"] = n.feature
                if n.role == INPUT:
                    row["stype"] = n.stype
            if n.params is not None:
                row["params"] = _plain_params(n.params)
            nodes.append(row)
        out: dict[str, Any] = {"task": self.task, "nodes": nodes}
        if self.train_loss is not None:
            out["train_loss"] = float(self.train_loss)
        if self.unusable:
            out["unusable"] = True
        return out

    @classmethod
    def from_json(cls, payload: Mapping[str, Any]) -> "Graph":
        nodes = []
        for row in payload["nodes"]:
            cell = row.get("cell")
            nodes.append(
                Node(
                    id=row["id"],
                    role=row["role"],
                    incoming=tuple(row.get("incoming", ())),
                    feature=row.get("feature"),
                    stype=row.get("stype", NUMERICAL),
                    kind=row.get("kind"),
                    params=_copy_params(row.get("params")),
                    cell=tuple(cell) if cell is not None else None,
                )
            )
        return cls(
            nodes=tuple(nodes),
            task=payload["task"],
            train_loss=payload.get("train_loss"),
            unusable=bool(payload.get("unusable", False)),
        )


def forward(graph: Graph, columns: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Vectorized forward pass over equally long feature columns.

    Returns value arrays keyed by node id; the output register's
    pre-activation (the affine value before any logistic) is stored under
    ``"<output id>:pre"``.  Raises SingularInputError or NonFiniteError
    when a node cannot produce finite values.
    """
    values: dict[str, np.ndarray] = {}
    out_id = graph.output_register.id
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for nid in graph.topo_order():
            node = graph.node(nid)
            if node.role == INPUT:
                v = encode_register(node, columns[node.feature])
            elif node.role == INTERACTION:
                args = [values[s] for s in node.incoming]
                params = ()
                if node.kind == "linear":
                    if node.params is None:
                        raise ValueError(f"linear node {nid!r} has uninitialized parameters")
                    params = (node.params["w"], node.params["b"])
                v = apply_kind(node.kind, args, params, nid)
            else:
                if node.params is None:
                    raise ValueError(f"output register {nid!r} has uninitialized parameters")
                z = values[node.incoming[0]] * node.params["w"] + node.params["b"]
                values[out_id + ":pre"] = z
                v = logistic(z) if graph.task == CLASSIFIER else z
            finite = np.isfinite(v)
            if not np.all(finite):
                raise NonFiniteError(nid, _first_true(~np.atleast_1d(finite)))
            values[nid] = v
    return values
