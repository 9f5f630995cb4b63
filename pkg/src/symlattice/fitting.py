"""Parameter initialization and gradient training for a single graph.

Training is plain reverse-mode differentiation over the graph's scalar
dataflow, vectorized across the rows of the training batch.  One epoch is
one full-batch forward/backward sweep followed by an optimizer step (adam
by default, plain sgd on request).

Everything here is deterministic: initialization draws come from the seed
in FitConfig, and fitting the same graph on the same rows with the same
seed reproduces bit-identical parameters.  fit_graph never mutates the
graph it is given; it returns a fitted copy.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset, InputStats, compute_stats
from .graph import (
    CATEGORICAL,
    CLASSIFIER,
    CLIP_BOUND,
    DG,
    INPUT,
    INTERACTION,
    NUMERICAL,
    OUTPUT,
    PROB_FLOOR,
    REGRESSOR,
    EvaluationError,
    Graph,
    Node,
    UnseenCategoryWarning,
    apply_kind,
    logistic,
)

__all__ = [
    "FitConfig",
    "CROSS_ENTROPY",
    "RMSE",
    "AIC",
    "BIC",
    "CRITERIA",
    "init_params",
    "encode_input",
    "loss",
    "gradient",
    "fit_graph",
    "criterion_value",
    "predict",
    "param_vector",
    "with_param_vector",
    "batch_loss",
    "aic",
    "bic",
]

logger = logging.getLogger(__name__)

CROSS_ENTROPY = "cross_entropy"
RMSE = "rmse"
AIC = "aic"
BIC = "bic"
CRITERIA = (CROSS_ENTROPY, RMSE, AIC, BIC)

INIT_WEIGHT_SPAN = 0.5  # linear/output weights start in (-0.5, 0.5)


@dataclass(frozen=True)
class FitConfig:
    learning_rate: float = 0.01
    epochs: int = 30
    seed: int = 0
    optimizer: str = "adam"
    max_epochs: int = 10_000

    def __post_init__(self):
        if not (self.learning_rate > 0 and math.isfinite(self.learning_rate)):
            raise ValueError("learning_rate must be a positive finite number")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        if self.epochs > self.max_epochs:
            raise ValueError(f"epochs {self.epochs} exceeds the cap {self.max_epochs}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


# ---------------------------------------------------------------------------
# initialization


def init_params(graph: Graph, stats: InputStats, seed: int = 0) -> Graph:
    """Copy of the graph with parameters initialized from training stats.

    Numerical registers freeze the training (min, max) and start at
    w = 1, b = 0.  Categorical registers get one zero weight per observed
    category plus a zero shared bias.  Linear interactions and the output
    register draw w uniformly from (-0.5, 0.5) and start b at 0.
    """
    rng = np.random.default_rng(seed)
    params: dict[str, dict] = {}
    for nid in graph.topo_order():
        node = graph.node(nid)
        if node.role == INPUT:
            if node.stype == NUMERICAL:
                if node.feature not in stats.numerical:
                    raise ValueError(f"feature {node.feature!r} absent from stats")
                s = stats.numerical[node.feature]
                if s["max"] <= s["min"]:
                    warnings.warn(
                        f"feature {node.feature!r} is constant in training; "
                        "it will encode to 0.0",
                        stacklevel=2,
                    )
                params[nid] = {"w": 1.0, "b": 0.0, "min": s["min"], "max": s["max"]}
            else:
                if node.feature not in stats.categorical:
                    raise ValueError(f"feature {node.feature!r} absent from stats")
                cats = stats.categorical[node.feature]
                params[nid] = {"bias": 0.0, "weights": {c: 0.0 for c in sorted(cats)}}
        elif node.role == INTERACTION and node.kind == "linear":
            params[nid] = {"w": float(rng.uniform(-INIT_WEIGHT_SPAN, INIT_WEIGHT_SPAN)), "b": 0.0}
        elif node.role == OUTPUT:
            params[nid] = {"w": float(rng.uniform(-INIT_WEIGHT_SPAN, INIT_WEIGHT_SPAN)), "b": 0.0}
    return graph.with_params(params)


def encode_input(node: Node, raw, stats: InputStats | None = None) -> float:
    """Encode one raw value through an input register.

    Initialized registers use their own parameters.  An uninitialized
    register may be encoded against stats directly, with the default
    w = 1, b = 0 (numerical) or all-zero table (categorical).
    """
    if node.params is None:
        if stats is None:
            raise ValueError(f"register {node.id!r} is uninitialized and no stats given")
        if node.stype == NUMERICAL:
            s = stats.numerical[node.feature]
            node = replace(node, params={"w": 1.0, "b": 0.0, "min": s["min"], "max": s["max"]})
        else:
            cats = stats.categorical[node.feature]
            node = replace(node, params={"bias": 0.0, "weights": {c: 0.0 for c in sorted(cats)}})
    from .graph import encode_register

    if node.stype == NUMERICAL:
        if isinstance(raw, str):
            raise TypeError(f"numerical register {node.feature!r} got a non-numeric value")
        return float(encode_register(node, np.asarray([raw]))[0])
    return float(encode_register(node, np.asarray([raw], dtype=object))[0])


# ---------------------------------------------------------------------------
# losses and criteria


def loss(task: str, y_true, y_pred) -> float:
    """Mean task loss: binary cross-entropy (classifier) or MSE (regressor)."""
    y = np.asarray(y_true, dtype=float)
    p = np.asarray(y_pred, dtype=float)
    if y.shape != p.shape or y.ndim != 1 or len(y) == 0:
        raise ValueError("y_true and y_pred must be equal-length nonempty vectors")
    if task == CLASSIFIER:
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("classifier targets must be 0 or 1")
        if np.any(p <= 0) or np.any(p >= 1):
            raise ValueError("classifier predictions must lie strictly inside (0, 1)")
        return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))
    if task == REGRESSOR:
        return float(np.mean((y - p) ** 2))
    raise ValueError(f"unknown task {task!r}")


def aic(log_likelihood: float, num_params: int) -> float:
    return 2.0 * num_params - 2.0 * log_likelihood


def bic(log_likelihood: float, num_params: int, num_samples: int) -> float:
    return num_params * math.log(num_samples) - 2.0 * log_likelihood


def _log_likelihood(task: str, mean_loss: float, n: int) -> float:
    if task == CLASSIFIER:
        return -n * mean_loss
    return -0.5 * n * (math.log(2.0 * math.pi * mean_loss) + 1.0)


def criterion_value(graph: Graph, data: Dataset, criterion: str) -> float:
    """Model-selection score (lower is better) of a fitted graph on data."""
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}")
    if criterion == CROSS_ENTROPY and graph.task != CLASSIFIER:
        raise ValueError("cross_entropy applies to classifier graphs only")
    if criterion == RMSE and graph.task != REGRESSOR:
        raise ValueError("rmse applies to regressor graphs only")
    tape = _Tape(graph, data)
    mean = tape.loss(param_vector(graph))
    if criterion == CROSS_ENTROPY:
        return mean
    if criterion == RMSE:
        return math.sqrt(mean)
    lnl = _log_likelihood(graph.task, mean, tape.n)
    k = graph.param_count
    return aic(lnl, k) if criterion == AIC else bic(lnl, k, tape.n)


def predict(graph: Graph, data: Dataset) -> np.ndarray:
    """Evaluate the graph over every row of the dataset."""
    from .graph import forward

    cols = {}
    for name, stype in graph.features():
        col = data.column(name)
        if stype == NUMERICAL:
            arr = np.asarray(col, dtype=float)
            if not np.all(np.isfinite(arr)):
                raise ValueError(
                    f"feature {name!r} has missing values; drop or fill them before analysis"
                )
            cols[name] = arr
        else:
            if any(v is None for v in col):
                raise ValueError(
                    f"feature {name!r} has missing values; drop or fill them before analysis"
                )
            cols[name] = col
    values = forward(graph, cols)
    return values[graph.output_register.id]


# ---------------------------------------------------------------------------
# the tape: prepared forward/backward over one (graph, batch) pair


def _trainable_entries(graph: Graph) -> list[tuple[str, str, str | None]]:
    """Deterministic (node_id, key, category) layout of the trainable vector."""
    entries: list[tuple[str, str, str | None]] = []
    for nid in graph.topo_order():
        node = graph.node(nid)
        if node.role == INPUT:
            if node.stype == NUMERICAL:
                entries.append((nid, "w", None))
                entries.append((nid, "b", None))
            else:
                entries.append((nid, "bias", None))
                for c in node.params["weights"]:
                    entries.append((nid, "weights", c))
        elif (node.role == INTERACTION and node.kind == "linear") or node.role == OUTPUT:
            entries.append((nid, "w", None))
            entries.append((nid, "b", None))
    return entries


def _require_initialized(graph: Graph) -> None:
    for node in graph.nodes:
        needs = node.role in (INPUT, OUTPUT) or node.kind == "linear"
        if needs and node.params is None:
            raise ValueError(f"node {node.id!r} has uninitialized parameters")


def param_vector(graph: Graph) -> np.ndarray:
    """Flatten the trainable parameters into one vector."""
    _require_initialized(graph)
    out = []
    for nid, key, cat in _trainable_entries(graph):
        p = graph.node(nid).params
        out.append(p["weights"][cat] if cat is not None else p[key])
    return np.asarray(out, dtype=float)


def with_param_vector(graph: Graph, vec: np.ndarray) -> Graph:
    """Copy of the graph with trainable parameters taken from the vector."""
    _require_initialized(graph)
    entries = _trainable_entries(graph)
    if len(vec) != len(entries):
        raise ValueError(f"expected {len(entries)} parameters, got {len(vec)}")
    params: dict[str, dict] = {}
    for (nid, key, cat), v in zip(entries, vec):
        p = params.get(nid)
        if p is None:
            src = graph.node(nid).params
            p = dict(src)
            if "weights" in p:
                p["weights"] = dict(p["weights"])
            params[nid] = p
        if cat is not None:
            p["weights"][cat] = float(v)
        else:
            p[key] = float(v)
    return graph.with_params(params)


class _Tape:
    """Precomputed forward/backward context for one (graph, dataset) pair.

    Rows with a missing value in any used feature or in the target are
    excluded up front (the count is logged).  The frozen pieces of every
    register (the scaled numerical column, the category codes) are computed
    once; each epoch only replays the trainable part.
    """

    def __init__(self, graph: Graph, data: Dataset):
        problems = graph.validate()
        if problems:
            raise ValueError("graph does not validate: " + "; ".join(problems))
        self.graph = graph
        self.task = graph.task
        out = graph.output_register
        target = out.feature
        if target not in data.names:
            raise KeyError(f"target column {target!r} missing from data")

        mask = np.ones(data.n, dtype=bool)
        for name, stype in graph.features():
            col = data.column(name)
            if stype == NUMERICAL:
                mask &= np.isfinite(np.asarray(col, dtype=float))
            else:
                mask &= np.asarray([v is not None for v in col])
        tcol = np.asarray(data.column(target), dtype=float)
        mask &= np.isfinite(tcol)
        dropped = int(data.n - mask.sum())
        if dropped:
            logger.info("excluding %d row(s) with missing values", dropped)
        if mask.sum() == 0:
            raise ValueError("no complete rows to fit on")
        self.n = int(mask.sum())
        self.y = tcol[mask]
        if self.task == CLASSIFIER and not np.all((self.y == 0) | (self.y == 1)):
            raise ValueError(f"classifier target {target!r} must contain only 0 and 1")

        entries = _trainable_entries(graph)
        self.entries = entries
        self.slot = {(nid, key, cat): i for i, (nid, key, cat) in enumerate(entries)}

        # frozen register inputs
        self.scaled: dict[str, np.ndarray] = {}
        self.codes: dict[str, np.ndarray] = {}
        self.ncat: dict[str, int] = {}
        unseen = 0
        for node in graph.input_registers:
            col = data.column(node.feature)
            if node.stype == NUMERICAL:
                x = np.asarray(col, dtype=float)[mask]
                lo, hi = node.params["min"], node.params["max"]
                if hi > lo:
                    self.scaled[node.id] = (x - lo) / (hi - lo) * 2.0 - 1.0
                else:
                    self.scaled[node.id] = np.zeros_like(x)
            else:
                cats = list(node.params["weights"])
                index = {c: i for i, c in enumerate(cats)}
                codes = np.asarray(
                    [index.get(v, len(cats)) for v in np.asarray(col, dtype=object)[mask]],
                    dtype=int,
                )
                unseen += int(np.sum(codes == len(cats)))
                self.codes[node.id] = codes
                self.ncat[node.id] = len(cats)
        if unseen:
            warnings.warn(
                f"{unseen} categorical value(s) unseen in training; "
                "bias-only encoding used",
                UnseenCategoryWarning,
                stacklevel=3,
            )

        self.order = [graph.node(nid) for nid in graph.topo_order()]
        self.out_id = out.id

    # -- forward ----------------------------------------------------------

    def _forward(self, vec: np.ndarray):
        values: dict[str, np.ndarray] = {}
        aux: dict[str, np.ndarray] = {}
        slot = self.slot
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            for node in self.order:
                nid = node.id
                if node.role == INPUT:
                    if node.stype == NUMERICAL:
                        pre = self.scaled[nid] * vec[slot[(nid, "w", None)]] + vec[
                            slot[(nid, "b", None)]
                        ]
                        aux[nid] = np.abs(pre) < CLIP_BOUND  # clip pass-through mask
                        v = np.clip(pre, -CLIP_BOUND, CLIP_BOUND)
                    else:
                        wvec = np.empty(self.ncat[nid] + 1)
                        for c, i in zip(node.params["weights"], range(self.ncat[nid])):
                            wvec[i] = vec[slot[(nid, "weights", c)]]
                        wvec[-1] = 0.0  # unseen category: bias only
                        v = wvec[self.codes[nid]] + vec[slot[(nid, "bias", None)]]
                elif node.role == INTERACTION:
                    args = [values[s] for s in node.incoming]
                    if node.kind == "linear":
                        v = args[0] * vec[slot[(nid, "w", None)]] + vec[slot[(nid, "b", None)]]
                    else:
                        v = apply_kind(node.kind, args, (), nid)
                else:
                    z = values[node.incoming[0]] * vec[slot[(nid, "w", None)]] + vec[
                        slot[(nid, "b", None)]
                    ]
                    aux[nid] = z
                    v = logistic(z) if self.task == CLASSIFIER else z
                finite = np.isfinite(v)
                if not np.all(finite):
                    from .graph import NonFiniteError, _first_true

                    raise NonFiniteError(nid, _first_true(~finite))
                values[nid] = v
        return values, aux

    def loss(self, vec: np.ndarray) -> float:
        values, _ = self._forward(vec)
        p = values[self.out_id]
        if self.task == CLASSIFIER:
            return float(
                -np.mean(self.y * np.log(p) + (1.0 - self.y) * np.log(1.0 - p))
            )
        return float(np.mean((p - self.y) ** 2))

    # -- backward ---------------------------------------------------------

    def loss_grad(self, vec: np.ndarray) -> tuple[float, np.ndarray]:
        values, aux = self._forward(vec)
        slot = self.slot
        n = self.n
        grad = np.zeros_like(vec)
        adj: dict[str, np.ndarray] = {}

        out = self.order[-1] if self.order[-1].id == self.out_id else None
        if out is None:
            out = next(nd for nd in self.order if nd.id == self.out_id)
        p = values[self.out_id]
        if self.task == CLASSIFIER:
            lv = float(-np.mean(self.y * np.log(p) + (1.0 - self.y) * np.log(1.0 - p)))
            # fused logistic + cross-entropy adjoint on the pre-activation
            dz = (p - self.y) / n
        else:
            lv = float(np.mean((p - self.y) ** 2))
            dz = 2.0 * (p - self.y) / n
        h = values[out.incoming[0]]
        w_out = vec[slot[(out.id, "w", None)]]
        grad[slot[(out.id, "w", None)]] = float(np.dot(dz, h))
        grad[slot[(out.id, "b", None)]] = float(np.sum(dz))
        _accumulate(adj, out.incoming[0], dz * w_out)

        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            for node in reversed(self.order):
                if node.role == OUTPUT or node.id not in adj:
                    continue
                nid = node.id
                u = adj[nid]
                if node.role == INTERACTION:
                    args = [values[s] for s in node.incoming]
                    v = values[nid]
                    if node.kind == "linear":
                        w = vec[slot[(nid, "w", None)]]
                        grad[slot[(nid, "w", None)]] = float(np.dot(u, args[0]))
                        grad[slot[(nid, "b", None)]] = float(np.sum(u))
                        _accumulate(adj, node.incoming[0], u * w)
                    else:
                        for leg, dfn in enumerate(DG[node.kind]):
                            _accumulate(adj, node.incoming[leg], u * dfn(*args, v))
                else:  # input register
                    if node.stype == NUMERICAL:
                        live = u * aux[nid]
                        grad[slot[(nid, "w", None)]] += float(np.dot(live, self.scaled[nid]))
                        grad[slot[(nid, "b", None)]] += float(np.sum(live))
                    else:
                        codes = self.codes[nid]
                        ncat = self.ncat[nid]
                        grad[slot[(nid, "bias", None)]] += float(np.sum(u))
                        sums = np.bincount(codes, weights=u, minlength=ncat + 1)
                        for c, i in zip(node.params["weights"], range(ncat)):
                            grad[slot[(nid, "weights", c)]] += float(sums[i])
        return lv, grad


def _accumulate(adj: dict[str, np.ndarray], nid: str, val: np.ndarray) -> None:
    if nid in adj:
        adj[nid] = adj[nid] + val
    else:
        adj[nid] = val


# ---------------------------------------------------------------------------
# public gradient / fit entry points


def _param_id(nid: str, key: str, cat: str | None) -> str:
    if cat is not None:
        return f"{nid}.weights[{cat}]"
    return f"{nid}.{key}"


def batch_loss(graph: Graph, data: Dataset) -> float:
    """Mean task loss of an initialized graph over the usable rows."""
    tape = _Tape(graph, data)
    return tape.loss(param_vector(graph))


def gradient(graph: Graph, data: Dataset) -> dict[str, float]:
    """Exact reverse-mode gradient of the task loss for every trainable
    parameter, keyed '<node id>.<param>'.  Frozen scaling entries are absent."""
    tape = _Tape(graph, data)
    _, g = tape.loss_grad(param_vector(graph))
    return {
        _param_id(nid, key, cat): float(g[i])
        for i, (nid, key, cat) in enumerate(tape.entries)
    }


def fit_graph(
    graph: Graph,
    train: Dataset,
    config: FitConfig | None = None,
    stats: InputStats | None = None,
) -> Graph:
    """Fit a copy of the graph on the training rows.

    Uninitialized graphs are initialized first (from `stats`, or stats
    computed on `train`).  A batch evaluation that hits a log/inverse
    singularity or overflows marks the returned copy unusable instead of
    raising; pools discard such members.
    """
    config = config or FitConfig()
    g = graph
    try:
        _require_initialized(g)
    except ValueError:
        g = init_params(graph, stats or compute_stats(train), config.seed)

    try:
        tape = _Tape(g, train)
        vec = param_vector(g)
        lr = config.learning_rate
        if config.optimizer == "adam":
            b1, b2, eps = 0.9, 0.999, 1e-8
            m = np.zeros_like(vec)
            s = np.zeros_like(vec)
            for t in range(1, config.epochs + 1):
                _, grad = tape.loss_grad(vec)
                m = b1 * m + (1.0 - b1) * grad
                s = b2 * s + (1.0 - b2) * grad * grad
                mhat = m / (1.0 - b1**t)
                shat = s / (1.0 - b2**t)
                vec = vec - lr * mhat / (np.sqrt(shat) + eps)
        else:
            for _ in range(config.epochs):
                _, grad = tape.loss_grad(vec)
                vec = vec - lr * grad
        final = tape.loss(vec)
    except EvaluationError:
        return replace(g, unusable=True, train_loss=None)
    fitted = with_param_vector(g, vec)
    return replace(fitted, train_loss=float(final))
