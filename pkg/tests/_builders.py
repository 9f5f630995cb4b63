"""Hand-built graphs for tests: explicit nodes, explicit parameters."""

from __future__ import annotations

import numpy as np

from symlattice import Graph, Node
from symlattice.graph import ARITY, CLASSIFIER, INPUT, INTERACTION, NUMERICAL, OUTPUT, REGRESSOR


def num_register(node_id: str, feature: str, lo=-1.0, hi=1.0, w=1.0, b=0.0) -> Node:
    return Node(
        id=node_id,
        role=INPUT,
        feature=feature,
        stype=NUMERICAL,
        params={"min": lo, "max": hi, "w": w, "b": b},
    )


def cat_register(node_id: str, feature: str, weights: dict, bias=0.0) -> Node:
    return Node(
        id=node_id,
        role=INPUT,
        feature=feature,
        stype="categorical",
        params={"weights": dict(weights), "bias": bias},
    )


def interaction(node_id: str, kind: str, sources, params=None, cell=(0, 0)) -> Node:
    return Node(
        id=node_id,
        role=INTERACTION,
        kind=kind,
        incoming=tuple(sources),
        params=dict(params) if params else None,
        cell=cell,
    )


def output(node_id: str, feature: str, source: str, w=1.0, b=0.0) -> Node:
    return Node(
        id=node_id,
        role=OUTPUT,
        feature=feature,
        incoming=(source,),
        params={"w": w, "b": b},
    )


def single_kind_graph(kind: str, task: str = REGRESSOR, reg_kw=None, out_kw=None) -> Graph:
    """input register(s) -> one interaction of `kind` -> output register."""
    reg_kw = reg_kw or {}
    out_kw = out_kw or {}
    nodes = [num_register("i0", "x0", **reg_kw)]
    sources = ["i0"]
    if ARITY[kind] == 2:
        nodes.append(num_register("i1", "x1", **reg_kw))
        sources.append("i1")
    params = {"w": 0.7, "b": 0.1} if kind == "linear" else None
    nodes.append(interaction("n0", kind, sources, params=params))
    nodes.append(output("out", "y", "n0", **out_kw))
    return Graph(tuple(nodes), task=task)


def two_feature_linear_classifier(w0=0.8, b0=0.1, w1=-0.5, b1=0.0, wo=1.3, bo=-0.2) -> Graph:
    """add(scale(x0), scale(x1)) -> logistic output: a plainly linear model."""
    nodes = (
        num_register("i0", "x0", lo=-2.0, hi=2.0, w=w0, b=b0),
        num_register("i1", "x1", lo=-3.0, hi=3.0, w=w1, b=b1),
        interaction("n0", "add", ("i0", "i1")),
        output("out", "target", "n0", w=wo, b=bo),
    )
    return Graph(nodes, task=CLASSIFIER)


def multiply_graph(wo=1.0, bo=0.0) -> Graph:
    nodes = (
        num_register("i0", "x0", lo=-2.0, hi=2.0),
        num_register("i1", "x1", lo=-2.0, hi=2.0),
        interaction("n0", "multiply", ("i0", "i1")),
        output("out", "y", "n0", w=wo, b=bo),
    )
    return Graph(nodes, task=REGRESSOR)


def safe_columns(graph: Graph, n: int, seed: int = 0, span=(-0.9, 0.9)) -> dict:
    """Random feature columns inside the registers' training ranges."""
    rng = np.random.default_rng(seed)
    cols = {}
    for reg in graph.input_registers:
        lo, hi = reg.params["min"], reg.params["max"]
        mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0
        cols.setdefault(
            reg.feature, mid + half * rng.uniform(span[0], span[1], n)
        )
    return cols
