"""Closed-form expressions extracted from fitted graphs.

to_expression walks a fitted graph and produces an expression tree whose
evaluation reproduces the graph's forward pass at full precision, including
register scaling, the [-3, 3] clip, category lookups, the output affine and
the classifier squash.  render turns a tree into text or LaTeX with
significant-digit rounding; eval_expression evaluates it on one sample.

Simplification is deliberately minimal: render drops factors that are
exactly 1, addends that are exactly 0, and composes directly nested affine
maps into a single (w, b) pair.  Nothing else is rewritten, so the printed
equation stays a faithful read of the model.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .graph import (
    ARITY,
    CLASSIFIER,
    CLIP_BOUND,
    GUARD_EPS,
    INPUT,
    INTERACTION,
    NUMERICAL,
    Graph,
    GraphStructureError,
    MissingFeatureError,
    NonFiniteError,
    SingularInputError,
    UnseenCategoryWarning,
    logistic,
)

__all__ = [
    "Expr",
    "Const",
    "Var",
    "CatLookup",
    "Scale",
    "Affine",
    "Unary",
    "Binary",
    "Logistic",
    "to_expression",
    "eval_expression",
    "render",
    "graph_equation",
    "weight_tables",
    "expr_to_json",
    "expr_from_json",
]

UNARY_OPS = ("squared", "tanh", "gaussian1", "exp", "log", "inverse", "clip")
BINARY_OPS = ("add", "multiply", "gaussian2")


class Expr:
    """Base marker for expression tree nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class CatLookup(Expr):
    """Category -> weight table plus a shared bias, as one named function."""

    feature: str
    table: tuple[tuple[str, float], ...]
    bias: float


@dataclass(frozen=True)
class Scale(Expr):
    """Register scaling: ((x - lo) / (hi - lo) * 2 - 1) * w + b, clipped.

    Kept as its own node so evaluation repeats the register arithmetic
    operation for operation; render rewrites it to clip(A*x + B).
    """

    child: Expr
    lo: float
    hi: float
    w: float
    b: float


@dataclass(frozen=True)
class Affine(Expr):
    child: Expr
    w: float
    b: float


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    child: Expr

    def __post_init__(self):
        if self.op not in UNARY_OPS:
            raise ValueError(f"unknown unary op {self.op!r}")


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown binary op {self.op!r}")


@dataclass(frozen=True)
class Logistic(Expr):
    child: Expr


# ---------------------------------------------------------------------------
# graph -> expression


def _fitted_params(node, *keys):
    p = node.params
    if p is None or any(k not in p for k in keys):
        raise ValueError(
            f"graph is not fitted: node {node.id!r} has no parameters; "
            "fit the graph before converting it to an expression"
        )
    return p


def to_expression(graph: Graph) -> Expr:
    """Convert a fitted graph into an equivalent expression tree."""
    problems = graph.validate()
    if problems:
        raise GraphStructureError("; ".join(problems))

    memo: dict[str, Expr] = {}

    def build(nid: str) -> Expr:
        if nid in memo:
            return memo[nid]
        node = graph.node(nid)
        if node.role == INPUT:
            if node.stype == NUMERICAL:
                p = _fitted_params(node, "w", "b", "min", "max")
                e: Expr = Scale(
                    Var(node.feature),
                    lo=float(p["min"]),
                    hi=float(p["max"]),
                    w=float(p["w"]),
                    b=float(p["b"]),
                )
            else:
                p = _fitted_params(node, "weights", "bias")
                table = tuple(sorted((str(k), float(v)) for k, v in p["weights"].items()))
                e = CatLookup(node.feature, table, float(p["bias"]))
        elif node.role == INTERACTION:
            if node.kind == "linear":
                p = _fitted_params(node, "w", "b")
                e = Affine(build(node.incoming[0]), w=float(p["w"]), b=float(p["b"]))
            elif ARITY[node.kind] == 1:
                e = Unary(node.kind, build(node.incoming[0]))
            else:
                e = Binary(node.kind, build(node.incoming[0]), build(node.incoming[1]))
        else:
            raise GraphStructureError(f"unexpected role {node.role!r} below the output")
        memo[nid] = e
        return e

    out = graph.output_register
    p = _fitted_params(out, "w", "b")
    core = Affine(build(out.incoming[0]), w=float(p["w"]), b=float(p["b"]))
    return Logistic(core) if graph.task == CLASSIFIER else core


# ---------------------------------------------------------------------------
# evaluation


def _finite(v: np.float64, label: str) -> np.float64:
    if not np.isfinite(v):
        raise NonFiniteError(label, 0)
    return v


def eval_expression(expr: Expr, sample: Mapping[str, Any]) -> float:
    """Evaluate an expression tree at one sample (feature name -> value).

    The arithmetic repeats the graph forward pass step by step, so a
    converted graph and its expression agree to the last bit wherever both
    evaluate; guard-band and non-finite conditions raise the same errors.
    """

    def ev(e: Expr) -> np.float64:
        if isinstance(e, Const):
            return np.float64(e.value)
        if isinstance(e, Var):
            if e.name not in sample:
                raise MissingFeatureError(e.name)
            return np.float64(sample[e.name])
        if isinstance(e, CatLookup):
            if e.feature not in sample:
                raise MissingFeatureError(e.feature)
            cat = sample[e.feature]
            wv = dict(e.table).get(cat)
            if wv is None:
                wv = 0.0
                warnings.warn(
                    f"1 value(s) of {e.feature!r} unseen in training; "
                    "bias-only encoding used",
                    UnseenCategoryWarning,
                    stacklevel=2,
                )
            return _finite(np.float64(wv) + np.float64(e.bias), f"cat:{e.feature}")
        if isinstance(e, Scale):
            x = ev(e.child)
            if e.hi > e.lo:
                s = (x - e.lo) / (e.hi - e.lo) * 2.0 - 1.0
            else:
                s = np.float64(0.0)
            return _finite(
                np.clip(s * e.w + e.b, -CLIP_BOUND, CLIP_BOUND), "scale"
            )
        if isinstance(e, Affine):
            return _finite(ev(e.child) * e.w + e.b, "affine")
        if isinstance(e, Unary):
            a = ev(e.child)
            if e.op == "squared":
                v = a * a
            elif e.op == "tanh":
                v = np.tanh(a)
            elif e.op == "gaussian1":
                v = np.exp(-(a * a))
            elif e.op == "exp":
                v = np.exp(a)
            elif e.op == "log":
                if a <= GUARD_EPS:
                    raise SingularInputError("log", 0)
                v = np.log(a)
            elif e.op == "inverse":
                if np.abs(a) <= GUARD_EPS:
                    raise SingularInputError("inverse", 0)
                v = 1.0 / a
            else:  # clip
                v = np.clip(a, -CLIP_BOUND, CLIP_BOUND)
            return _finite(v, e.op)
        if isinstance(e, Binary):
            a, b = ev(e.left), ev(e.right)
            if e.op == "add":
                v = a + b
            elif e.op == "multiply":
                v = a * b
            else:  # gaussian2
                v = np.exp(-(a * a + b * b))
            return _finite(v, e.op)
        if isinstance(e, Logistic):
            return _finite(np.float64(logistic(ev(e.child))), "logistic")
        raise TypeError(f"not an expression node: {e!r}")

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return float(ev(expr))


# ---------------------------------------------------------------------------
# rendering


def _normalize(e: Expr) -> Expr:
    """Rewrite Scale nodes into clip(A*x + B) for display."""
    if isinstance(e, Scale):
        child = _normalize(e.child)
        if e.hi > e.lo:
            span = e.hi - e.lo
            a = 2.0 * e.w / span
            b = e.b - e.w - 2.0 * e.w * e.lo / span
            inner: Expr = Affine(child, a, b)
        else:
            inner = Const(e.b)
        return Unary("clip", inner)
    if isinstance(e, Affine):
        return Affine(_normalize(e.child), e.w, e.b)
    if isinstance(e, Unary):
        return Unary(e.op, _normalize(e.child))
    if isinstance(e, Binary):
        return Binary(e.op, _normalize(e.left), _normalize(e.right))
    if isinstance(e, Logistic):
        return Logistic(_normalize(e.child))
    return e


def _collapse(e: Expr) -> Expr:
    """Compose directly nested affine maps into a single (w, b) pair."""
    if isinstance(e, Affine):
        child = _collapse(e.child)
        if isinstance(child, Affine):
            return Affine(child.child, e.w * child.w, child.b * e.w + e.b)
        return Affine(child, e.w, e.b)
    if isinstance(e, Unary):
        return Unary(e.op, _collapse(e.child))
    if isinstance(e, Binary):
        return Binary(e.op, _collapse(e.left), _collapse(e.right))
    if isinstance(e, Logistic):
        return Logistic(_collapse(e.child))
    if isinstance(e, Scale):
        return Scale(_collapse(e.child), e.lo, e.hi, e.w, e.b)
    return e


# precedence levels for parenthesization
_ADD, _MUL, _POW, _ATOM = 10, 20, 30, 40


def _fmt_const(v: float, signif: int) -> str:
    tok = f"{float(v):.{signif}g}"
    if tok == "-0":
        tok = "0"
    return tok


def _safe_name(name: str) -> str:
    return "_".join(str(name).split())


def _tex_name(name: str) -> str:
    return "\\mathrm{" + _safe_name(name).replace("_", "\\_") + "}"


def _tex_const(v: float, signif: int) -> str:
    tok = _fmt_const(v, signif)
    if "e" in tok or "E" in tok:
        mant, _, exp = tok.lower().partition("e")
        return f"{mant} \\times 10^{{{int(exp)}}}"
    return tok


def render(expr: Expr, signif: int = 6, format: str = "text") -> str:
    """Render an expression with constants at ``signif`` significant digits."""
    if not isinstance(signif, int) or signif < 1:
        raise ValueError("signif must be an integer >= 1")
    if format not in ("text", "latex"):
        raise ValueError(f"unknown render format {format!r}")
    latex = format == "latex"
    e = _collapse(_normalize(expr))

    const = _tex_const if latex else _fmt_const
    mul = " \\cdot " if latex else "*"

    def wrap(text: str, prec: int, needed: int) -> str:
        if prec >= needed:
            return text
        if latex:
            return "\\left(" + text + "\\right)"
        return "(" + text + ")"

    def call(fname: str, *args: str) -> str:
        if latex:
            body = ", ".join(args)
            return fname + "\\left(" + body + "\\right)"
        return fname + "(" + ", ".join(args) + ")"

    def fmt(e: Expr, needed: int) -> str:
        if isinstance(e, Const):
            tok = const(e.value, signif)
            prec = _ATOM if not tok.startswith("-") else _ADD
            return wrap(tok, prec, needed)
        if isinstance(e, Var):
            return _tex_name(e.name) if latex else _safe_name(e.name)
        if isinstance(e, CatLookup):
            fname = "cat_" + _safe_name(e.feature)
            if latex:
                head = "\\operatorname{" + fname.replace("_", "\\_") + "}"
                body = head + "\\left(" + _tex_name(e.feature) + "\\right)"
            else:
                body = f"{fname}({_safe_name(e.feature)})"
            if e.bias == 0.0:
                return body
            tok = const(abs(e.bias), signif)
            sign = " - " if e.bias < 0 else " + "
            return wrap(body + sign + tok, _ADD, needed)
        if isinstance(e, Affine):
            if e.w == 1.0 and e.b == 0.0:
                return fmt(e.child, needed)
            if e.w == 0.0:
                return fmt(Const(e.b), needed)
            if e.w == 1.0:
                term = fmt(e.child, _ADD)
                prec = _ADD
            else:
                term = const(e.w, signif) + mul + fmt(e.child, _POW)
                prec = _MUL
            if e.b != 0.0:
                tok = const(abs(e.b), signif)
                term = term + (" - " if e.b < 0 else " + ") + tok
                prec = _ADD
            return wrap(term, prec, needed)
        if isinstance(e, Unary):
            if e.op == "squared":
                base = fmt(e.child, _ATOM)
                text = base + ("^{2}" if latex else "^2")
                return wrap(text, _POW, needed)
            if e.op == "inverse":
                if latex:
                    return "\\frac{1}{" + fmt(e.child, 0) + "}"
                return wrap("1/" + fmt(e.child, _ATOM), _MUL, needed)
            if e.op == "clip":
                lo, hi = const(-CLIP_BOUND, signif), const(CLIP_BOUND, signif)
                name = "\\operatorname{clip}" if latex else "clip"
                return call(name, fmt(e.child, 0), lo, hi)
            if e.op == "gaussian1":
                name = "\\operatorname{gaussian}" if latex else "gaussian"
                return call(name, fmt(e.child, 0))
            name = {"tanh": "\\tanh", "exp": "\\exp", "log": "\\log"}[e.op] if latex else e.op
            return call(name, fmt(e.child, 0))
        if isinstance(e, Binary):
            if e.op == "add":
                left = fmt(e.left, _ADD)
                right = fmt(e.right, _ADD)
                if right.startswith("-"):
                    text = left + " - " + right[1:]
                else:
                    text = left + " + " + right
                return wrap(text, _ADD, needed)
            if e.op == "multiply":
                text = fmt(e.left, _MUL) + mul + fmt(e.right, _POW)
                return wrap(text, _MUL, needed)
            name = "\\operatorname{gaussian}" if latex else "gaussian"
            return call(name, fmt(e.left, 0), fmt(e.right, 0))
        if isinstance(e, Logistic):
            name = "\\operatorname{logistic}" if latex else "logistic"
            return call(name, fmt(e.child, 0))
        if isinstance(e, Scale):  # unreachable after _normalize; defensive
            return fmt(_normalize(e), needed)
        raise TypeError(f"not an expression node: {e!r}")

    return fmt(e, 0)


def graph_equation(graph: Graph, signif: int = 6, format: str = "text") -> str:
    """Convenience wrapper: convert a fitted graph and render it."""
    return render(to_expression(graph), signif=signif, format=format)


def weight_tables(expr: Expr) -> dict[str, dict]:
    """Collect category weight tables keyed by feature name.

    The rendered equation shows category lookups as named functions; this
    returns the tables those names stand for, for printing alongside.
    """
    tables: dict[str, dict] = {}

    def walk(e: Expr):
        if isinstance(e, CatLookup):
            tables[e.feature] = {
                "bias": e.bias,
                "weights": {k: v for k, v in e.table},
            }
        elif isinstance(e, (Scale, Affine, Unary, Logistic)):
            walk(e.child)
        elif isinstance(e, Binary):
            walk(e.left)
            walk(e.right)

    walk(expr)
    return tables


# ---------------------------------------------------------------------------
# serialization (expression tree JSON for UI equation displays)


def expr_to_json(expr: Expr) -> dict:
    if isinstance(expr, Const):
        return {"type": "const", "value": expr.value}
    if isinstance(expr, Var):
        return {"type": "var", "name": expr.name}
    if isinstance(expr, CatLookup):
        return {
            "type": "cat",
            "feature": expr.feature,
            "weights": {k: v for k, v in expr.table},
            "bias": expr.bias,
        }
    if isinstance(expr, Scale):
        return {
            "type": "scale",
            "child": expr_to_json(expr.child),
            "lo": expr.lo,
            "hi": expr.hi,
            "w": expr.w,
            "b": expr.b,
        }
    if isinstance(expr, Affine):
        return {"type": "affine", "child": expr_to_json(expr.child), "w": expr.w, "b": expr.b}
    if isinstance(expr, Unary):
        return {"type": "unary", "op": expr.op, "child": expr_to_json(expr.child)}
    if isinstance(expr, Binary):
        return {
            "type": "binary",
            "op": expr.op,
            "left": expr_to_json(expr.left),
            "right": expr_to_json(expr.right),
        }
    if isinstance(expr, Logistic):
        return {"type": "logistic", "child": expr_to_json(expr.child)}
    raise TypeError(f"not an expression node: {expr!r}")


def expr_from_json(payload: Mapping[str, Any]) -> Expr:
    t = payload["type"]
    if t == "const":
        return Const(float(payload["value"]))
    if t == "var":
        return Var(payload["name"])
    if t == "cat":
        table = tuple(sorted((str(k), float(v)) for k, v in payload["weights"].items()))
        return CatLookup(payload["feature"], table, float(payload["bias"]))
    if t == "scale":
        return Scale(
            expr_from_json(payload["child"]),
            lo=float(payload["lo"]),
            hi=float(payload["hi"]),
            w=float(payload["w"]),
            b=float(payload["b"]),
        )
    if t == "affine":
        return Affine(expr_from_json(payload["child"]), float(payload["w"]), float(payload["b"]))
    if t == "unary":
        return Unary(payload["op"], expr_from_json(payload["child"]))
    if t == "binary":
        return Binary(payload["op"], expr_from_json(payload["left"]), expr_from_json(payload["right"]))
    if t == "logistic":
        return Logistic(expr_from_json(payload["child"]))
    raise ValueError(f"unknown expression node type {t!r}")
