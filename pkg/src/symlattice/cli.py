"""Command-line workflow driver.

Every command loads the session file, applies one step, and saves the file
back, so a scripted sequence of invocations is fully resumable and, with
fixed seeds, reproducible run to run.  Errors print one JSON object to
stderr and exit nonzero, so scripts can branch on them.

Environment:
  SYMLATTICE_SESSION  default session file path (else ./session.json)
  SYMLATTICE_CONFIG   default lattice config JSON path for new-session
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .data import SplitSpec
from .lattice import Contains, Excludes, Functions, LatticeConfig
from .session import Session
from .svg import plot_svg

__all__ = ["main"]

ENV_SESSION = "SYMLATTICE_SESSION"
ENV_CONFIG = "SYMLATTICE_CONFIG"


def _default_session_path() -> str:
    return os.environ.get(ENV_SESSION, "session.json")


def _emit(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=False))


def _load(path: str) -> Session:
    if not Path(path).exists():
        raise FileNotFoundError(
            f"no session file at {path!r}; run 'symlattice new-session' first"
        )
    return Session.load(path)


def _split_arg(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("--split needs three comma-separated fractions")
    return tuple(parts)  # type: ignore[return-value]


def _stype_arg(text: str) -> tuple[str, str]:
    name, sep, stype = text.partition("=")
    if not sep or not name or not stype:
        raise argparse.ArgumentTypeError("--stype takes column=numerical|categorical")
    return name, stype


def _csv_list(text: str) -> list[str]:
    items = [p.strip() for p in text.split(",") if p.strip()]
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated list")
    return items


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="symlattice",
        description="Interactive symbolic regression: questions, pools, reinforcement.",
    )
    ap.add_argument(
        "--session",
        default=_default_session_path(),
        help=f"session file (default ${ENV_SESSION} or ./session.json)",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("new-session", help="create a fresh session file")
    p.add_argument("--width", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--islands", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument(
        "--config",
        default=os.environ.get(ENV_CONFIG),
        help=f"lattice config JSON file (default ${ENV_CONFIG})",
    )

    p = sub.add_parser("load-data", help="load a CSV and split it")
    p.add_argument("csv", help="path to the CSV file")
    p.add_argument("--label", default="data")
    p.add_argument("--split", type=_split_arg, default=(0.6, 0.2, 0.2))
    p.add_argument("--stratify", default=None, help="stratify column")
    p.add_argument("--seed", type=int, default=0, help="split shuffle seed")
    p.add_argument(
        "--stype",
        type=_stype_arg,
        action="append",
        default=[],
        help="semantic type override, column=numerical|categorical (repeatable)",
    )

    p = sub.add_parser("ask", help="pose a question (sample a pool of graphs)")
    p.add_argument("--inputs", type=_csv_list, required=True, help="comma-separated columns")
    p.add_argument("--output", required=True)
    p.add_argument("--task", choices=("classifier", "regressor"), required=True)
    p.add_argument("--max-depth", type=int, default=2)
    p.add_argument("--contains", action="append", default=[], help="feature that must appear")
    p.add_argument("--excludes", action="append", default=[], help="feature that must not appear")
    p.add_argument("--functions", type=_csv_list, default=None, help="allowed interaction kinds")
    p.add_argument("--capacity", type=int, default=200)
    p.add_argument("--dataset", default=None, help="dataset label (default: latest)")
    p.add_argument("--criterion", default=None, help="sort criterion (aic, bic, ...)")

    p = sub.add_parser("fit", help="run fit rounds on a pool")
    p.add_argument("--pool", default=None, help="pool id (default: latest)")
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--auto-update", action="store_true", help="reinforce with best() each round")

    p = sub.add_parser("show", help="list the sorted pool members")
    p.add_argument("--pool", default=None)
    p.add_argument("--head", type=int, default=5)

    p = sub.add_parser("equation", help="render one graph as an equation")
    p.add_argument("graph", type=int, help="graph (member) id")
    p.add_argument("--pool", default=None)
    p.add_argument("--signif", type=int, default=6)
    p.add_argument("--format", choices=("text", "latex"), default="text")

    p = sub.add_parser("plot", help="compute plot data (JSON) or render it (SVG)")
    p.add_argument("kind", choices=("roc", "probability_scores", "partial2d", "segmented_loss"))
    p.add_argument("graph", type=int)
    p.add_argument("--pool", default=None)
    p.add_argument("--dataset", default="train", choices=("train", "valid", "holdout"))
    p.add_argument("--out", default=None, help="output file (.json or .svg); default stdout JSON")
    p.add_argument("--fx", default=None)
    p.add_argument("--fy", default=None)
    p.add_argument("--by", default=None)
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("--resolution", type=int, default=None)

    p = sub.add_parser("update", help="reinforce the lattice with chosen graphs")
    p.add_argument("graphs", type=int, nargs="+", help="graph (member) ids")
    p.add_argument("--pool", default=None)

    p = sub.add_parser("unlock-holdout", help="irreversibly unlock holdout evaluation")
    p.add_argument("--confirm", action="store_true")

    p = sub.add_parser("save", help="write the session to another file")
    p.add_argument("--to", default=None, help="target path (default: the session file itself)")

    p = sub.add_parser("resume", help="adopt a saved session file")
    p.add_argument("file", help="session file to resume from")

    p = sub.add_parser("serve", help="run the HTTP API (and optionally the UI bundle)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--static", default=None, help="directory with the UI bundle")
    p.add_argument("--load", action="append", default=[], help="session file(s) to preload")

    return ap


def _cmd_new_session(args) -> None:
    fields = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            fields.update(json.load(fh))
    for key in ("width", "depth", "islands", "alpha", "seed"):
        val = getattr(args, key)
        if val is not None:
            fields[key] = val
    known = {k: fields[k] for k in ("width", "depth", "islands", "alpha", "seed") if k in fields}
    session = Session(LatticeConfig(**known) if known else None)
    session.save(args.session)
    _emit(
        {
            "session_id": session.id,
            "session_file": args.session,
            "lattice": session.lattice.config.to_json(),
        }
    )


def _cmd_load_data(args) -> None:
    session = _load(args.session)
    text = Path(args.csv).read_text(encoding="utf-8")
    spec = SplitSpec(fractions=args.split, stratify_by=args.stratify, seed=args.seed)
    summary = session.load_data(
        text, spec, label=args.label, stype_overrides=dict(args.stype) or None
    )
    session.save(args.session)
    _emit(summary)


def _cmd_ask(args) -> None:
    session = _load(args.session)
    filters = []
    for f in args.contains:
        filters.append(Contains(f))
    for f in args.excludes:
        filters.append(Excludes(f))
    if args.functions:
        filters.append(Functions(args.functions))
    kwargs = {}
    if args.criterion:
        kwargs["sort_criterion"] = args.criterion
    pid = session.ask(
        inputs=args.inputs,
        output=args.output,
        task=args.task,
        max_depth=args.max_depth,
        filters=filters,
        capacity=args.capacity,
        dataset=args.dataset,
        **kwargs,
    )
    session.save(args.session)
    pool = session.pool(pid)
    _emit(
        {
            "pool_id": pid,
            "capacity": pool.capacity,
            "sort_criterion": pool.sort_criterion,
            "spec": pool.spec.to_json(),
        }
    )


def _pool_id(session: Session, arg) -> str:
    return arg if arg is not None else session.default_pool_id()


def _cmd_fit(args) -> None:
    session = _load(args.session)
    pid = _pool_id(session, args.pool)
    rows = session.fit(pid, rounds=args.rounds, workers=args.workers, auto_update=args.auto_update)
    session.save(args.session)
    _emit({"pool_id": pid, "rounds": rows})


def _cmd_show(args) -> None:
    session = _load(args.session)
    pid = _pool_id(session, args.pool)
    rows = session.graphs(pid, n=args.head, with_structure=False)
    _emit({"pool_id": pid, "graphs": rows})


def _cmd_equation(args) -> None:
    session = _load(args.session)
    pid = _pool_id(session, args.pool)
    result = session.equation(pid, args.graph, signif=args.signif, format=args.format)
    print(result["equation"])
    if result["weight_tables"]:
        print(json.dumps({"weight_tables": result["weight_tables"]}, indent=2))


def _cmd_plot(args) -> None:
    session = _load(args.session)
    pid = _pool_id(session, args.pool)
    params = {}
    for key in ("fx", "fy", "by", "bins", "resolution"):
        val = getattr(args, key)
        if val is not None:
            params[key] = val
    payload = session.plot(pid, args.graph, args.kind, dataset=args.dataset, **params)
    if args.out is None:
        _emit(payload)
        return
    out = Path(args.out)
    if out.suffix == ".svg":
        out.write_text(plot_svg(payload), encoding="utf-8")
    elif out.suffix == ".json":
        out.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    else:
        raise ValueError("--out must end in .json or .svg")
    _emit({"written": str(out), "kind": args.kind})


def _cmd_update(args) -> None:
    session = _load(args.session)
    n = session.update(args.graphs, pool_id=args.pool)
    session.save(args.session)
    _emit({"updated": n})


def _cmd_unlock(args) -> None:
    if not args.confirm:
        raise ValueError(
            "unlocking is irreversible and spends the holdout; pass --confirm to proceed"
        )
    session = _load(args.session)
    state = session.unlock_holdout()
    session.save(args.session)
    _emit(state)


def _cmd_save(args) -> None:
    session = _load(args.session)
    target = args.to or args.session
    session.save(target)
    _emit({"saved": target, "session_id": session.id})


def _cmd_resume(args) -> None:
    session = Session.load(args.file)
    session.save(args.session)
    _emit({"session_id": session.id, "session_file": args.session, **session.overview()})


def _cmd_serve(args) -> None:
    import uvicorn

    from .service import SessionStore, create_app

    store = SessionStore()
    for path in args.load:
        store.add(Session.load(path))
    app = create_app(store, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")


_COMMANDS = {
    "new-session": _cmd_new_session,
    "load-data": _cmd_load_data,
    "ask": _cmd_ask,
    "fit": _cmd_fit,
    "show": _cmd_show,
    "equation": _cmd_equation,
    "plot": _cmd_plot,
    "update": _cmd_update,
    "unlock-holdout": _cmd_unlock,
    "save": _cmd_save,
    "resume": _cmd_resume,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except BrokenPipeError:
        return 1
    except Exception as exc:  # surfaced as machine-readable JSON, per contract
        print(
            json.dumps({"error": str(exc), "type": type(exc).__name__}),
            file=sys.stderr,
        )
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
