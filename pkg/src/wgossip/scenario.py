"""Scenario files: JSON with 1-based nodes and exact "p/q" rationals.

Example::

    {"n": 3, "m": 1,
     "edges": [{"u": 1, "v": 2, "pre_local": [["0", "1"], ["1", "0"]]}, ...],
     "weight": ["1/2", "1/3", "1/6"],
     "mode": "exact"}

Numbers may be JSON numbers, integers or "p/q" strings; decimals are read
exactly (0.1 is 1/10).
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .graph import GossipGraph
from .stomat import NotStochasticError, StochasticMatrix, fmt_fraction

OPTION_KEYS = ("mode", "tol", "cap", "reps", "seed", "walks")


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    graph: GossipGraph
    weight: tuple[Fraction, ...]
    options: dict = field(default_factory=dict)


def _rational(x, where: str) -> Fraction:
    if isinstance(x, bool) or not isinstance(x, (int, str, Fraction)):
        raise ScenarioError(f"{where}: expected a number or 'p/q' string, got {json.dumps(x)}")
    try:
        return Fraction(x)
    except (ValueError, ZeroDivisionError):
        raise ScenarioError(f"{where}: cannot parse {x!r} as a rational") from None


def _int(doc: dict, key: str) -> int:
    if key not in doc:
        raise ScenarioError(f"missing field '{key}'")
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ScenarioError(f"field '{key}': expected a positive integer, got {json.dumps(v)}")
    return v


def parse_scenario(doc) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object")
    n, m = _int(doc, "n"), _int(doc, "m")
    edges_doc = doc.get("edges")
    if not isinstance(edges_doc, list):
        raise ScenarioError("missing field 'edges' (list)")
    edges, pre = [], []
    for k, e in enumerate(edges_doc):
        where = f"edges[{k}]"
        if not isinstance(e, dict):
            raise ScenarioError(f"{where}: expected an object")
        u, v = e.get("u"), e.get("v")
        for name, x in (("u", u), ("v", v)):
            if isinstance(x, bool) or not isinstance(x, int) or not 1 <= x <= n:
                raise ScenarioError(f"{where}.{name}: expected a node in 1..{n}, got {json.dumps(x)}")
        label = f"edge ({u},{v})"
        rows = e.get("pre_local")
        size = 2 * m
        if not isinstance(rows, list) or len(rows) != size or any(not isinstance(r, list) or len(r) != size for r in rows):
            raise ScenarioError(f"{label}: pre_local must be a {size}x{size} matrix")
        mat = [[_rational(x, f"{label} row {i + 1} col {j + 1}") for j, x in enumerate(r)] for i, r in enumerate(rows)]
        try:
            pre.append(StochasticMatrix.from_rows(mat))
        except NotStochasticError as exc:
            raise ScenarioError(f"{label} {exc}") from None
        edges.append((u - 1, v - 1))
    try:
        G = GossipGraph(n, m, tuple(edges), tuple(pre))
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    w_doc = doc.get("weight")
    if not isinstance(w_doc, list) or len(w_doc) != n * m:
        raise ScenarioError(f"field 'weight': expected a list of {n * m} entries")
    w = tuple(_rational(x, f"weight[{i + 1}]") for i, x in enumerate(w_doc))
    if any(x <= 0 for x in w):
        raise ScenarioError("field 'weight': entries must be positive")
    if sum(w) != 1:
        raise ScenarioError(f"field 'weight': entries sum to {fmt_fraction(sum(w))}, expected 1")
    options = {k: doc[k] for k in OPTION_KEYS if k in doc}
    if options.get("mode", "exact") not in ("exact", "float"):
        raise ScenarioError("field 'mode': expected 'exact' or 'float'")
    return Scenario(G, w, options)


def loads_scenario(text: str) -> Scenario:
    try:
        doc = json.loads(text, parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_scenario(doc)


def load_scenario(path: str | os.PathLike) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}") from None
    return loads_scenario(text)


def scenario_to_json(sc: Scenario) -> dict:
    G = sc.graph
    doc = {
        "n": G.n,
        "m": G.m,
        "edges": [
            {"u": u + 1, "v": v + 1, "pre_local": [[fmt_fraction(x) for x in r] for r in p.rows]}
            for (u, v), p in zip(G.edges, G.pre_local)
        ],
        "weight": [fmt_fraction(x) for x in sc.weight],
    }
    doc.update(sc.options)
    return doc


def dumps_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_to_json(sc), indent=2) + "\n"


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
