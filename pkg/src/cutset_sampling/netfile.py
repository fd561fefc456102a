"""Plain-text network, evidence and cutset files, and marginal CSVs.

Network format::

    # comment
    var X1 2
    var X2 2
    cpt X1 |
    0.4 0.6
    cpt X2 | X1
    0.8 0.2
    0.3 0.7

``var`` lines declare variables in index order. Each ``cpt <child> | <parents...>``
header is followed by one row per parent configuration, last parent varying
fastest, with the child's values in index order.
"""

from __future__ import annotations

import csv
import io
import os
from collections.abc import Iterable, Mapping

import numpy as np

from .errors import ModelError
from .model import BayesNet, Evidence, check_evidence

PathLike = str | os.PathLike


def _fmt(x: float) -> str:
    return repr(float(x))


def dumps_net(net: BayesNet) -> str:
    out = io.StringIO()
    for name, card in zip(net.names, net.cards):
        out.write(f"var {name} {card}\n")
    for i in range(net.n):
        parents = " ".join(net.names[p] for p in net.parents[i])
        out.write(f"cpt {net.names[i]} | {parents}".rstrip() + "\n")
        for row in net.rows(i):
            out.write(" ".join(_fmt(x) for x in row) + "\n")
    return out.getvalue()


def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def loads_net(text: str) -> BayesNet:
    names: list[str] = []
    cards: list[int] = []
    index: dict[str, int] = {}
    parents: dict[int, tuple[int, ...]] = {}
    values: dict[int, list[float]] = {}
    current: int | None = None
    for lineno, line in _content_lines(text):
        tok = line.split()
        if tok[0] == "var":
            if len(tok) != 3:
                raise ModelError(f"line {lineno}: expected 'var <name> <cardinality>'")
            name = tok[1]
            if name in index:
                raise ModelError(f"line {lineno}: duplicate variable {name!r}")
            try:
                card = int(tok[2])
            except ValueError:
                raise ModelError(f"line {lineno}: bad cardinality {tok[2]!r}") from None
            if card < 1:
                raise ModelError(f"line {lineno}: cardinality must be positive")
            index[name] = len(names)
            names.append(name)
            cards.append(card)
            current = None
        elif tok[0] == "cpt":
            head, _, tail = line[3:].partition("|")
            if not _:
                raise ModelError(f"line {lineno}: cpt header needs '|'")
            child_tok = head.split()
            if len(child_tok) != 1 or child_tok[0] not in index:
                raise ModelError(f"line {lineno}: unknown cpt child {head.strip()!r}")
            child = index[child_tok[0]]
            if child in parents:
                raise ModelError(f"line {lineno}: second cpt for {child_tok[0]!r}")
            ps = []
            for p in tail.split():
                if p not in index:
                    raise ModelError(f"line {lineno}: unknown parent {p!r}")
                ps.append(index[p])
            parents[child] = tuple(ps)
            values[child] = []
            current = child
        else:
            if current is None:
                raise ModelError(f"line {lineno}: probability row outside a cpt block")
            try:
                values[current].extend(float(t) for t in tok)
            except ValueError:
                raise ModelError(f"line {lineno}: non-numeric probability") from None
    missing = [names[i] for i in range(len(names)) if i not in parents]
    if missing:
        raise ModelError(f"no cpt for {', '.join(missing)}")
    pars = [parents[i] for i in range(len(names))]
    for i in range(len(names)):
        expected = int(np.prod([cards[p] for p in pars[i]], dtype=np.int64)) * cards[i]
        if len(values[i]) != expected:
            raise ModelError(f"cpt {names[i]!r} has {len(values[i])} entries, expected {expected}")
    return BayesNet.from_rows(names, cards, pars, [values[i] for i in range(len(names))])


def read_net(path: PathLike) -> BayesNet:
    with open(path, encoding="utf-8") as fh:
        return loads_net(fh.read())


def write_net(net: BayesNet, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_net(net))


def dumps_evidence(net: BayesNet, e: Mapping[int, int]) -> str:
    return "".join(f"{net.names[v]} {x}\n" for v, x in sorted(e.items()))


def loads_evidence(net: BayesNet, text: str) -> Evidence:
    e = {}
    for lineno, line in _content_lines(text):
        tok = line.split()
        if len(tok) != 2:
            raise ModelError(f"evidence line {lineno}: expected '<name> <value-index>'")
        v = net.var(tok[0])
        if v in e:
            raise ModelError(f"evidence line {lineno}: {tok[0]!r} observed twice")
        try:
            e[v] = int(tok[1])
        except ValueError:
            raise ModelError(f"evidence line {lineno}: bad value {tok[1]!r}") from None
    return check_evidence(net, e)


def read_evidence(net: BayesNet, path: PathLike) -> Evidence:
    with open(path, encoding="utf-8") as fh:
        return loads_evidence(net, fh.read())


def dumps_cutset(net: BayesNet, members: Iterable[int]) -> str:
    return "".join(f"{net.names[v]}\n" for v in members)


def loads_cutset(net: BayesNet, text: str) -> list[int]:
    members = []
    for _, line in _content_lines(text):
        for tok in line.split():
            v = net.var(tok)
            if v in members:
                raise ModelError(f"cutset lists {tok!r} twice")
            members.append(v)
    return members


def read_cutset(net: BayesNet, path: PathLike) -> list[int]:
    with open(path, encoding="utf-8") as fh:
        return loads_cutset(net, fh.read())


def dumps_marginals(
    net: BayesNet,
    estimates: Mapping[int, np.ndarray],
    exact: Mapping[int, np.ndarray] | None = None,
) -> str:
    """CSV with header ``variable,value,estimate[,exact,abs_error]`` and ``%.9f`` numbers."""
    out = io.StringIO()
    header = "variable,value,estimate"
    if exact is not None:
        header += ",exact,abs_error"
    out.write(header + "\n")
    for v in sorted(estimates):
        for x, p in enumerate(estimates[v]):
            row = f"{net.names[v]},{x},{p:.9f}"
            if exact is not None:
                q = float(exact[v][x])
                row += f",{q:.9f},{abs(p - q):.9f}"
            out.write(row + "\n")
    return out.getvalue()


def loads_marginal_csv(text: str) -> dict[tuple[str, int], float]:
    """Parse a marginals CSV into ``{(variable, value): estimate}``; extra columns ignored.

    Columns are located by header name, so their order does not matter.
    """
    reader = csv.DictReader(io.StringIO(text))
    fields = reader.fieldnames or []
    for col in ("variable", "value", "estimate"):
        if col not in fields:
            raise ModelError(f"CSV lacks a {col!r} column")
    out = {}
    for row in reader:
        key = (row["variable"], int(row["value"]))
        if key in out:
            raise ModelError(f"duplicate CSV row for {key}")
        out[key] = float(row["estimate"])
    return out
