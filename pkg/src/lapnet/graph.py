"""Graph systems (G, c): vertices, edges and positive conductances.

A :class:`GraphSystem` is either an explicit finite edge list or one of the
built-in generator families (integer line, half-line chains with a weight
rule, cyclic graphs, periodic lattices).  Infinite families are never stored;
computations run on a finite :class:`Window` of vertices.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Iterator, Sequence

import numpy as np

Vertex = Hashable

FORMAT_TAG = "lapnet-graph-v1"

KINDS = ("finite", "line", "half-line", "cyclic", "lattice")


class GraphFormatError(ValueError):
    """Raised for malformed lapnet-graph-v1 input; carries a 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


# ---------------------------------------------------------------------------
# weight rules for chains


@dataclass(frozen=True)
class WeightRule:
    """Conductance c(n, n+1) of a nearest-neighbour chain.

    ``linear``: n+1, ``square``: (n+1)^2, ``geometric``: lam^(n+1), ``constant``: 1.
    """

    name: str
    lam: float | None = None

    def __post_init__(self):
        if self.name not in ("linear", "square", "geometric", "constant"):
            raise ValueError(f"unknown weight rule {self.name!r}")
        if self.name == "geometric":
            if self.lam is None or not self.lam > 1.0:
                raise ValueError("geometric weight rule requires lam > 1")
        elif self.lam is not None:
            raise ValueError(f"weight rule {self.name!r} takes no parameter")

    def __call__(self, n: int) -> float:
        if self.name == "linear":
            return float(n + 1)
        if self.name == "square":
            return float(n + 1) ** 2
        if self.name == "geometric":
            return float(self.lam) ** (n + 1)
        return 1.0

    def log(self, n: int) -> float:
        """Natural log of c(n, n+1); finite even where the value overflows."""
        if self.name == "geometric":
            return (n + 1) * math.log(self.lam)
        return math.log(self(n))

    def spec(self) -> str:
        return f"geometric:{self.lam:g}" if self.name == "geometric" else self.name


# ---------------------------------------------------------------------------
# windows


@dataclass(frozen=True)
class Window:
    """An ordered, finite, non-empty set of vertices.

    Vertex order fixes the row/column order of every assembled matrix.
    """

    vertices: tuple

    def __post_init__(self):
        if len(self.vertices) == 0:
            raise ValueError("window must be non-empty")
        if len(self.index) != len(self.vertices):
            raise ValueError("window vertices must be distinct")

    @classmethod
    def interval(cls, lo: int, hi: int) -> "Window":
        if hi < lo:
            raise ValueError(f"empty interval window [{lo}, {hi}]")
        return cls(tuple(range(int(lo), int(hi) + 1)))

    @classmethod
    def box(cls, dim: int, n: int) -> "Window":
        return cls(tuple(itertools.product(range(n), repeat=dim)))

    @cached_property
    def index(self) -> dict:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def interval_bounds(self) -> tuple[int, int] | None:
        vs = self.vertices
        if all(isinstance(v, (int, np.integer)) for v in vs) and list(vs) == list(
            range(vs[0], vs[0] + len(vs))
        ):
            return int(vs[0]), int(vs[-1])
        return None

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self) -> Iterator:
        return iter(self.vertices)

    def __contains__(self, x) -> bool:
        return x in self.index

    def position(self, x) -> int:
        try:
            return self.index[x]
        except KeyError:
            raise KeyError(f"vertex {x!r} is not in the window") from None

    def describe(self) -> str:
        b = self.interval_bounds
        if b is not None:
            return f"{b[0]}:{b[1]}"
        return f"explicit[{len(self)}]"


# ---------------------------------------------------------------------------
# graph systems


@dataclass(frozen=True)
class GraphSystem:
    """A connected, locally finite graph with symmetric positive conductances.

    Build instances with :func:`build_cyclic`, :func:`build_chain`,
    :func:`build_lattice` or :func:`from_edges`; the raw constructor does not
    validate its arguments.
    """

    kind: str
    rule: WeightRule | None = None
    size: int | None = None
    dim: int | None = None
    edges: tuple = ()
    labels: tuple | None = None
    n_vertices: int = 0

    # -- identity ---------------------------------------------------------

    @property
    def is_finite(self) -> bool:
        return self.kind in ("finite", "cyclic", "lattice")

    def describe(self) -> str:
        if self.kind == "cyclic":
            return f"cyclic:{self.size}"
        if self.kind == "lattice":
            return f"lattice:{self.dim}x{self.size}"
        if self.kind == "half-line":
            return f"chain:{self.rule.spec()}"
        if self.kind == "line":
            return "line" if self.rule.name == "constant" else f"line:{self.rule.spec()}"
        return f"finite[{self.n_vertices}]"

    # -- vertices ---------------------------------------------------------

    def contains(self, x) -> bool:
        if self.kind == "lattice":
            return (
                isinstance(x, tuple)
                and len(x) == self.dim
                and all(isinstance(c, (int, np.integer)) and 0 <= c < self.size for c in x)
            )
        if not isinstance(x, (int, np.integer)) or isinstance(x, bool):
            return False
        if self.kind == "line":
            return True
        if self.kind == "half-line":
            return x >= 0
        if self.kind == "cyclic":
            return 0 <= x < self.size
        return 0 <= x < self.n_vertices

    def _check(self, x):
        if not self.contains(x):
            raise KeyError(f"vertex {x!r} is not in {self.describe()}")

    def check_window(self, w: Window) -> Window:
        for x in (w.vertices[0], w.vertices[-1]) if w.interval_bounds else w.vertices:
            self._check(x)
        return w

    def vertices(self) -> tuple:
        if self.kind == "cyclic":
            return tuple(range(self.size))
        if self.kind == "lattice":
            return tuple(itertools.product(range(self.size), repeat=self.dim))
        if self.kind == "finite":
            return tuple(range(self.n_vertices))
        raise ValueError(f"{self.describe()} is infinite; use a window")

    @cached_property
    def _full_vertices(self) -> tuple:
        return self.vertices()

    def full_window(self) -> Window:
        if self.kind == "cyclic" or self.kind == "finite":
            return Window.interval(0, len(self.vertices()) - 1)
        if self.kind == "lattice":
            return Window(self._full_vertices)
        raise ValueError(f"{self.describe()} is infinite; use a window")

    def default_window(self, radius: int = 10) -> Window:
        if self.is_finite:
            return self.full_window()
        if self.kind == "line":
            return Window.interval(-radius, radius)
        return Window.interval(0, 2 * radius)

    # -- adjacency --------------------------------------------------------

    @cached_property
    def _adjacency(self) -> dict:
        adj: dict = {}
        for u, v, c in self.edges:
            adj.setdefault(u, []).append((v, c))
            if u != v:
                adj.setdefault(v, []).append((u, c))
        return {x: tuple(sorted(nb)) for x, nb in adj.items()}

    def neighbors(self, x) -> tuple:
        """Neighbours of ``x`` as a sorted tuple of ``(y, c(x, y))`` pairs."""
        self._check(x)
        k = self.kind
        if k == "finite":
            return self._adjacency.get(x, ())
        if k == "cyclic":
            n = self.size
            return tuple(sorted({((x - 1) % n, 1.0), ((x + 1) % n, 1.0)}))
        if k == "lattice":
            out = set()
            for axis in range(self.dim):
                for step in (-1, 1):
                    y = list(x)
                    y[axis] = (y[axis] + step) % self.size
                    out.add((tuple(y), 1.0))
            return tuple(sorted(out))
        if k == "line":
            return ((x - 1, self.rule(x - 1)), (x + 1, self.rule(x)))
        if x == 0:
            return ((1, self.rule(0)),)
        return ((x - 1, self.rule(x - 1)), (x + 1, self.rule(x)))

    def conductance(self, x, y) -> float:
        for z, c in self.neighbors(x):
            if z == y:
                return c
        raise KeyError(f"{x!r} and {y!r} are not adjacent")

    def resistance(self, x, y) -> float:
        """Edge resistance, the reciprocal of the conductance."""
        return 1.0 / self.conductance(x, y)

    # -- window materialisation ---------------------------------------------

    def window_edges(self, w: Window) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Edges with both ends in ``w``: position arrays ``(i, j)`` with i < j, and conductances."""
        bounds = w.interval_bounds
        if self.kind in ("line", "half-line") and bounds is not None:
            lo, hi = bounds
            n = np.arange(lo, hi)
            c = np.array([self.rule(int(k)) for k in n], dtype=float)
            return np.arange(0, hi - lo), np.arange(1, hi - lo + 1), c
        if self.kind == "cyclic" and len(w) == self.size and bounds == (0, self.size - 1):
            n = self.size
            i = np.arange(n)
            j = (i + 1) % n
            lo_, hi_ = np.minimum(i, j), np.maximum(i, j)
            order = np.lexsort((hi_, lo_))
            return lo_[order], hi_[order], np.ones(n)
        if self.kind == "lattice" and len(w) == self.size**self.dim and w.vertices == self._full_vertices:
            shape = (self.size,) * self.dim
            flat = np.arange(self.size**self.dim).reshape(shape)
            ii, jj = [], []
            for axis in range(self.dim):
                ii.append(flat.ravel())
                jj.append(np.roll(flat, -1, axis=axis).ravel())
            i = np.concatenate(ii)
            j = np.concatenate(jj)
            lo_, hi_ = np.minimum(i, j), np.maximum(i, j)
            order = np.lexsort((hi_, lo_))
            return lo_[order], hi_[order], np.ones(len(i))
        ii, jj, cc = [], [], []
        for a, x in enumerate(w.vertices):
            for y, c in self.neighbors(x):
                b = w.index.get(y)
                if b is not None and a < b:
                    ii.append(a)
                    jj.append(b)
                    cc.append(c)
        return np.array(ii, dtype=np.int64), np.array(jj, dtype=np.int64), np.array(cc, dtype=float)

    def crossing_edges(self, w: Window) -> list[tuple]:
        """Edges with exactly one end in ``w`` as ``(inside, outside, c)`` triples."""
        bounds = w.interval_bounds
        if self.kind in ("line", "half-line") and bounds is not None:
            lo, hi = bounds
            out = []
            if self.kind == "line" or lo > 0:
                out.append((lo, lo - 1, self.rule(lo - 1)))
            out.append((hi, hi + 1, self.rule(hi)))
            return out
        if self.is_finite and len(w) == len(self.vertices()):
            return []
        out = []
        for x in w.vertices:
            for y, c in self.neighbors(x):
                if y not in w.index:
                    out.append((x, y, c))
        return out

    def extend_window(self, w: Window) -> Window:
        """``w`` followed by its one-edge exterior neighbourhood (sorted)."""
        extra = sorted({y for _, y, _ in self.crossing_edges(w)})
        if not extra:
            return w
        b = w.interval_bounds
        if b is not None and extra == [v for v in (b[0] - 1, b[1] + 1) if v in extra]:
            lo = b[0] - 1 if b[0] - 1 in extra else b[0]
            hi = b[1] + 1 if b[1] + 1 in extra else b[1]
            return Window.interval(lo, hi)
        return Window(tuple(w.vertices) + tuple(extra))

    def components(self, w: Window | None = None) -> list[list]:
        """Connected components of the subgraph induced on ``w`` (default: whole finite graph)."""
        if w is None:
            w = self.full_window()
        i, j, _ = self.window_edges(w)
        nbrs: list[list[int]] = [[] for _ in range(len(w))]
        for a, b in zip(i.tolist(), j.tolist()):
            nbrs[a].append(b)
            nbrs[b].append(a)
        seen = [False] * len(w)
        comps = []
        for s in range(len(w)):
            if seen[s]:
                continue
            seen[s] = True
            comp, queue = [], deque([s])
            while queue:
                a = queue.popleft()
                comp.append(w.vertices[a])
                for b in nbrs[a]:
                    if not seen[b]:
                        seen[b] = True
                        queue.append(b)
            comps.append(comp)
        return comps

    def is_connected(self, w: Window | None = None) -> bool:
        return len(self.components(w)) == 1


# ---------------------------------------------------------------------------
# builders


def build_cyclic(n: int) -> GraphSystem:
    """Cycle on {0, ..., n-1} with unit conductances, including the edge 0 ~ n-1."""
    if int(n) != n or n < 3:
        raise ValueError("cyclic graph needs N >= 3")
    return GraphSystem(kind="cyclic", size=int(n))


def build_chain(rule: str | WeightRule = "constant", index_space: str = "half-line", lam: float | None = None) -> GraphSystem:
    """Nearest-neighbour chain on N0 (``half-line``) or Z (``full-line``).

    On the full line only the ``constant`` and ``geometric`` rules give
    positive conductances everywhere; the others are rejected there.
    """
    if not isinstance(rule, WeightRule):
        rule = WeightRule(rule, lam)
    if index_space in ("half-line", "half"):
        return GraphSystem(kind="half-line", rule=rule)
    if index_space in ("full-line", "line", "full"):
        if rule.name in ("linear", "square"):
            raise ValueError(f"weight rule {rule.name!r} is not positive on the full line")
        return GraphSystem(kind="line", rule=rule)
    raise ValueError(f"unknown index space {index_space!r}")


def integer_line() -> GraphSystem:
    return build_chain("constant", "full-line")


def build_lattice(dim: int, n: int, boundary: str = "periodic") -> GraphSystem:
    """Periodic box (Z_n)^dim with unit nearest-neighbour conductances."""
    if boundary != "periodic":
        raise ValueError("only periodic lattice boundaries are supported")
    if int(dim) != dim or dim < 1:
        raise ValueError("lattice dimension must be >= 1")
    if int(n) != n or n < 3:
        raise ValueError("lattice extent must be >= 3")
    return GraphSystem(kind="lattice", size=int(n), dim=int(dim))


def from_edges(
    edges: Iterable[tuple[int, int, float]],
    n_vertices: int | None = None,
    labels: Sequence[str] | None = None,
    strict: bool = True,
) -> GraphSystem:
    """Finite graph from ``(u, v, c)`` triples on dense 0-based vertex indices.

    With ``strict`` (the default) self-loops, non-positive conductances and
    repeated unordered pairs raise ``ValueError``; otherwise they are kept so
    that :func:`validate` can report them.
    """
    edges = [(int(u), int(v), float(c)) for u, v, c in edges]
    seen = set()
    for u, v, c in edges:
        if strict:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not c > 0:
                raise ValueError(f"non-positive conductance {c} on edge ({u}, {v})")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
        if u < 0 or v < 0:
            raise ValueError("vertex indices must be non-negative")
    top = max((max(u, v) for u, v, _ in edges), default=-1) + 1
    if labels is not None:
        top = max(top, len(labels))
    if n_vertices is None:
        n_vertices = top
    if n_vertices < top:
        raise ValueError("n_vertices smaller than the largest edge endpoint")
    if n_vertices == 0:
        raise ValueError("graph has no vertices")
    ordered = sorted(((min(u, v), max(u, v), c) for u, v, c in edges), key=lambda e: (e[0], e[1]))
    return GraphSystem(
        kind="finite",
        edges=tuple(ordered),
        labels=tuple(labels) if labels is not None else None,
        n_vertices=int(n_vertices),
    )


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    graph: str
    checked_vertices: int
    components: int
    violations: tuple = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        return {
            "graph": self.graph,
            "checked_vertices": self.checked_vertices,
            "components": self.components,
            "ok": self.ok,
            "violations": [{"kind": v.kind, "detail": v.detail} for v in self.violations],
        }


def validate(g: GraphSystem, window: Window | None = None) -> ValidationReport:
    """Check the graph axioms on the materialised vertex set.

    Reports self-loops, asymmetric conductance records, non-positive
    conductances, repeated edges and (for finite graphs) disconnected
    components.  Violations are collected, never raised.
    """
    w = window if window is not None else g.default_window()
    found: list[Violation] = []
    if g.kind == "finite":
        seen: dict = {}
        for u, v, c in g.edges:
            if u == v:
                found.append(Violation("self-loop", f"edge ({u}, {v})"))
            if not c > 0:
                found.append(Violation("non-positive-conductance", f"c({u}, {v}) = {c:g}"))
            key = (min(u, v), max(u, v))
            if key in seen:
                found.append(Violation("duplicate-edge", f"edge {key} listed more than once"))
            seen[key] = c
    for x in w.vertices:
        nbrs = g.neighbors(x)
        for y, c in nbrs:
            if y == x and g.kind != "finite":
                found.append(Violation("self-loop", f"vertex {x!r}"))
            if not c > 0 and g.kind != "finite":
                found.append(Violation("non-positive-conductance", f"c({x!r}, {y!r}) = {c:g}"))
            if y != x:
                back = [cc for z, cc in g.neighbors(y) if z == x]
                if not back:
                    found.append(Violation("asymmetric", f"{y!r} does not list {x!r} as a neighbour"))
                elif any(b != c for b in back):
                    found.append(Violation("asymmetric", f"c({x!r}, {y!r}) != c({y!r}, {x!r})"))
    n_comp = len(g.components(w)) if g.is_finite else 1
    if g.is_finite and n_comp > 1:
        found.append(Violation("disconnected", f"{n_comp} connected components"))
    # asymmetric records are found from both ends; keep the first of each
    unique = list(dict.fromkeys(found))
    return ValidationReport(g.describe(), len(w), n_comp, tuple(unique))


# ---------------------------------------------------------------------------
# lapnet-graph-v1 files


def _line_of_edge(text: str, k: int) -> int | None:
    """1-based line on which the k-th edge object starts (best effort)."""
    start = text.find('"edges"')
    if start < 0:
        return None
    depth, count = 0, -1
    for pos in range(text.index("[", start), len(text)):
        ch = text[pos]
        if ch == "{":
            if depth == 0:
                count += 1
                if count == k:
                    return text.count("\n", 0, pos) + 1
            depth += 1
        elif ch == "}":
            depth -= 1
        elif ch == "]" and depth == 0:
            break
    return None


def parse_graph(text: str, strict: bool = True) -> GraphSystem:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(exc.msg, exc.lineno) from None
    if not isinstance(doc, dict):
        raise GraphFormatError("top-level value must be an object", 1)
    if doc.get("format") != FORMAT_TAG:
        raise GraphFormatError(f'"format" must be "{FORMAT_TAG}"', 1)
    unknown = set(doc) - {"format", "labels", "edges"}
    if unknown:
        raise GraphFormatError(f"unknown keys {sorted(unknown)}", 1)
    labels = doc.get("labels")
    if labels is not None and not (isinstance(labels, list) and all(isinstance(s, str) for s in labels)):
        raise GraphFormatError('"labels" must be an array of strings', 1)
    raw = doc.get("edges")
    if not isinstance(raw, list):
        raise GraphFormatError('"edges" must be an array', 1)
    edges = []
    seen = set()
    for k, e in enumerate(raw):
        line = _line_of_edge(text, k)
        if not isinstance(e, dict) or set(e) != {"u", "v", "c"}:
            raise GraphFormatError('each edge must be {"u": int, "v": int, "c": number}', line)
        u, v, c = e["u"], e["v"], e["c"]
        if not (isinstance(u, int) and isinstance(v, int)) or isinstance(u, bool) or isinstance(v, bool):
            raise GraphFormatError("edge endpoints must be integers", line)
        if not isinstance(c, (int, float)) or isinstance(c, bool):
            raise GraphFormatError("conductance must be a number", line)
        if u < 0 or v < 0:
            raise GraphFormatError("vertex indices must be non-negative", line)
        if strict:
            if u == v:
                raise GraphFormatError(f"self-loop at vertex {u}", line)
            if not c > 0:
                raise GraphFormatError(f"non-positive conductance {c}", line)
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphFormatError(f"duplicate edge {key}", line)
            seen.add(key)
        edges.append((u, v, float(c)))
    if not edges and not labels:
        raise GraphFormatError("graph has no vertices", 1)
    return from_edges(edges, labels=labels, strict=strict)


def load_graph(path, strict: bool = True) -> GraphSystem:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read(), strict=strict)


def dump_graph(g: GraphSystem) -> str:
    """Serialise a finite-explicit graph; edges sorted by (min(u,v), max(u,v))."""
    if g.kind != "finite":
        raise ValueError("only finite-explicit graphs are written to lapnet-graph-v1")
    lines = ["{", f'  "format": "{FORMAT_TAG}",']
    if g.labels is not None:
        lines.append(f'  "labels": {json.dumps(list(g.labels))},')
    body = ",\n".join(f'    {{"u": {u}, "v": {v}, "c": {c!r}}}' for u, v, c in g.edges)
    lines.append('  "edges": [' + ("\n" + body + "\n  " if body else "") + "]")
    lines.append("}")
    return "\n".join(lines) + "\n"


def save_graph(g: GraphSystem, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_graph(g))
