"""The graph Laplacian as an operator on vertex fields and as a sparse matrix.

Conventions
-----------
* ``(Δv)(x) = Σ_{y~x} c(xy) (v(x) - v(y))``.
* The energy is the ordered-pair double sum, so every edge is counted twice:
  ``energy(v) = Σ_x Σ_{y~x} c(xy) |v(x) - v(y)|^2 = 2 <v, Δv>``.
* ``<u, v> = Σ_x conj(u(x)) v(x)``.

Window truncations come in two flavours, chosen explicitly:

``induced``
    Laplacian of the induced subgraph; the diagonal only counts edges
    inside the window.
``compressed``
    ``P Δ P`` with P the coordinate projection onto the window; the
    diagonal keeps the full weighted degree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import _kernels
from .graph import GraphSystem, Window

BOUNDARIES = ("induced", "compressed")

ATOL = 1e-12
RTOL = 1e-10


# ---------------------------------------------------------------------------
# vertex fields


@dataclass(frozen=True, eq=False)
class VertexField:
    """A (complex-capable) function on the vertices of a window."""

    window: Window
    values: np.ndarray
    support_hint: frozenset | None = None
    warnings: tuple = ()

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.dtype.kind not in "fc":
            vals = vals.astype(float)
        if vals.shape != (len(self.window),):
            raise ValueError(f"expected {len(self.window)} values, got shape {vals.shape}")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    # -- constructors -----------------------------------------------------

    @classmethod
    def zeros(cls, window: Window, dtype=float) -> "VertexField":
        return cls(window, np.zeros(len(window), dtype=dtype), frozenset())

    @classmethod
    def constant(cls, window: Window, value: complex = 1.0) -> "VertexField":
        return cls(window, np.full(len(window), value))

    @classmethod
    def delta(cls, window: Window, x) -> "VertexField":
        vals = np.zeros(len(window))
        vals[window.position(x)] = 1.0
        return cls(window, vals, frozenset([x]))

    @classmethod
    def from_mapping(cls, window: Window, mapping: Mapping) -> "VertexField":
        vals = np.zeros(len(window), dtype=complex if any(isinstance(v, complex) for v in mapping.values()) else float)
        for x, val in mapping.items():
            vals[window.position(x)] = val
        return cls(window, vals, frozenset(mapping))

    @classmethod
    def from_function(cls, window: Window, f: Callable) -> "VertexField":
        return cls(window, np.array([f(x) for x in window.vertices]))

    # -- access -----------------------------------------------------------

    def __getitem__(self, x):
        return self.values[self.window.position(x)].item()

    def as_dict(self) -> dict:
        return dict(zip(self.window.vertices, self.values.tolist()))

    def support(self, tol: float = 0.0) -> list:
        return [x for x, val in zip(self.window.vertices, self.values) if abs(val) > tol]

    @property
    def is_real(self) -> bool:
        return self.values.dtype.kind == "f" or not np.any(self.values.imag)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def inner(self, other: "VertexField") -> complex:
        """``<self, other>``, conjugate-linear in ``self``."""
        self._same_window(other)
        return complex(np.vdot(self.values, other.values))

    # -- algebra ----------------------------------------------------------

    def _same_window(self, other: "VertexField"):
        if other.window is not self.window and other.window.vertices != self.window.vertices:
            raise ValueError("fields live on different windows")

    def __add__(self, other):
        self._same_window(other)
        return VertexField(self.window, self.values + other.values)

    def __sub__(self, other):
        self._same_window(other)
        return VertexField(self.window, self.values - other.values)

    def __neg__(self):
        return VertexField(self.window, -self.values, self.support_hint)

    def __mul__(self, scalar):
        return VertexField(self.window, self.values * scalar, self.support_hint)

    __rmul__ = __mul__

    def shift(self, constant) -> "VertexField":
        return VertexField(self.window, self.values + constant)

    def conj(self) -> "VertexField":
        return VertexField(self.window, np.conj(self.values), self.support_hint)

    def restrict(self, window: Window) -> "VertexField":
        return VertexField(window, np.array([self[x] for x in window.vertices]))

    def extend(self, window: Window) -> "VertexField":
        """Zero-extension to a window containing this one."""
        vals = np.zeros(len(window), dtype=self.values.dtype)
        for x, val in zip(self.window.vertices, self.values):
            vals[window.position(x)] = val
        return VertexField(window, vals, self.support_hint)


# ---------------------------------------------------------------------------
# banded matrices


@dataclass(frozen=True, eq=False)
class BandedMatrix:
    """Sparse matrix over a window, stored in CSR form (rows/cols = window positions)."""

    window: Window
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    hermitian: bool = False
    boundary: str | None = None

    @classmethod
    def from_coo(cls, window: Window, rows, cols, vals, hermitian=False, boundary=None, check=True) -> "BandedMatrix":
        n = len(window)
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals)
        if vals.dtype.kind not in "fc":
            vals = vals.astype(float)
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if len(rows):
            key = rows * n + cols
            first = np.concatenate(([True], key[1:] != key[:-1]))
            starts = np.flatnonzero(first)
            vals = np.add.reduceat(vals, starts) if len(starts) else vals
            rows, cols = rows[starts], cols[starts]
            keep = vals != 0
            rows, cols, vals = rows[keep], cols[keep], vals[keep]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        indptr = np.cumsum(indptr)
        for a in (indptr, cols, vals):
            a.flags.writeable = False
        m = cls(window, indptr, cols, vals, hermitian, boundary)
        if hermitian and check:
            dense = m.to_dense() if n <= 2048 else None
            if dense is not None and not np.allclose(dense, dense.conj().T, atol=ATOL, rtol=RTOL):
                raise ValueError("matrix flagged hermitian is not")
        return m

    @classmethod
    def from_dense(cls, window: Window, a, hermitian=False, boundary=None) -> "BandedMatrix":
        a = np.asarray(a)
        r, c = np.nonzero(a)
        return cls.from_coo(window, r, c, a[r, c], hermitian, boundary)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.window), len(self.window)

    @property
    def nnz(self) -> int:
        return int(self.indptr[-1])

    @property
    def rows(self) -> np.ndarray:
        return np.repeat(np.arange(len(self.window)), np.diff(self.indptr))

    @property
    def bandwidth(self) -> int:
        if self.nnz == 0:
            return 0
        return int(np.max(np.abs(self.rows - self.indices)))

    @property
    def is_real(self) -> bool:
        return self.data.dtype.kind == "f" or not np.any(self.data.imag)

    def entry(self, x, y) -> complex | float:
        i, j = self.window.position(x), self.window.position(y)
        lo, hi = self.indptr[i], self.indptr[i + 1]
        k = np.searchsorted(self.indices[lo:hi], j)
        if k < hi - lo and self.indices[lo + k] == j:
            return self.data[lo + k].item()
        return 0.0

    def row_nonzeros(self, x) -> int:
        i = self.window.position(x)
        return int(self.indptr[i + 1] - self.indptr[i])

    def diagonal(self) -> np.ndarray:
        d = np.zeros(len(self.window), dtype=self.data.dtype)
        rows = self.rows
        on = rows == self.indices
        d[rows[on]] = self.data[on]
        return d

    def to_dense(self) -> np.ndarray:
        a = np.zeros(self.shape, dtype=self.data.dtype)
        a[self.rows, self.indices] = self.data
        return a

    def matvec(self, x: np.ndarray) -> np.ndarray:
        dtype = complex if (np.iscomplexobj(x) or self.data.dtype.kind == "c") else float
        x = np.ascontiguousarray(x, dtype=dtype)
        data = self.data.astype(dtype, copy=False)
        return _kernels.csr_matvec(self.indptr, self.indices, data, x)

    def apply(self, v: VertexField) -> VertexField:
        if v.window.vertices != self.window.vertices:
            raise ValueError("field and matrix live on different windows")
        return VertexField(self.window, self.matvec(v.values))

    def conj_transpose(self) -> "BandedMatrix":
        return BandedMatrix.from_coo(self.window, self.indices, self.rows, np.conj(self.data), self.hermitian, self.boundary)

    def hermitian_deviation(self) -> float:
        a = self.to_dense()
        return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0

    def __matmul__(self, other: "BandedMatrix") -> "BandedMatrix":
        return banded_product(self, other)

    def __sub__(self, other: "BandedMatrix") -> "BandedMatrix":
        return BandedMatrix.from_coo(
            self.window,
            np.concatenate([self.rows, other.rows]),
            np.concatenate([self.indices, other.indices]),
            np.concatenate([self.data, -other.data]),
        )

    def to_csv(self) -> str:
        """Coordinate dump: header line, then ``row,col,value`` sorted by (row, col)."""
        integer_ids = self.window.interval_bounds is not None
        head = (
            f"# window={self.window.describe()} boundary={self.boundary or 'none'} "
            f"bandwidth={self.bandwidth} ids={'vertex' if integer_ids else 'position'}"
        )
        out = [head, "row,col,value"]
        ids = self.window.vertices if integer_ids else range(len(self.window))
        for i, j, val in zip(self.rows.tolist(), self.indices.tolist(), self.data.tolist()):
            out.append(f"{ids[i]},{ids[j]},{format_float(val)}")
        return "\n".join(out) + "\n"


def banded_product(a: BandedMatrix, b: BandedMatrix) -> BandedMatrix:
    """Sparse product; the result's bandwidth is at most the sum of the factors'."""
    if a.window.vertices != b.window.vertices:
        raise ValueError("factors live on different windows")
    n = len(a.window)
    acc: dict = {}
    brow = [(b.indices[b.indptr[k]:b.indptr[k + 1]], b.data[b.indptr[k]:b.indptr[k + 1]]) for k in range(n)]
    for i in range(n):
        for p in range(a.indptr[i], a.indptr[i + 1]):
            k, aik = a.indices[p], a.data[p]
            cols, vals = brow[k]
            for j, bkj in zip(cols.tolist(), vals.tolist()):
                acc[(i, j)] = acc.get((i, j), 0.0) + aik * bkj
    if not acc:
        return BandedMatrix.from_coo(a.window, [], [], [])
    keys = list(acc)
    return BandedMatrix.from_coo(
        a.window, [k[0] for k in keys], [k[1] for k in keys], np.array([acc[k] for k in keys])
    )


def format_float(x) -> str:
    """17 significant digits, locale-free; complex values as ``re+imj``."""
    if isinstance(x, complex):
        if x.imag == 0:
            x = x.real
        else:
            return f"{format_float(x.real)}{'+' if x.imag >= 0 else '-'}{format_float(abs(x.imag))}j"
    x = float(x)
    if x == 0:
        return "0"
    return format(x, ".17g")


# ---------------------------------------------------------------------------
# the Laplacian


def weighted_degree(g: GraphSystem, x) -> float:
    """Sum of the conductances of the edges at ``x``."""
    return float(sum(c for _, c in g.neighbors(x)))


def assemble_matrix(g: GraphSystem, w: Window | None = None, boundary: str = "induced") -> BandedMatrix:
    """Real symmetric Laplacian matrix on window ``w``.

    Off-diagonal entries are ``-c(xy)`` for edges inside the window.  The
    diagonal is the weighted degree within the window (``induced``) or in the
    whole graph (``compressed``).
    """
    if boundary not in BOUNDARIES:
        raise ValueError(f"boundary must be one of {BOUNDARIES}")
    w = g.check_window(w if w is not None else g.default_window())
    n = len(w)
    i, j, c = g.window_edges(w)
    diag = np.zeros(n)
    np.add.at(diag, i, c)
    np.add.at(diag, j, c)
    if boundary == "compressed":
        for x, _, cc in g.crossing_edges(w):
            diag[w.position(x)] += cc
    rows = np.concatenate([i, j, np.arange(n)])
    cols = np.concatenate([j, i, np.arange(n)])
    vals = np.concatenate([-c, -c, diag])
    return BandedMatrix.from_coo(w, rows, cols, vals, hermitian=True, boundary=boundary, check=False)


def _boundary_vertices(g: GraphSystem, w: Window) -> set:
    return {x for x, _, _ in g.crossing_edges(w)}


def apply_laplacian(g: GraphSystem, v: VertexField, boundary: str = "induced") -> VertexField:
    """Δv on the window of ``v``.

    If ``v`` is non-zero at a vertex with neighbours outside the window, the
    value of Δv there depends on the chosen boundary semantics and the exterior
    values of Δv are not represented; a warning is attached to the result.
    """
    m = assemble_matrix(g, v.window, boundary)
    out = m.matvec(v.values)
    notes = []
    touching = [x for x in _boundary_vertices(g, v.window) if v[x] != 0]
    if touching:
        notes.append(
            f"boundary truncation: field is non-zero at {len(touching)} window vertices with "
            f"exterior neighbours ({boundary} semantics applied)"
        )
    return VertexField(v.window, out, warnings=tuple(notes))


def apply_adjoint(g: GraphSystem, v: VertexField, boundary: str = "induced") -> VertexField:
    """The adjoint acts by the same difference formula as Δ itself."""
    return apply_laplacian(g, v, boundary)


def apply_full(g: GraphSystem, v: VertexField) -> VertexField:
    """Full-graph Δv for finitely supported ``v`` (zero outside its window).

    The result lives on the window extended by its one-edge exterior, where
    it is exact.
    """
    ext = g.extend_window(v.window)
    u = v.extend(ext) if ext is not v.window else v
    return VertexField(ext, assemble_matrix(g, ext, "compressed").matvec(u.values))


def energy(g: GraphSystem, v: VertexField, report: bool = False):
    """Ordered-pair energy Σ_x Σ_{y~x} c(xy)|v(x) - v(y)|^2 over edges inside the window.

    With ``report=True`` returns ``(value, excluded)`` where ``excluded`` counts
    window-crossing edges at which ``v`` is non-zero (their terms are left out).
    """
    i, j, c = g.window_edges(v.window)
    d = v.values[i] - v.values[j]
    value = float(2.0 * np.sum(c * np.abs(d) ** 2))
    if not report:
        return value
    excluded = sum(1 for x, _, _ in g.crossing_edges(v.window) if v[x] != 0)
    return value, excluded


def energy_bilinear(g: GraphSystem, u: VertexField, v: VertexField) -> complex:
    """Sesquilinear energy Σ_x Σ_{y~x} c(xy) conj(u(x) - u(y)) (v(x) - v(y))."""
    u._same_window(v)
    i, j, c = g.window_edges(u.window)
    du = u.values[i] - u.values[j]
    dv = v.values[i] - v.values[j]
    return complex(2.0 * np.sum(c * np.conj(du) * dv))


def row_sum(g: GraphSystem, v: VertexField) -> complex:
    """Σ_x (Δv)(x) over the whole graph, for finitely supported ``v``."""
    return complex(np.sum(apply_full(g, v).values))


def row_sum_check(g: GraphSystem, w: Window | None = None) -> float:
    """Largest |Σ_x (Δδ_y)(x)| over the Dirac basis δ_y, y in ``w``.

    Each Δδ_y is evaluated on the full graph (the one-edge neighbourhood of y).
    """
    w = w if w is not None else g.default_window()
    worst = 0.0
    for y in w.vertices:
        worst = max(worst, abs(row_sum(g, VertexField.delta(Window((y,)), y))))
    return worst


def mean_value_defect(g: GraphSystem, v: VertexField, interior) -> float:
    """Largest |v(x) - Σ_y c(xy) v(y) / B(x)| over ``interior`` vertices."""
    worst = 0.0
    for x in interior:
        nb = g.neighbors(x)
        avg = sum(c * v[y] for y, c in nb) / sum(c for _, c in nb)
        worst = max(worst, abs(v[x] - avg))
    return worst
