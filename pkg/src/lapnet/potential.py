"""Dipole potentials Δv = δ_α - δ_β, currents, Kirchhoff checks and resistance metrics.

Finite systems are singular (constants span the kernel on a connected
window), so every solution is pinned by ``v(grounding) = 0``.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .graph import GraphSystem, Window, build_cyclic, integer_line
from .operator import VertexField, assemble_matrix, energy

SOLVERS = ("cg", "dft", "direct", "closed-form")

CG_RTOL = 1e-10
CG_ITER_FACTOR = 20


class NoSolutionError(ValueError):
    """The dipole equation has no solution on the given window (disconnected)."""


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(f"{message} (relative residual {residual:.3e})")


class ConsistencyError(RuntimeError):
    """Two routes to the same quantity disagree beyond tolerance."""


@dataclass(frozen=True, eq=False)
class PotentialSolution:
    field: VertexField
    alpha: object
    beta: object
    energy: float
    residual_norm: float
    solver: str
    grounding: object
    iterations: int = 0

    @property
    def voltage_drop(self) -> float:
        return float(np.real(self.field[self.alpha] - self.field[self.beta]))

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "energy": self.energy,
            "residual": self.residual_norm,
            "solver": self.solver,
            "values": [[x, float(np.real(val))] for x, val in zip(self.field.window.vertices, self.field.values)],
        }


# ---------------------------------------------------------------------------
# solvers


def _dipole_rhs(w: Window, alpha, beta) -> np.ndarray:
    b = np.zeros(len(w))
    b[w.position(alpha)] += 1.0
    b[w.position(beta)] -= 1.0
    return b


def _solve_cg(g: GraphSystem, w: Window, b: np.ndarray, rtol: float, maxiter: int | None):
    m = assemble_matrix(g, w, "induced")
    diag = m.diagonal().astype(float)
    maxiter = maxiter if maxiter is not None else CG_ITER_FACTOR * len(w)
    x, iters, res = _kernels.projected_cg(m.indptr, m.indices, m.data.astype(float), diag, b, rtol, maxiter)
    if not res <= rtol:
        raise ConvergenceError(f"cg did not converge in {iters} iterations", res)
    return x, iters


def _solve_direct(g: GraphSystem, w: Window, b: np.ndarray, ground: int):
    a = assemble_matrix(g, w, "induced").to_dense()
    keep = np.arange(len(w)) != ground
    x = np.zeros(len(w))
    x[keep] = np.linalg.solve(a[np.ix_(keep, keep)], b[keep])
    return x


def _periodic_shape(g: GraphSystem) -> tuple:
    if g.kind == "cyclic":
        return (g.size,)
    if g.kind == "lattice":
        return (g.size,) * g.dim
    raise ValueError("the dft solver needs a cyclic graph or a periodic lattice")


def dft_solve(g: GraphSystem, b: np.ndarray) -> np.ndarray:
    """Mean-zero solution of Δx = b on a periodic box by diagonalising with the DFT."""
    shape = _periodic_shape(g)
    rhs = np.asarray(b, dtype=float).reshape(shape)
    symbol = np.zeros(shape)
    for axis, n in enumerate(shape):
        k = 4.0 * np.sin(np.pi * np.arange(n) / n) ** 2
        symbol = symbol + k.reshape([-1 if a == axis else 1 for a in range(len(shape))])
    spec = np.fft.fftn(rhs)
    zero = (0,) * len(shape)
    symbol[zero] = 1.0
    spec = spec / symbol
    spec[zero] = 0.0
    return np.fft.ifftn(spec).real.ravel()


def solve_dipole(
    g: GraphSystem,
    w: Window | None,
    alpha,
    beta,
    solver: str = "cg",
    mean_zero: bool = False,
    rtol: float = CG_RTOL,
    maxiter: int | None = None,
) -> PotentialSolution:
    """Solve Δv = δ_α - δ_β on the subgraph induced by ``w``.

    The field is grounded at α; ``mean_zero`` shifts it to zero mean
    afterwards (the grounding is then reported as ``None``).
    """
    if solver not in SOLVERS:
        raise ValueError(f"solver must be one of {SOLVERS}")
    if solver == "closed-form":
        return _closed_form(g, w, alpha, beta)
    w = g.check_window(w if w is not None else g.default_window())
    if alpha == beta:
        raise ValueError("alpha and beta must differ")
    b = _dipole_rhs(w, alpha, beta)
    if not g.is_connected(w):
        raise NoSolutionError("window is not connected; the dipole equation has no solution")
    ground = w.position(alpha)
    iters = 0
    if solver == "cg":
        x, iters = _solve_cg(g, w, b, rtol, maxiter)
    elif solver == "direct":
        x = _solve_direct(g, w, b, ground)
    else:
        if not (g.kind in ("cyclic", "lattice") and w.vertices == g.full_window().vertices):
            raise ValueError("the dft solver needs the whole periodic graph as window")
        x = dft_solve(g, b)
    x = x - x[ground]
    grounding = alpha
    if mean_zero:
        x = x - x.mean()
        grounding = None
    return _package(g, w, x, alpha, beta, solver, grounding, b, iters)


def _package(g, w, x, alpha, beta, solver, grounding, b, iters=0) -> PotentialSolution:
    m = assemble_matrix(g, w, "induced")
    residual = float(np.linalg.norm(m.matvec(x) - b))
    f = VertexField(w, x)
    return PotentialSolution(f, alpha, beta, energy(g, f), residual, solver, grounding, iters)


# ---------------------------------------------------------------------------
# closed forms


def _line_dipole_values(w: Window, alpha: int, beta: int) -> np.ndarray:
    # one unit of current flows through the edges strictly between alpha and beta
    n = np.array(w.vertices, dtype=float)
    lo, hi = min(alpha, beta), max(alpha, beta)
    ramp = np.clip(n, lo, hi) - lo
    return -ramp if alpha < beta else ramp - (hi - lo)


def _cyclic_dipole_values(n: int, alpha: int, beta: int) -> np.ndarray:
    if (beta - alpha) % n == 1:
        k = (np.arange(n) - alpha) % n
        return np.where(k == 0, 0.0, -(n - k) / n)
    if (alpha - beta) % n == 1:
        k = (alpha - np.arange(n)) % n
        return np.where(k == 0, 0.0, -(n - k) / n)
    raise ValueError("closed form on the cycle is available for adjacent alpha, beta")


def _closed_form(g: GraphSystem, w: Window | None, alpha, beta) -> PotentialSolution:
    if alpha == beta:
        raise ValueError("alpha and beta must differ")
    if g.kind == "line" and g.rule.name == "constant":
        if w is None:
            pad = max(8, abs(beta - alpha))
            w = Window.interval(min(alpha, beta) - pad, max(alpha, beta) + pad)
        x = _line_dipole_values(w, alpha, beta)
    elif g.kind == "cyclic":
        w = g.full_window() if w is None else w
        if w.vertices != g.full_window().vertices:
            raise ValueError("closed form on the cycle needs the whole cycle as window")
        x = _cyclic_dipole_values(g.size, alpha, beta)
    else:
        raise ValueError("closed-form dipoles exist for the unit integer line and cyclic graphs")
    return _package(g, w, x, alpha, beta, "closed-form", alpha, _dipole_rhs(w, alpha, beta))


def reference_dipole(model: str, param: int, window: Window | None = None) -> PotentialSolution:
    """Closed-form dipoles.

    ``integer-line``, k: Δv = δ_0 - δ_k on Z (c = 1), v = 0 left of 0, -n on
    0 < n <= k, -k beyond.  ``cyclic``, N: Δv = δ_0 - δ_1 on the N-cycle,
    v_j = -(N - j)/N for j >= 1.
    """
    if model == "integer-line":
        if param < 1:
            raise ValueError("k must be >= 1")
        return _closed_form(integer_line(), window, 0, int(param))
    if model == "cyclic":
        return _closed_form(build_cyclic(param), window, 0, 1)
    raise ValueError(f"unknown reference model {model!r}")


# ---------------------------------------------------------------------------
# resistance


@dataclass
class _BasePotentials:
    g: GraphSystem
    w: Window
    base: object
    solver: str
    cache: dict = field(default_factory=dict)

    def __call__(self, z) -> VertexField:
        if z not in self.cache:
            if z == self.base:
                self.cache[z] = VertexField.zeros(self.w)
            else:
                self.cache[z] = solve_dipole(self.g, self.w, self.base, z, self.solver).field
        return self.cache[z]


class ResistanceMetric:
    """dist(x, y) = energy(v_x - v_y)^(1/2) with Δv_z = δ_base - δ_z.

    Potentials v_z are solved once per vertex and cached, so evaluating many
    pairs on one window costs one solve per distinct vertex.
    """

    def __init__(self, g: GraphSystem, w: Window | None = None, base=None, solver: str = "cg", check_tol: float = 1e-8):
        self.g = g
        self.w = g.check_window(w if w is not None else g.default_window())
        self.base = self.w.vertices[0] if base is None else base
        self.w.position(self.base)
        self.check_tol = check_tol
        self._pot = _BasePotentials(g, self.w, self.base, solver)

    def potential(self, z) -> VertexField:
        return self._pot(z)

    def closed_form(self, x, y) -> float:
        """sqrt(2 (v_x(y) + v_y(x) - v_x(x) - v_y(y)))."""
        vx, vy = self._pot(x), self._pot(y)
        s = vx[y] + vy[x] - vx[x] - vy[y]
        return math.sqrt(2.0 * max(float(np.real(s)), 0.0))

    def __call__(self, x, y) -> float:
        if x == y:
            return 0.0
        d = math.sqrt(energy(self.g, self._pot(x) - self._pot(y)))
        alt = self.closed_form(x, y)
        if abs(d - alt) > self.check_tol * max(1.0, d):
            raise ConsistencyError(f"resistance routes disagree at ({x!r}, {y!r}): {d!r} vs {alt!r}")
        return d


def resistance_distance(g: GraphSystem, w: Window | None, x, y, base=None, solver: str = "cg") -> float:
    return ResistanceMetric(g, w, base, solver)(x, y)


def path_resistance_bound(g: GraphSystem, alpha, beta, max_vertices: int = 1_000_000) -> float:
    """Twice the least total edge resistance Σ 1/c(e) over paths from α to β (Dijkstra)."""
    if alpha == beta:
        return 0.0
    dist = {alpha: 0.0}
    heap = [(0.0, 0, alpha)]
    tie = 1
    done = set()
    while heap:
        d, _, x = heapq.heappop(heap)
        if x in done:
            continue
        if x == beta:
            return 2.0 * d
        done.add(x)
        if len(done) > max_vertices:
            break
        for y, c in g.neighbors(x):
            nd = d + 1.0 / c
            if nd < dist.get(y, math.inf):
                dist[y] = nd
                heapq.heappush(heap, (nd, tie, y))
                tie += 1
    raise NoSolutionError(f"{beta!r} is not reachable from {alpha!r}")


# ---------------------------------------------------------------------------
# currents and Kirchhoff's laws


def _edge_key(x, y):
    return (x, y) if x <= y else (y, x)


@dataclass(frozen=True, eq=False)
class CurrentFunction:
    """Currents on window edges, stored against the (min, max) orientation.

    ``flow(x, y)`` is the current from x to y; ``flow(y, x) == -flow(x, y)``.
    Edges of the window that are absent from ``values`` carry no current.
    """

    window: Window
    values: dict

    def flow(self, x, y) -> float:
        key = _edge_key(x, y)
        val = self.values.get(key, 0.0)
        return val if key == (x, y) else -val


def currents_from_potential(g: GraphSystem, sol: PotentialSolution) -> CurrentFunction:
    """Ohm's law I(xy) = c(xy) (v(x) - v(y)) on every window edge."""
    w = sol.field.window
    i, j, c = g.window_edges(w)
    vals = np.real(sol.field.values)
    out = {}
    for a, b, cc in zip(i.tolist(), j.tolist(), c.tolist()):
        x, y = w.vertices[a], w.vertices[b]
        key = _edge_key(x, y)
        sign = 1.0 if key == (x, y) else -1.0
        out[key] = sign * cc * (vals[a] - vals[b])
    return CurrentFunction(w, out)


@dataclass(frozen=True)
class KirchhoffReport:
    node_law_max_violation: float
    loop_law_max_violation: float
    loops_checked: int
    worst_node: object = None

    def passes(self, tol: float = 1e-9) -> bool:
        return self.node_law_max_violation <= tol and self.loop_law_max_violation <= tol

    def as_dict(self) -> dict:
        return {
            "node_law_max_violation": self.node_law_max_violation,
            "loop_law_max_violation": self.loop_law_max_violation,
            "loops_checked": self.loops_checked,
        }


def _spanning_tree(w: Window, i, j):
    nbrs = [[] for _ in range(len(w))]
    for e, (a, b) in enumerate(zip(i.tolist(), j.tolist())):
        nbrs[a].append((b, e))
        nbrs[b].append((a, e))
    parent = [-1] * len(w)
    parent_edge = [-1] * len(w)
    order = []
    seen = [False] * len(w)
    for root in range(len(w)):
        if seen[root]:
            continue
        seen[root] = True
        queue = deque([root])
        while queue:
            a = queue.popleft()
            order.append(a)
            for b, e in nbrs[a]:
                if not seen[b]:
                    seen[b] = True
                    parent[b] = a
                    parent_edge[b] = e
                    queue.append(b)
    return parent, parent_edge, order


def _tree_drops(g, I: CurrentFunction):
    """Accumulated Σ I/c along tree paths from each component root, plus chord data."""
    w = I.window
    i, j, c = g.window_edges(w)
    parent, parent_edge, order = _spanning_tree(w, i, j)
    drop = np.zeros(len(w))
    for a in order:
        p = parent[a]
        if p >= 0:
            e = parent_edge[a]
            drop[a] = drop[p] + I.flow(w.vertices[p], w.vertices[a]) / c[e]
    tree_edges = {e for e in parent_edge if e >= 0}
    chords = [e for e in range(len(i)) if e not in tree_edges]
    return drop, chords, (i, j, c)


def verify_kirchhoff(g: GraphSystem, I: CurrentFunction, alpha=None, beta=None) -> KirchhoffReport:
    """Node law Σ_y I(x, y) = (δ_α - δ_β)(x) and the loop law Σ I/c = 0.

    Loops are the fundamental cycles of a BFS spanning tree of the window;
    each is closed by exactly one non-tree edge (chord).
    """
    w = I.window
    net = np.zeros(len(w))
    i, j, c = g.window_edges(w)
    for a, b in zip(i.tolist(), j.tolist()):
        f = I.flow(w.vertices[a], w.vertices[b])
        net[a] += f
        net[b] -= f
    source = np.zeros(len(w))
    if alpha is not None:
        source[w.position(alpha)] += 1.0
    if beta is not None:
        source[w.position(beta)] -= 1.0
    dev = np.abs(net - source)
    worst = w.vertices[int(np.argmax(dev))]
    drop, chords, _ = _tree_drops(g, I)
    loop = 0.0
    for e in chords:
        a, b = int(i[e]), int(j[e])
        # tree path root->a, chord a->b, tree path b->root
        s = drop[a] + I.flow(w.vertices[a], w.vertices[b]) / c[e] - drop[b]
        loop = max(loop, abs(s))
    return KirchhoffReport(float(dev.max()), float(loop), len(chords), worst)


def potential_from_currents(g: GraphSystem, I: CurrentFunction) -> VertexField:
    """Integrate c⁻¹I = v(x) - v(y) along a spanning tree; defined up to a constant per component."""
    drop, _, _ = _tree_drops(g, I)
    return VertexField(I.window, -drop)


def dissipation(g: GraphSystem, I: CurrentFunction) -> float:
    """Σ over unordered edges of I(e)^2 / c(e).

    With the ordered-pair energy convention, energy(v) = 2 * dissipation for
    the currents of a potential v.
    """
    total = 0.0
    for (x, y), val in I.values.items():
        total += val * val / g.conductance(x, y)
    return float(total)
