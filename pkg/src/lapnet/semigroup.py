"""Heat semigroup e^{-tΔ} on finite sections, boundary coupling of a window,
and the finite-approximation error bound ‖S(t)v - S_N(t)v‖ <= λ_PF t ‖v‖.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .graph import GraphSystem, Window
from .operator import BandedMatrix, VertexField, apply_full, assemble_matrix

EIG_CUTOFF = 512
CHEB_TOL = 1e-14
PSD_TOL = 1e-9
POWER_TOL = 1e-12
POWER_MAXITER = 10000


class IndefiniteMatrixError(ValueError):
    pass


def gershgorin_bounds(m: BandedMatrix) -> tuple[float, float]:
    d = np.real(m.diagonal())
    radius = np.zeros(m.shape[0])
    rows = m.rows
    off = m.indices != rows
    np.add.at(radius, rows[off], np.abs(m.data[off]))
    return float(np.min(d - radius)), float(np.max(d + radius))


def chebyshev_coefficients(t: float, lmax: float, tol: float = CHEB_TOL) -> np.ndarray:
    """Chebyshev coefficients of λ ↦ e^{-tλ} on [0, lmax], first term counted with weight 1/2.

    Computed by Chebyshev-Gauss quadrature and cut after the last
    coefficient above ``tol``.
    """
    half = 0.5 * lmax
    size = int(max(64, 4 * t * half + 64))
    theta = np.pi * (np.arange(size) + 0.5) / size
    f = np.exp(-t * half * (np.cos(theta) + 1.0))
    k = np.arange(size)
    coeffs = (2.0 / size) * (np.cos(np.outer(k, theta)) @ f)
    big = np.nonzero(np.abs(coeffs) >= tol)[0]
    return coeffs[: big[-1] + 1] if big.size else coeffs[:1]


class HeatPropagator:
    """e^{-tM} for a fixed real symmetric positive semidefinite section.

    Sections up to ``EIG_CUTOFF`` are diagonalised once; larger ones use a
    Chebyshev expansion on the Gershgorin interval.
    """

    def __init__(self, m: BandedMatrix, method: str = "auto"):
        if not m.is_real or m.hermitian_deviation() > 1e-12 * max(1.0, float(np.max(np.abs(m.data), initial=0.0))):
            raise ValueError("heat semigroup needs a real symmetric matrix")
        self.m = m
        if method == "auto":
            method = "eig" if m.shape[0] <= EIG_CUTOFF else "chebyshev"
        if method not in ("eig", "chebyshev"):
            raise ValueError("method must be 'auto', 'eig' or 'chebyshev'")
        self.method = method
        lo, hi = gershgorin_bounds(m)
        self.lmax = max(hi, 0.0)
        if method == "eig":
            w, v = np.linalg.eigh(m.to_dense())
            if w[0] < -PSD_TOL:
                raise IndefiniteMatrixError(f"matrix has eigenvalue {w[0]:.3e} < 0")
            self._w, self._v = np.clip(w, 0.0, None), v
        elif lo < -PSD_TOL:
            from .spectral import lanczos_bounds

            if lanczos_bounds(m)[0] < -PSD_TOL:
                raise IndefiniteMatrixError("matrix is not positive semidefinite")

    def apply(self, t: float, v: VertexField) -> VertexField:
        if t < 0:
            raise ValueError("t must be >= 0")
        if v.window.vertices != self.m.window.vertices:
            raise ValueError("field and matrix live on different windows")
        if t == 0:
            return VertexField(v.window, v.values.copy())
        x = np.asarray(v.values)
        if self.method == "eig":
            q = self._v
            return VertexField(v.window, q @ (np.exp(-t * self._w) * (q.T @ x)))
        coeffs = chebyshev_coefficients(t, self.lmax)
        half = 0.5 * self.lmax
        data = self.m.data.astype(float)
        parts = [x.real, x.imag] if np.iscomplexobj(x) else [x]
        out = [
            _kernels.chebyshev_apply(self.m.indptr, self.m.indices, data, coeffs, np.ascontiguousarray(p, dtype=float), half, half)
            for p in parts
        ]
        return VertexField(v.window, out[0] + 1j * out[1] if len(out) == 2 else out[0])


def heat_apply(m: BandedMatrix, t: float, v: VertexField, method: str = "auto") -> VertexField:
    """e^{-tm} v for a symmetric positive semidefinite section ``m``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return HeatPropagator(m, method).apply(t, v)


# ---------------------------------------------------------------------------
# boundary coupling


def _top_singular_value(t: np.ndarray) -> float:
    if t.size == 0:
        return 0.0
    x = np.ones(t.shape[1])
    x /= np.linalg.norm(x)
    sigma = 0.0
    for _ in range(POWER_MAXITER):
        y = t.T @ (t @ x)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        new = math.sqrt(ny)
        if abs(new - sigma) <= POWER_TOL * new:
            return new
        sigma = new
    return sigma


@dataclass(frozen=True, eq=False)
class BoundaryCoupling:
    """Crossing edges of a window and the norm of their conductance matrix.

    ``coupling_matrix[r, c]`` is the conductance between outside vertex
    ``outside[r]`` and inside vertex ``inside[c]``.
    """

    crossing_edges: tuple
    inside: tuple
    outside: tuple
    coupling_matrix: np.ndarray
    lambda_pf: float

    def as_dict(self) -> dict:
        return {
            "crossing_edges": [list(e) for e in self.crossing_edges],
            "lambda_pf": self.lambda_pf,
        }


def boundary_coupling(g: GraphSystem, w: Window) -> BoundaryCoupling:
    """Largest singular value of the crossing-conductance matrix, by power iteration."""
    w = g.check_window(w)
    edges = g.crossing_edges(w)
    inside = tuple(dict.fromkeys(x for x, _, _ in edges))
    outside = tuple(dict.fromkeys(y for _, y, _ in edges))
    t = np.zeros((len(outside), len(inside)))
    ii = {x: k for k, x in enumerate(inside)}
    oo = {y: k for k, y in enumerate(outside)}
    for x, y, c in edges:
        t[oo[y], ii[x]] += c
    return BoundaryCoupling(tuple(edges), inside, outside, t, _top_singular_value(t))


# ---------------------------------------------------------------------------
# truncation error


@dataclass(frozen=True)
class TruncationCheck:
    t: float
    lhs: float
    bound: float
    lambda_pf: float
    passed: bool
    reference_drift: float | None = None

    def as_dict(self) -> dict:
        out = {"t": self.t, "lhs": self.lhs, "bound": self.bound, "lambda_pf": self.lambda_pf, "pass": self.passed}
        if self.reference_drift is not None:
            out["reference_drift"] = self.reference_drift
        return out


def _field_on(v: VertexField, w: Window) -> VertexField:
    if v.window.vertices == w.vertices:
        return v
    outside = [x for x, val in zip(v.window.vertices, v.values) if val != 0 and x not in w.index]
    if outside:
        raise ValueError(f"field is not supported in the window (e.g. at {outside[0]!r})")
    return VertexField(w, np.array([v[x] if x in v.window.index else 0.0 for x in w.vertices]))


def _triple_interval(g: GraphSystem, w: Window) -> Window:
    b = w.interval_bounds
    if b is None or g.kind not in ("line", "half-line"):
        raise ValueError("reference tripling is available for chain intervals")
    lo, hi = b
    span = hi - lo + 1
    new_lo = lo - span
    new_hi = hi + span
    if g.kind == "half-line" and new_lo < 0:
        new_hi += -new_lo
        new_lo = 0
    return Window.interval(new_lo, new_hi)


def truncation_error_check(
    g: GraphSystem,
    w_small: Window,
    w_ref: Window,
    t: float,
    v: VertexField,
    boundary: str = "compressed",
    min_ratio: float = 4.0,
    triple_reference: bool = False,
) -> TruncationCheck:
    """Compare e^{-tΔ_N} v with a large-window stand-in for e^{-tΔ} v.

    Returns ``lhs = ‖S_ref(t)v - S_small(t)v‖`` (small result zero-extended)
    and ``bound = λ_PF(w_small) t ‖v‖``.  With ``triple_reference`` the
    reference itself is compared with a window three times its size.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    w_small = g.check_window(w_small)
    w_ref = g.check_window(w_ref)
    if any(x not in w_ref.index for x in w_small.vertices):
        raise ValueError("w_small must be contained in w_ref")
    if len(w_ref) < min_ratio * len(w_small):
        raise ValueError(f"reference window must be at least {min_ratio:g} times larger")
    vs = _field_on(v, w_small)
    s_small = heat_apply(assemble_matrix(g, w_small, boundary), t, vs).extend(w_ref)
    s_ref = heat_apply(assemble_matrix(g, w_ref, boundary), t, vs.extend(w_ref))
    lhs = float(np.linalg.norm(s_ref.values - s_small.values))
    lam = boundary_coupling(g, w_small).lambda_pf
    bound = lam * t * vs.norm()
    drift = None
    if triple_reference:
        w_big = _triple_interval(g, w_ref)
        s_big = heat_apply(assemble_matrix(g, w_big, boundary), t, vs.extend(w_big))
        drift = float(np.linalg.norm(s_big.values - s_ref.extend(w_big).values))
    return TruncationCheck(float(t), lhs, float(bound), lam, bool(lhs <= bound + 1e-9), drift)


def truncation_difference(g: GraphSystem, w: Window, v: VertexField, check: bool = True) -> VertexField:
    """(Δ - Δ_N) v on ``w`` and its one-edge exterior, with Δ_N the compressed section.

    The result vanishes on ``w`` and equals -Σ_{y~x, y in w} c(xy) v(y) at
    each exterior vertex x; ``check`` asserts exactly that.
    """
    w = g.check_window(w)
    if v.window.vertices != w.vertices:
        v = _field_on(v, w)
    full = apply_full(g, v)
    ext = full.window
    inner = assemble_matrix(g, w, "compressed").apply(v).extend(ext)
    diff = full - inner
    if check:
        expected = {x: 0.0 for x in ext.vertices}
        for x, y, c in g.crossing_edges(w):
            expected[y] -= c * v[x]
        want = np.array([expected[x] for x in ext.vertices])
        scale = max(1.0, float(np.max(np.abs(full.values), initial=0.0)))
        if np.max(np.abs(diff.values - want), initial=0.0) > 1e-12 * scale:
            raise AssertionError("truncation difference does not match the crossing-edge formula")
    return diff
