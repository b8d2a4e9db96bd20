"""Banded operators on the half-line N0 given by row rules, the momentum and
position matrices P and Q, and their banded products.

Rows are always exact: a product row is a finite sum over the rows of the
factors, so no section of any size is ever multiplied.  Only the trailing
``bandwidth`` rows of a materialised section lose entries, because their
columns run past the section edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .graph import GraphSystem, Window
from .operator import BandedMatrix
from .spectral import DefectReport, defect_probe

RowRule = Callable[[int], dict]


class HalfLineBandedOperator:
    """Infinite matrix m(x, y) on N0 with m(x, y) = 0 whenever |x - y| > bandwidth.

    Parameters
    ----------
    rule : callable
        ``rule(n)`` returns ``{offset: value}`` for the non-zeros of row n;
        entries with negative column index are dropped.
    bandwidth : int
        Declared bandwidth; rules must respect it.
    hermitian : bool
        Whether m(x, y) = conj(m(y, x)) holds for the infinite matrix.
    row_log_scale : callable, optional
        If given, ``rule(n)`` returns row n divided by ``exp(row_log_scale(n))``.
        Used for rows whose raw entries overflow.
    """

    def __init__(self, rule: RowRule, bandwidth: int, hermitian: bool = False, name: str = "",
                 row_log_scale: Callable[[int], float] | None = None):
        self.rule = rule
        self.bandwidth = int(bandwidth)
        self.hermitian = bool(hermitian)
        self.name = name
        self.row_log_scale = row_log_scale
        self._row = lru_cache(maxsize=None)(self._compute_row)

    def __repr__(self) -> str:
        return f"HalfLineBandedOperator({self.name or 'anonymous'}, bandwidth={self.bandwidth})"

    def _compute_row(self, n: int) -> dict:
        out = {}
        for off, val in self.rule(n).items():
            col = n + off
            if col < 0 or val == 0:
                continue
            if abs(off) > self.bandwidth:
                raise ValueError(f"{self.name}: row {n} has an entry at offset {off} beyond the bandwidth")
            out[col] = complex(val)
        return out

    def row(self, n: int) -> dict:
        """Non-zeros of row n as ``{column: value}`` (scaled if ``row_log_scale`` is set)."""
        if n < 0:
            raise IndexError("rows are indexed from 0")
        return self._row(int(n))

    def entry(self, x: int, y: int) -> complex:
        return self.row(x).get(y, 0j)

    def section(self, n: int) -> np.ndarray:
        """Dense (n+1) x (n+1) principal section over indices 0..n."""
        a = np.zeros((n + 1, n + 1), dtype=complex)
        for x in range(n + 1):
            for y, val in self.row(x).items():
                if y <= n:
                    a[x, y] = val
        return a

    def probe_rows(self, n: int):
        """Rows 0..n-b over columns 0..n; all of them are complete rows of the infinite matrix."""
        m = n + 1 - self.bandwidth
        a = self.section(n)[:m]
        scale = None
        if self.row_log_scale is not None:
            scale = np.array([self.row_log_scale(r) for r in range(m)])
        return a, scale

    def to_banded(self, n: int) -> BandedMatrix:
        if self.row_log_scale is not None:
            raise ValueError("rows are stored rescaled; no unscaled section is available")
        return BandedMatrix.from_dense(Window.interval(0, n), self.section(n), hermitian=False)

    def measured_bandwidth(self, n: int) -> int:
        b = 0
        for x in range(n + 1):
            for y in self.row(x):
                b = max(b, abs(y - x))
        return b

    def truncation_affected_rows(self, n: int) -> range:
        """Rows of the 0..n section with columns beyond n."""
        return range(max(0, n + 1 - self.bandwidth), n + 1)

    def interior_rows(self, n: int) -> range:
        return range(0, max(0, n + 1 - self.bandwidth))

    def apply(self, v: np.ndarray, n_out: int | None = None) -> np.ndarray:
        """(M v)(x) for x = 0..n_out, with v finitely supported on 0..len(v)-1."""
        v = np.asarray(v, dtype=complex)
        n_out = len(v) - 1 + self.bandwidth if n_out is None else n_out
        out = np.zeros(n_out + 1, dtype=complex)
        for x in range(n_out + 1):
            out[x] = sum((val * v[y] for y, val in self.row(x).items() if y < len(v)), 0j)
        return out

    def hermitian_deviation(self, n: int) -> float:
        """max |m(x, y) - conj(m(y, x))| over the interior rows of the 0..n section."""
        a = self.section(n)
        k = n + 1 - self.bandwidth
        return float(np.max(np.abs(a[:k, :k] - a[:k, :k].conj().T))) if k > 0 else 0.0

    @classmethod
    def from_graph(cls, g: GraphSystem) -> "HalfLineBandedOperator":
        """Laplacian of a half-line chain as a banded operator.

        Geometric chains get rows rescaled by c(n, n+1) so that sections far
        out stay finite.
        """
        if g.kind != "half-line":
            raise ValueError("from_graph needs a half-line chain")
        rule = g.rule
        if rule.name == "geometric":
            lam = float(rule.lam)

            def scaled(n: int) -> dict:
                # divide by c(n, n+1) = lam^(n+1)
                left = 1.0 / lam if n > 0 else 0.0
                return {-1: -left, 0: left + 1.0, 1: -1.0}

            return cls(scaled, 1, True, f"chain:{rule.spec()}", row_log_scale=rule.log)

        def raw(n: int) -> dict:
            left = rule(n - 1) if n > 0 else 0.0
            right = rule(n)
            return {-1: -left, 0: left + right, 1: -right}

        return cls(raw, 1, True, f"chain:{rule.spec()}")


def build_P(n_max: int = 64) -> HalfLineBandedOperator:
    """Momentum matrix (a + a^T)/2: m(n, n+1) = m(n+1, n) = sqrt(n+1)/2."""
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    return HalfLineBandedOperator(lambda n: {-1: 0.5 * math.sqrt(n), 1: 0.5 * math.sqrt(n + 1)}, 1, True, "P")


def build_Q(n_max: int = 64) -> HalfLineBandedOperator:
    """Position matrix (a^T - a)/(2i): m(n, n+1) = -sqrt(n+1)/(2i), m(n+1, n) = sqrt(n+1)/(2i)."""
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    return HalfLineBandedOperator(
        lambda n: {-1: math.sqrt(n) / 2j, 1: -math.sqrt(n + 1) / 2j}, 1, True, "Q"
    )


def banded_multiply(a: HalfLineBandedOperator, b: HalfLineBandedOperator, hermitian: bool = False,
                    name: str | None = None) -> HalfLineBandedOperator:
    """Exact product: row n of AB is Σ_k a(n, k) b(k, .), a finite sum."""
    if a.row_log_scale is not None or b.row_log_scale is not None:
        raise ValueError("products of rescaled operators are not supported")

    def rule(n: int) -> dict:
        acc: dict = {}
        for k, ak in a.row(n).items():
            for y, bky in b.row(k).items():
                acc[y - n] = acc.get(y - n, 0j) + ak * bky
        return acc

    return HalfLineBandedOperator(rule, a.bandwidth + b.bandwidth, hermitian, name or f"({a.name}{b.name})")


def banded_add(a: HalfLineBandedOperator, b: HalfLineBandedOperator, alpha: complex = 1.0, beta: complex = 1.0,
               hermitian: bool | None = None, name: str | None = None) -> HalfLineBandedOperator:
    """alpha A + beta B."""
    if a.row_log_scale is not None or b.row_log_scale is not None:
        raise ValueError("sums of rescaled operators are not supported")

    def rule(n: int) -> dict:
        acc: dict = {}
        for y, val in a.row(n).items():
            acc[y - n] = acc.get(y - n, 0j) + alpha * val
        for y, val in b.row(n).items():
            acc[y - n] = acc.get(y - n, 0j) + beta * val
        return acc

    if hermitian is None:
        hermitian = a.hermitian and b.hermitian and complex(alpha).imag == 0 and complex(beta).imag == 0
    return HalfLineBandedOperator(rule, max(a.bandwidth, b.bandwidth), hermitian, name or f"({a.name}+{b.name})")


def commutator(a: HalfLineBandedOperator, b: HalfLineBandedOperator) -> HalfLineBandedOperator:
    return banded_add(banded_multiply(a, b), banded_multiply(b, a), 1.0, -1.0, False, f"[{a.name},{b.name}]")


def build_QPQ(n_max: int = 64) -> HalfLineBandedOperator:
    q = build_Q(n_max)
    return banded_multiply(q, banded_multiply(build_P(n_max), q), hermitian=True, name="QPQ")


def build_hamiltonian(n_max: int = 64) -> HalfLineBandedOperator:
    """P^2 - Q^4."""
    p, q = build_P(n_max), build_Q(n_max)
    q2 = banded_multiply(q, q)
    return banded_add(banded_multiply(p, p), banded_multiply(q2, q2), 1.0, -1.0, True, "P^2-Q^4")


@dataclass(frozen=True)
class DeficiencyEstimate:
    n_plus: int | None
    n_minus: int | None
    status: str
    plus: DefectReport
    minus: DefectReport

    @property
    def indices(self) -> tuple:
        return (self.n_plus, self.n_minus)

    def as_dict(self) -> dict:
        return {
            "n_plus": self.n_plus,
            "n_minus": self.n_minus,
            "status": self.status,
            "plus": self.plus.as_dict(),
            "minus": self.minus.as_dict(),
        }


def deficiency_probe_banded(m: HalfLineBandedOperator, n_max: int = 256) -> DeficiencyEstimate:
    """Defect probes at +i and -i; the pair is ``inconclusive`` if either probe is."""
    plus = defect_probe(m, 1j, n_max)
    minus = defect_probe(m, -1j, n_max)
    status = "ok" if plus.status == minus.status == "ok" else "inconclusive"
    return DeficiencyEstimate(plus.estimated_count, minus.estimated_count, status, plus, minus)
