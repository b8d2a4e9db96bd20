"""Spectra of Laplacian sections, f(Δ) through eigen-decompositions, the H(s)
scale on the integer line, and numerical probes for defect spaces.

Defect probing is heuristic.  A finite Hermitian section M_N never shows a
defect through σ_min(M_N - i) since that is always >= 1.  The probe instead
solves the *rectangular* system formed by the rows 0..n-b of the infinite
matrix (all of which are exact) in the unknowns 0..n, and inspects how fast
its null vectors decay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .graph import Window
from .operator import BandedMatrix, VertexField

DENSE_CAP = 4096
HERMITIAN_RTOL = 1e-12
ZERO_EIG_TOL = 1e-10

# defect probe configuration, surfaced in every report
NEAR_NULL_RTOL = 1e-8
TAIL_FRACTION = 0.1
TAIL_MASS_THRESHOLD = 1e-6
DECAY_EXPONENT_THRESHOLD = 1.0


class SpectralDomainError(ValueError):
    """f is not finite at some eigenvalue."""


class NotHermitianError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Ascending eigenvalues with orthonormal eigenvector columns.

    For sections above the dense cap only ``eigenvalues`` is filled, holding
    lower and upper estimates of the extreme eigenvalues (``source`` is
    ``lanczos-bounds``).
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    source: str
    window: Window | None = None

    @property
    def is_full(self) -> bool:
        return self.eigenvectors is not None

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.conj().T


# ---------------------------------------------------------------------------
# closed-form spectra


def cyclic_spectrum(n: int) -> np.ndarray:
    """{4 sin^2(pi k / N) : k = 0..N-1}, sorted, with multiplicity."""
    if int(n) != n or n < 3:
        raise ValueError("N must be >= 3")
    lam = 4.0 * np.sin(np.pi * np.arange(n) / n) ** 2
    # exact values where sin is exact; avoids 2.9999999999999996 style noise
    lam = np.where(np.abs(lam - np.round(lam)) < 1e-13, np.round(lam), lam)
    return np.sort(lam)


def lattice_symbol(dim: int, x) -> float:
    """4 Σ_k sin^2(x_k / 2), the Fourier symbol of the unit lattice Laplacian."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if dim < 1 or x.shape != (dim,):
        raise ValueError(f"expected a point with {dim} coordinates")
    return float(4.0 * np.sum(np.sin(x / 2.0) ** 2))


def hausdorff_to_interval(values, lo: float = 0.0, hi: float = 4.0) -> float:
    """Hausdorff distance between a finite set inside [lo, hi] and the interval."""
    vals = np.sort(np.asarray(values, dtype=float))
    out_of_range = max(0.0, lo - vals[0], vals[-1] - hi)
    gaps = np.diff(np.concatenate([[lo], np.clip(vals, lo, hi), [hi]]))
    inner = max(gaps[0], gaps[-1], (gaps[1:-1].max() / 2.0) if len(gaps) > 2 else 0.0)
    return float(max(out_of_range, inner))


# ---------------------------------------------------------------------------
# truncated spectra


def _check_hermitian(m: BandedMatrix) -> None:
    scale = float(np.max(np.abs(m.data))) if m.nnz else 0.0
    if m.hermitian_deviation() > HERMITIAN_RTOL * max(scale, 1.0):
        raise NotHermitianError("matrix is not Hermitian")


def lanczos_bounds(m: BandedMatrix, steps: int = 200, seed: int = 0) -> tuple[float, float]:
    """Extreme Ritz values after ``steps`` Lanczos steps with full reorthogonalisation.

    Ritz values lie inside the spectrum, so the pair is an inner estimate of
    [λ_min, λ_max]; convergence at the extremes is fast.
    """
    n = m.shape[0]
    steps = min(steps, n)
    rng = np.random.default_rng(seed)
    dtype = float if m.is_real else complex
    basis = np.zeros((steps, n), dtype=dtype)
    q = rng.standard_normal(n).astype(dtype)
    q /= np.linalg.norm(q)
    alphas, betas = [], []
    for j in range(steps):
        basis[j] = q
        w = m.matvec(q)
        a = float(np.real(np.vdot(q, w)))
        alphas.append(a)
        w = w - basis[: j + 1].T @ (basis[: j + 1].conj() @ w)
        b = float(np.linalg.norm(w))
        if b < 1e-12 or j == steps - 1:
            break
        betas.append(b)
        q = w / b
    t = np.diag(alphas) + np.diag(betas[: len(alphas) - 1], 1) + np.diag(betas[: len(alphas) - 1], -1)
    ritz = np.linalg.eigvalsh(t)
    return float(ritz[0]), float(ritz[-1])


def truncated_spectrum(m: BandedMatrix, method: str = "eigh", dense_cap: int = DENSE_CAP) -> SpectralDecomposition:
    """Eigen-decomposition of a Hermitian section.

    Parameters
    ----------
    m : BandedMatrix
        Hermitian matrix; anything else raises ``NotHermitianError``.
    method : {"eigh", "jacobi"}
        LAPACK through numpy, or the cyclic Jacobi kernel (real input only).
    dense_cap : int
        Above this size only Lanczos estimates of the extreme eigenvalues
        are returned.
    """
    _check_hermitian(m)
    n = m.shape[0]
    if n > dense_cap:
        lo, hi = lanczos_bounds(m)
        return SpectralDecomposition(np.array([lo, hi]), None, "lanczos-bounds", m.window)
    a = m.to_dense()
    if method == "jacobi":
        if not m.is_real:
            raise ValueError("the Jacobi solver handles real symmetric matrices only")
        w, v, _ = _kernels.jacobi_eigh(np.ascontiguousarray(a, dtype=float), 1e-15, 100)
        order = np.argsort(w, kind="stable")
        w, v = w[order], v[:, order]
    elif method == "eigh":
        w, v = np.linalg.eigh(a)
    else:
        raise ValueError("method must be 'eigh' or 'jacobi'")
    return SpectralDecomposition(np.asarray(w, dtype=float), v, "dense-solver", m.window)


# ---------------------------------------------------------------------------
# functional calculus


def _eval_on_spectrum(f: Callable, lam: np.ndarray, pseudo_inverse: bool) -> np.ndarray:
    # eigenvalues within ZERO_EIG_TOL of 0 are roundoff images of an exact zero
    zero = np.abs(lam) <= ZERO_EIG_TOL
    vals = np.zeros(len(lam), dtype=complex)
    with np.errstate(all="ignore"):
        for k, (x, z) in enumerate(zip(lam, zero)):
            if z and pseudo_inverse:
                continue
            arg = 0.0 if z else float(x)
            try:
                vals[k] = f(arg)
            except (ZeroDivisionError, ValueError, OverflowError):
                raise SpectralDomainError(f"f is undefined at eigenvalue {arg!r}") from None
            if not np.isfinite(vals[k]):
                raise SpectralDomainError(f"f is not finite at eigenvalue {arg!r}")
    return vals.real if np.all(vals.imag == 0) else vals


def apply_spectral_function(
    f: Callable[[float], float], dec: SpectralDecomposition, v: VertexField, pseudo_inverse: bool = False
) -> VertexField:
    """Q f(Λ) Q* v.

    With ``pseudo_inverse`` set, eigenvalues within ``ZERO_EIG_TOL`` of zero
    are mapped to 0 instead of f(0) (needed for negative powers).
    """
    if not dec.is_full:
        raise ValueError("decomposition has no eigenvectors")
    q = dec.eigenvectors
    fl = _eval_on_spectrum(f, dec.eigenvalues, pseudo_inverse)
    return VertexField(v.window, q @ (fl * (q.conj().T @ v.values)))


def fractional_power(s: float) -> Callable[[float], float]:
    """λ ↦ λ^s on the nonnegative half-line; roundoff negatives are clipped to 0."""

    def f(lam: float) -> float:
        lam = max(lam, 0.0)
        if lam == 0.0:
            return 1.0 if s == 0 else (0.0 if s > 0 else math.inf)
        return lam**s

    return f


def hs_norm(dec: SpectralDecomposition, v: VertexField, s: float) -> float:
    """‖Δ^s v‖ on the section; zero modes are dropped for s < 0."""
    return apply_spectral_function(fractional_power(s), dec, v, pseudo_inverse=s < 0).norm()


# ---------------------------------------------------------------------------
# H(s) membership of the integer-line dipole


@dataclass(frozen=True)
class HsMembership:
    k: int
    s: float
    verdict: str
    member: bool
    analytic_member: bool
    integral_sequence: list
    cutoffs: list
    exponent: float
    value: float = math.inf
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "s": self.s,
            "verdict": self.verdict,
            "member": self.member,
            "analytic_member": self.analytic_member,
            "integrand_exponent_at_zero": self.exponent,
            "integral_sequence": list(self.integral_sequence),
            "value": self.value if math.isfinite(self.value) else None,
            "note": self.note,
        }


def _log_hs_integrand(x: np.ndarray, k: int, s: float) -> np.ndarray:
    # (1/pi) (4 sin^2(x/2))^(2s) |v_hat|^2 with |v_hat| = |sin(kx/2)| / (2 sin^2(x/2))
    ls = np.log(np.sin(x / 2.0))
    with np.errstate(divide="ignore"):
        lk = np.log(np.abs(np.sin(k * x / 2.0)))
    return 2.0 * s * (math.log(4.0) + 2.0 * ls) + 2.0 * lk - math.log(4.0) - 4.0 * ls - math.log(math.pi)


def hs_band_integrals(k: int, s: float, bands: int, nodes: int = 48) -> np.ndarray:
    """Integrals of the H(s) integrand over the dyadic bands [pi/2^(j+1), pi/2^j], j = 0..bands-1.

    Each band is integrated by Gauss-Legendre in log x, so every band is
    resolved with the same relative accuracy however close it is to 0.
    """
    t, wts = np.polynomial.legendre.leggauss(nodes)
    j = np.arange(bands)[:, None]
    lo = math.log(math.pi) - (j + 1) * math.log(2.0)
    half = 0.5 * math.log(2.0)
    u = lo + half * (t[None, :] + 1.0)
    x = np.exp(u)
    vals = np.exp(_log_hs_integrand(x, k, s) + u)
    return half * (vals @ wts)


def hs_membership_line(k: int, s: float, max_bands: int = 400, rtol: float = 1e-3, settle: int = 3) -> HsMembership:
    """Decide whether the dipole δ_0 - δ_k on Z lies in H(s).

    The truncated integrals I_J over [pi/2^J, pi] are accumulated band by
    band.  The dipole is a member once ``settle`` consecutive relative
    increments fall below ``rtol``; if that never happens within
    ``max_bands`` bands the integral is taken to diverge.  The integrand
    behaves like x^(4s-2) at 0, so the analytic rule is s > 1/4.
    """
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")
    k = int(k)
    exponent = 4.0 * s - 2.0
    analytic = s > 0.25
    if s == 0.25:
        seq = np.cumsum(hs_band_integrals(k, s, 64)).tolist()
        return HsMembership(k, s, "boundary case, non-member", False, False, seq,
                            [math.pi / 2 ** (j + 1) for j in range(64)], exponent, math.inf,
                            "s = 1/4 fails the strict inequality s > 1/4; the integral diverges logarithmically")
    partial = np.cumsum(hs_band_integrals(k, s, max_bands))
    rel = np.abs(np.diff(partial)) / np.abs(partial[1:])
    small = rel < rtol
    stop = None
    run = 0
    for j, ok in enumerate(small):
        run = run + 1 if ok else 0
        if run >= settle:
            stop = j + 2
            break
    if stop is not None:
        seq = partial[:stop]
        verdict, member = "member", True
    else:
        seq = partial
        verdict, member = "non-member", False
    note = "" if member == analytic else "numerical verdict disagrees with the analytic exponent rule"
    cutoffs = [math.pi / 2 ** (j + 1) for j in range(len(seq))]
    value = float(partial[-1]) if member else math.inf
    return HsMembership(k, float(s), verdict, member, analytic, seq.tolist(), cutoffs, exponent, value, note)


def half_power_entry_line(d: int) -> float:
    """Exact (Δ^(1/2))(n, n+d) on Z: -4 / (pi (4 d^2 - 1)), and 4/pi on the diagonal."""
    return -4.0 / (math.pi * (4.0 * d * d - 1.0))


# ---------------------------------------------------------------------------
# defect probes


@dataclass(frozen=True)
class WindowProbe:
    n: int
    null_dim: int
    count: int
    decay_exponents: list
    tail_fractions: list
    tail_rule_count: int


@dataclass(frozen=True)
class DefectReport:
    shift: complex
    estimated_count: int | None
    status: str
    windows: tuple
    probes: tuple
    bandwidth: int
    thresholds: dict
    shooting: dict | None = None
    notes: tuple = ()

    @property
    def decay_exponents(self) -> list:
        return [p.decay_exponents for p in self.probes]

    def as_dict(self) -> dict:
        shift = complex(self.shift)
        return {
            "shift": {"re": shift.real, "im": shift.imag},
            "estimated_count": self.estimated_count,
            "status": self.status,
            "bandwidth": self.bandwidth,
            "windows": list(self.windows),
            "thresholds": dict(self.thresholds),
            "probes": [
                {
                    "n_max": p.n,
                    "null_dim": p.null_dim,
                    "count": p.count,
                    "decay_exponents": p.decay_exponents,
                    "tail_fractions": p.tail_fractions,
                    "tail_rule_count": p.tail_rule_count,
                }
                for p in self.probes
            ],
            "shooting": self.shooting,
            "notes": list(self.notes),
        }


def _rows_from(op, n: int):
    """Rows 0..n-b of the infinite matrix in columns 0..n, with optional per-row log scales."""
    if isinstance(op, BandedMatrix):
        b = op.bandwidth
        if op.shape[0] < n + 1:
            raise ValueError(f"section of size {op.shape[0]} is too small for n_max={n}")
        return b, op.to_dense()[: n + 1 - b, : n + 1].astype(complex), None
    b = int(op.bandwidth)
    rows, log_scale = op.probe_rows(n)
    return b, np.asarray(rows, dtype=complex), log_scale


def _probe_window(op, shift: complex, n: int) -> tuple[WindowProbe, tuple]:
    b, rows, log_scale = _rows_from(op, n)
    r = np.arange(rows.shape[0])
    diag_shift = np.full(rows.shape[0], shift, dtype=complex)
    if log_scale is not None:
        diag_shift = diag_shift * np.exp(-np.asarray(log_scale, dtype=float))
    a = rows.copy()
    a[r, r] -= diag_shift
    a /= np.abs(a).max(axis=1, keepdims=True)
    _, sv, vh = np.linalg.svd(a)
    rank = int(np.sum(sv >= NEAR_NULL_RTOL * sv[0]))
    z = vh[rank:].conj().T
    null_dim = z.shape[1]
    ncols = n + 1
    t0 = int(round(ncols * (1.0 - TAIL_FRACTION)))
    tail = z[t0:]
    _, dirs = np.linalg.eigh(tail.conj().T @ tail)
    exps, fracs = [], []
    for j in range(null_dim):
        u = z @ dirs[:, j]
        mass = np.abs(u) ** 2
        m1 = mass[ncols // 4 : ncols // 2].sum()
        m2 = mass[ncols // 2 :].sum()
        p = 1.0 - math.log2(m2 / m1) if m1 > 0 and m2 > 0 else (math.inf if m2 == 0 else -math.inf)
        exps.append(float(p))
        fracs.append(float(mass[t0:].sum() / mass.sum()))
    count = sum(1 for p in exps if p > DECAY_EXPONENT_THRESHOLD)
    tail_count = sum(1 for f in fracs if f < TAIL_MASS_THRESHOLD)
    return WindowProbe(n, null_dim, count, exps, fracs, tail_count), (b, rows, log_scale)


def _shooting(rows: np.ndarray, log_scale, shift: complex, n: int) -> dict:
    """Forward recursion for a bandwidth-one operator: row r fixes v[r+1]."""
    m = rows.shape[0]
    r = np.arange(m)
    ds = np.full(m, shift, dtype=complex)
    if log_scale is not None:
        ds = ds * np.exp(-np.asarray(log_scale, dtype=float))
    lower = np.zeros(m, dtype=complex)
    lower[1:] = rows[r[1:], r[1:] - 1]
    diag = rows[r, r] - ds
    upper = rows[r, r + 1]
    v, lscale = _kernels.shoot_tridiagonal(lower, diag, upper, 0j, m)
    logabs = np.log(np.abs(v[-1])) + lscale
    half = m // 2
    growth = None
    if abs(v[half]) > 0 and lscale == 0.0:
        growth = float((logabs - math.log(abs(v[half]))) / (m - half))
    elif abs(v[-1]) > 0:
        growth = float(logabs / m)
    head, _ = _kernels.shoot_tridiagonal(lower[:3], diag[:3], upper[:3], 0j, min(3, m))
    if np.all(head.imag == 0):
        first = [float(x.real) for x in head]
    else:
        first = [[float(x.real), float(x.imag)] for x in head]
    out = {
        "first_values": first,
        "log_abs_last": float(logabs),
        "growth_rate": growth,
        "monotone_growth": bool(lscale > 0 or np.all(np.diff(np.abs(v[: min(m, 64)])) > 0)),
    }
    # Σ_{k<=N} conj(v_k) (M v)_k = shift Σ_{k<=N} |v_k|^2 for real shifts
    if complex(shift).imag == 0 and log_scale is None:
        energies = {}
        sq = np.cumsum(np.abs(v[:m]) ** 2)
        for N in (1, 2, 4, 8, 16, 32):
            # sum over k = 0..N
            if N < m and np.isfinite(sq[N]) and lscale == 0.0:
                mv = rows[: N + 1] @ v[: rows.shape[1]]
                energies[str(N)] = float(np.real(np.vdot(v[: N + 1], mv)))
        out["truncated_half_energies"] = energies
    return out


def defect_probe(op, shift: complex, n_max: int | None = None, shoot: bool = True) -> DefectReport:
    """Estimate dim ker(M* - shift) for a banded operator on the half-line.

    Parameters
    ----------
    op : BandedMatrix or banded operator
        A ``BandedMatrix`` on the window 0..K (K >= 2 n_max) whose rows are
        exact up to K - bandwidth, or any object with a ``bandwidth``
        attribute and ``probe_rows(n)`` returning rows 0..n-b of the
        infinite matrix over columns 0..n and optional per-row log scales.
    shift : complex
        -1, +i or -i.
    n_max : int
        First window; the second one is 2 n_max.

    Notes
    -----
    The rows are equilibrated before the SVD.  The null space of the
    rectangular system is rotated into directions ordered by their mass on
    the last 10% of indices.  For each direction, p = 1 - log2(m2/m1) with
    m1 the mass on [n/4, n/2) and m2 on [n/2, n] estimates the power-law
    decay |u_j|^2 ~ j^(-p); the direction counts as square-summable when
    p > 1.  Counts at the two windows must agree, otherwise the status is
    ``inconclusive`` and no estimate is returned.
    """
    if n_max is None:
        if not isinstance(op, BandedMatrix):
            raise ValueError("n_max is required for operator objects")
        n_max = (op.shape[0] - 1) // 2
    if n_max < 8:
        raise ValueError("n_max must be at least 8")
    shift = complex(shift)
    probes = []
    rows_small = None
    for n in (n_max, 2 * n_max):
        p, data = _probe_window(op, shift, n)
        probes.append(p)
        if rows_small is None:
            rows_small = data
    b = rows_small[0]
    counts = {p.count for p in probes}
    notes = []
    if len(counts) == 1:
        status, est = "ok", probes[0].count
    else:
        status, est = "inconclusive", None
        notes.append(f"counts differ across windows: {[p.count for p in probes]}")
    if any(p.tail_rule_count != p.count for p in probes):
        notes.append("square-summable directions decay algebraically; tail-mass rule reported separately")
    shooting = None
    if shoot and b == 1:
        _, rows, log_scale = rows_small
        shooting = _shooting(rows, log_scale, shift, rows.shape[0])
    thresholds = {
        "near_null_rtol": NEAR_NULL_RTOL,
        "tail_fraction": TAIL_FRACTION,
        "tail_mass": TAIL_MASS_THRESHOLD,
        "decay_exponent": DECAY_EXPONENT_THRESHOLD,
    }
    return DefectReport(shift, est, status, (n_max, 2 * n_max), tuple(probes), b, thresholds, shooting, tuple(notes))
