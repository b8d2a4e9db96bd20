"""Hot numeric loops, each in two flavours.

Every kernel exists as a loop-style function compiled with ``numba.njit`` and
as a NumPy implementation that needs nothing but NumPy.  The compiled path is
used when numba imports cleanly and ``LAPNET_DISABLE_JIT`` is unset (or ``0``).
Both flavours are always importable under ``<name>_numba`` / ``<name>_numpy``
so that tests and ``benchmarks/bench_kernels.py`` can compare them.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

JIT_ENABLED = HAVE_NUMBA and os.environ.get("LAPNET_DISABLE_JIT", "0") in ("", "0")

if HAVE_NUMBA:
    njit = numba.njit
    _threads = os.environ.get("LAPNET_THREADS")
    if _threads:
        try:
            numba.set_num_threads(max(1, min(int(_threads), numba.config.NUMBA_NUM_THREADS)))
        except ValueError:
            pass
else:  # pragma: no cover

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


# ---------------------------------------------------------------------------
# sparse matrix-vector product (CSR)


@njit(cache=True)
def csr_matvec_numba(indptr, indices, data, x):
    n = indptr.shape[0] - 1
    out = np.zeros(n, dtype=x.dtype)  # caller passes data and x with one dtype
    for i in range(n):
        acc = out[i]
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * x[indices[k]]
        out[i] = acc
    return out


def csr_matvec_numpy(indptr, indices, data, x):
    n = indptr.shape[0] - 1
    rows = np.repeat(np.arange(n), np.diff(indptr))
    prod = data * x[indices]
    if np.iscomplexobj(prod):
        return np.bincount(rows, weights=prod.real, minlength=n) + 1j * np.bincount(
            rows, weights=prod.imag, minlength=n
        )
    return np.bincount(rows, weights=prod, minlength=n)


# ---------------------------------------------------------------------------
# conjugate gradients on a connected graph Laplacian (constant nullspace)


@njit(cache=True)
def projected_cg_numba(indptr, indices, data, diag, b, rtol, maxiter):
    n = b.shape[0]
    x = np.zeros(n)
    r = b - b.mean()
    bnorm = math.sqrt(np.dot(r, r))
    if bnorm == 0.0:
        return x, 0, 0.0
    z = r / diag
    p = z.copy()
    rz = np.dot(r, z)
    it = 0
    res = 1.0
    while it < maxiter:
        q = np.zeros(n)
        for i in range(n):
            acc = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                acc += data[k] * p[indices[k]]
            q[i] = acc
        pq = np.dot(p, q)
        if pq <= 0.0:
            break
        a = rz / pq
        x += a * p
        r -= a * q
        r -= r.mean()
        it += 1
        res = math.sqrt(np.dot(r, r)) / bnorm
        if res <= rtol:
            break
        z = r / diag
        rz_new = np.dot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, it, res


def projected_cg_numpy(indptr, indices, data, diag, b, rtol, maxiter):
    x = np.zeros(b.shape[0])
    r = b - b.mean()
    bnorm = float(np.linalg.norm(r))
    if bnorm == 0.0:
        return x, 0, 0.0
    z = r / diag
    p = z.copy()
    rz = float(r @ z)
    it = 0
    res = 1.0
    while it < maxiter:
        q = csr_matvec_numpy(indptr, indices, data, p)
        pq = float(p @ q)
        if pq <= 0.0:
            break
        a = rz / pq
        x += a * p
        r -= a * q
        r -= r.mean()
        it += 1
        res = float(np.linalg.norm(r)) / bnorm
        if res <= rtol:
            break
        z = r / diag
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, it, res


# ---------------------------------------------------------------------------
# cyclic Jacobi eigensolver for real symmetric matrices


@njit(cache=True)
def jacobi_eigh_numba(a, tol, max_sweeps):
    A = a.copy()
    n = A.shape[0]
    V = np.eye(n)
    scale = 0.0
    for i in range(n):
        for j in range(n):
            scale += A[i, j] * A[i, j]
    sweeps = 0
    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += 2.0 * A[i, j] * A[i, j]
        if off <= tol * tol * scale:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = A[k, p]
                    akq = A[k, q]
                    A[k, p] = c * akp - s * akq
                    A[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = A[p, k]
                    aqk = A[q, k]
                    A[p, k] = c * apk - s * aqk
                    A[q, k] = s * apk + c * aqk
                for k in range(n):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * vkq
                    V[k, q] = s * vkp + c * vkq
    w = np.empty(n)
    for i in range(n):
        w[i] = A[i, i]
    return w, V, sweeps


def jacobi_eigh_numpy(a, tol, max_sweeps):
    A = np.array(a, dtype=float, copy=True)
    n = A.shape[0]
    V = np.eye(n)
    scale = float(np.sum(A * A))
    iu = np.triu_indices(n, 1)
    sweeps = 0
    for _ in range(max_sweeps):
        if 2.0 * float(np.sum(A[iu] ** 2)) <= tol * tol * scale:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0)), theta)
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    return np.diag(A).copy(), V, sweeps


# ---------------------------------------------------------------------------
# forward shooting for tridiagonal (M - z) v = 0 with rescaling


@njit(cache=True)
def shoot_tridiagonal_numba(lower, diag, upper, shift, n):
    # row r: lower[r] v[r-1] + (diag[r] - shift) v[r] + upper[r] v[r+1] = 0
    # the true solution is v * exp(log_scale); rescaling keeps v finite
    v = np.zeros(n + 1, dtype=np.complex128)
    v[0] = 1.0
    log_scale = 0.0
    for r in range(n):
        prev = v[r - 1] if r > 0 else 0.0
        v[r + 1] = -((diag[r] - shift) * v[r] + lower[r] * prev) / upper[r]
        if abs(v[r + 1]) > 1e100:
            for j in range(r + 2):
                v[j] = v[j] * 1e-100
            log_scale += 100.0 * math.log(10.0)
    return v, log_scale


def shoot_tridiagonal_numpy(lower, diag, upper, shift, n):
    v = np.zeros(n + 1, dtype=complex)
    v[0] = 1.0
    log_scale = 0.0
    for r in range(n):
        prev = v[r - 1] if r > 0 else 0.0
        v[r + 1] = -((diag[r] - shift) * v[r] + lower[r] * prev) / upper[r]
        if abs(v[r + 1]) > 1e100:
            v[: r + 2] *= 1e-100
            log_scale += 100.0 * math.log(10.0)
    return v, log_scale


# ---------------------------------------------------------------------------
# Chebyshev expansion of a matrix function applied to a vector


@njit(cache=True)
def chebyshev_apply_numba(indptr, indices, data, coeffs, v, half_width, center):
    # A is mapped to y = (A - center) / half_width with spectrum in [-1, 1]
    n = v.shape[0]

    def mapped(x):
        out = np.zeros(n)
        for i in range(n):
            acc = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                acc += data[k] * x[indices[k]]
            out[i] = (acc - center * x[i]) / half_width
        return out

    t_prev = v.copy()
    result = coeffs[0] * 0.5 * t_prev
    if coeffs.shape[0] == 1:
        return result
    t_cur = mapped(v)
    result += coeffs[1] * t_cur
    for k in range(2, coeffs.shape[0]):
        t_next = 2.0 * mapped(t_cur) - t_prev
        result += coeffs[k] * t_next
        t_prev = t_cur
        t_cur = t_next
    return result


def chebyshev_apply_numpy(indptr, indices, data, coeffs, v, half_width, center):
    def mapped(x):
        return (csr_matvec_numpy(indptr, indices, data, x) - center * x) / half_width

    t_prev = np.array(v, dtype=float)
    result = coeffs[0] * 0.5 * t_prev
    if len(coeffs) == 1:
        return result
    t_cur = mapped(t_prev)
    result = result + coeffs[1] * t_cur
    for k in range(2, len(coeffs)):
        t_next = 2.0 * mapped(t_cur) - t_prev
        result = result + coeffs[k] * t_next
        t_prev, t_cur = t_cur, t_next
    return result


# ---------------------------------------------------------------------------
# dispatch

if JIT_ENABLED:
    csr_matvec = csr_matvec_numba
    projected_cg = projected_cg_numba
    jacobi_eigh = jacobi_eigh_numba
    shoot_tridiagonal = shoot_tridiagonal_numba
    chebyshev_apply = chebyshev_apply_numba
else:
    csr_matvec = csr_matvec_numpy
    projected_cg = projected_cg_numpy
    jacobi_eigh = jacobi_eigh_numpy
    shoot_tridiagonal = shoot_tridiagonal_numpy
    chebyshev_apply = chebyshev_apply_numpy


def backend() -> str:
    return "numba" if JIT_ENABLED else "numpy"
