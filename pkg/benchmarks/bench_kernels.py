"""Time the numba kernels against their NumPy counterparts.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--quick]

Each kernel runs once untimed (so numba compilation is excluded), then the
best of ``--repeat`` runs is reported together with the largest difference
between the two outputs, relative to the largest output entry.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from lapnet import _kernels
from lapnet.graph import Window, build_chain, build_lattice
from lapnet.operator import assemble_matrix


def best_of(fn, repeat: int) -> tuple[float, object]:
    out = fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _first(x):
    return x[0] if isinstance(x, tuple) else x


def cases(quick: bool):
    n_lat = 32 if quick else 96
    lat = assemble_matrix(build_lattice(2, n_lat))
    rng = np.random.default_rng(0)
    x = rng.standard_normal(lat.shape[0])
    data = lat.data.astype(float)
    yield "csr_matvec", (lat.indptr, lat.indices, data, x)

    b = np.zeros(lat.shape[0])
    b[0], b[1] = 1.0, -1.0
    yield "projected_cg", (lat.indptr, lat.indices, data, lat.diagonal().astype(float), b, 1e-10, 20 * lat.shape[0])

    n_eig = 40 if quick else 120
    a = rng.standard_normal((n_eig, n_eig))
    yield "jacobi_eigh", ((a + a.T) / 2, 1e-14, 50)

    n_shoot = 2000 if quick else 20000
    r = np.arange(n_shoot, dtype=float)
    lower = -r.astype(complex)
    upper = -(r + 1).astype(complex)
    diag = (2 * r + 1).astype(complex)
    yield "shoot_tridiagonal", (lower, diag, upper, -1.0 + 0j, n_shoot)

    chain = assemble_matrix(build_chain("linear"), Window.interval(0, 2000 if quick else 20000), "compressed")
    v = rng.standard_normal(chain.shape[0])
    lmax = float(2 * np.max(np.abs(chain.diagonal())))
    t = 0.05
    half = 0.5 * lmax
    theta = np.pi * (np.arange(256) + 0.5) / 256
    coeffs = (2.0 / 256) * (np.cos(np.outer(np.arange(256), theta)) @ np.exp(-t * half * (np.cos(theta) + 1)))
    coeffs = coeffs[np.abs(coeffs) > 1e-14]
    yield "chebyshev_apply", (chain.indptr, chain.indices, chain.data.astype(float), coeffs, v, half, half)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--quick", action="store_true", help="small problem sizes")
    args = ap.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        print("numba is not importable; only the NumPy path exists")
        return 1
    print(f"{'kernel':<20}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}{'rel. diff':>14}")
    for name, arguments in cases(args.quick):
        fast = getattr(_kernels, f"{name}_numba")
        slow = getattr(_kernels, f"{name}_numpy")
        t_fast, out_fast = best_of(lambda: fast(*arguments), args.repeat)
        t_slow, out_slow = best_of(lambda: slow(*arguments), args.repeat)
        a, b = np.asarray(_first(out_fast)), np.asarray(_first(out_slow))
        diff = float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))
        print(f"{name:<20}{1e3 * t_fast:>12.3f}{1e3 * t_slow:>12.3f}{t_slow / t_fast:>10.1f}{diff:>14.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
