"""The twelve acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are repeated in the
terminal summary under "acceptance criteria".
"""

import math
import subprocess
import sys
from pathlib import Path

import numpy as np

from conftest import families, record_criterion
from lapnet.graph import Window, build_chain, build_cyclic, build_lattice, integer_line
from lapnet.heisenberg import (
    HalfLineBandedOperator,
    build_hamiltonian,
    build_P,
    build_Q,
    build_QPQ,
    commutator,
    deficiency_probe_banded,
)
from lapnet.operator import VertexField, apply_laplacian, assemble_matrix, energy, row_sum_check
from lapnet.potential import (
    ResistanceMetric,
    currents_from_potential,
    dissipation,
    path_resistance_bound,
    resistance_distance,
    solve_dipole,
    verify_kirchhoff,
)
from lapnet.semigroup import heat_apply, truncation_error_check
from lapnet.spectral import cyclic_spectrum, defect_probe, hs_membership_line, hs_norm, truncated_spectrum

ROOT = Path(__file__).resolve().parents[1]


def check(number, title, failures, detail):
    ok = not failures
    record_criterion(number, title, ok, detail if ok else "; ".join(failures[:5]))
    assert ok, failures


def _window(g, w):
    return w if w is not None else g.default_window()


def test_01_cyclic_spectra():
    failures, worst = [], 0.0
    for n in range(3, 65):
        got = np.sort(truncated_spectrum(assemble_matrix(build_cyclic(n))).eigenvalues)
        want = np.sort(4 * np.sin(np.pi * np.arange(n) / n) ** 2)
        err = float(np.max(np.abs(got - want)))
        worst = max(worst, err)
        if err > 1e-9:
            failures.append(f"N={n} err={err:.2e}")
    for n, listed in ((3, [0, 3, 3]), (4, [0, 2, 2, 4]), (6, [0, 1, 1, 3, 3, 4])):
        if sorted(cyclic_spectrum(n).tolist()) != listed:
            failures.append(f"N={n} list {sorted(cyclic_spectrum(n).tolist())}")
    check(1, "cyclic spectra", failures, f"max err {worst:.1e}, lists exact")


def test_02_line_dipole():
    failures = []
    g, w = integer_line(), Window.interval(-50, 50)
    for k in (1, 2, 3, 5):
        sol = solve_dipole(g, w, 0, k)
        want = np.array([-min(max(n, 0), k) for n in range(-50, 51)], dtype=float)
        diff = sol.field.values - want
        err = float(np.max(np.abs(diff - diff.mean())))
        if err > 1e-9:
            failures.append(f"k={k} shape err {err:.2e}")
        if abs(sol.energy - 2 * k) > 1e-9:
            failures.append(f"k={k} energy {sol.energy!r}")
        bound = path_resistance_bound(g, 0, k)
        if abs(bound - 2 * k) > 1e-12 or abs(bound - sol.energy) > 1e-9:
            failures.append(f"k={k} path bound {bound!r}")
    check(2, "integer-line dipole closed form", failures, "k in {1,2,3,5}, energy = path bound = 2k")


def test_03_cyclic_potential():
    failures = []
    for n in range(3, 33):
        g = build_cyclic(n)
        sol = solve_dipole(g, None, 0, 1)
        want = np.array([0.0] + [-(n - j) / n for j in range(1, n)])
        err = float(np.max(np.abs(sol.field.values - want)))
        if err > 1e-10:
            failures.append(f"N={n} err {err:.2e}")
        d = resistance_distance(g, None, 0, 1)
        if abs(d - math.sqrt(2 * (n - 1) / n)) > 1e-9:
            failures.append(f"N={n} dist {d!r}")
    check(3, "cyclic voltage potential", failures, "N = 3..32")


def test_04_operator_identities():
    rng = np.random.default_rng(2024)
    fams = families()
    failures = []
    worst_sym = worst_en = worst_row = 0.0
    for trial in range(200):
        _, g, w = fams[trial % len(fams)]
        w = _window(g, w)
        inside = np.array([x not in {a for a, _, _ in g.crossing_edges(w)} for x in w.vertices])
        u = VertexField(w, np.where(inside, rng.standard_normal(len(w)), 0.0))
        v = VertexField(w, np.where(inside, rng.standard_normal(len(w)), 0.0))
        lu, lv = apply_laplacian(g, u), apply_laplacian(g, v)
        a, b = u.inner(lv), lu.inner(v)
        sym = abs(a - b) / max(abs(a), abs(b), 1e-300)
        e = energy(g, u)
        en = abs(2 * u.inner(lu).real - e) / max(e, 1e-300)
        worst_sym, worst_en = max(worst_sym, sym), max(worst_en, en)
        if sym > 1e-10 or en > 1e-10:
            failures.append(f"trial {trial}: sym {sym:.1e} energy {en:.1e}")
    for name, g, w in fams:
        r = row_sum_check(g, _window(g, w))
        worst_row = max(worst_row, r)
        if r > 1e-12:
            failures.append(f"{name} row sum {r:.1e}")
    check(4, "operator identities", failures, f"sym {worst_sym:.1e}, energy {worst_en:.1e}, rows {worst_row:.1e}")


def test_05_resistance_axioms():
    rng = np.random.default_rng(7)
    failures = []
    worst_cf = 0.0
    for name, g, w in families():
        w = _window(g, w)
        metric = ResistanceMetric(g, w)
        vs = w.vertices
        for _ in range(100):
            x, y, z = (vs[i] for i in rng.integers(0, len(vs), 3))
            dxy, dyx, dxz, dyz = metric(x, y), metric(y, x), metric(x, z), metric(y, z)
            if abs(dxy - dyx) > 1e-9:
                failures.append(f"{name} symmetry {x},{y}")
            if (x == y) != (dxy <= 1e-9) or metric(x, x) != 0.0:
                failures.append(f"{name} identity {x},{y}")
            if dxz > dxy + dyz + 1e-9:
                failures.append(f"{name} triangle {x},{y},{z}")
            if x != y:
                worst_cf = max(worst_cf, abs(dxy - metric.closed_form(x, y)) / max(1.0, dxy))
    if worst_cf > 1e-8:
        failures.append(f"closed form gap {worst_cf:.1e}")
    check(5, "resistance metric axioms", failures, f"closed form gap {worst_cf:.1e}")


def test_06_hs_threshold():
    failures = []
    for k in (1, 2, 5):
        for s, member in ((0.20, False), (0.25, False), (0.30, True), (0.50, True), (1.0, True)):
            got = hs_membership_line(k, s)
            if got.member != member:
                failures.append(f"k={k} s={s} verdict {got.verdict}")
    g, w = integer_line(), Window.interval(-200, 200)
    dec = truncated_spectrum(assemble_matrix(g, w))
    worst = 0.0
    for k in (1, 2, 5):
        v = solve_dipole(g, w, 0, k, "closed-form").field
        for s, want in ((1.0, 2.0), (0.5, float(k))):
            rel = abs(hs_norm(dec, v, s) ** 2 - want) / want
            worst = max(worst, rel)
            if rel > 0.01:
                failures.append(f"k={k} s={s} rel {rel:.2e}")
    check(6, "H(s) threshold", failures, f"verdicts as stated, norm identities within {worst:.1e}")


def _dipole_norm(dim, n, solver):
    g = build_lattice(dim, n)
    origin = (0,) * dim
    beta = (0,) * (dim - 1) + (1,)
    return solve_dipole(g, None, origin, beta, solver, mean_zero=True)


def test_07_lattice_dichotomy():
    failures = []
    norms = {}
    for dim in (2, 3):
        norms[dim] = [_dipole_norm(dim, n, "dft").field.norm() for n in (8, 16, 32, 64)]
    growth2 = [b / a - 1 for a, b in zip(norms[2], norms[2][1:])]
    change3 = abs(norms[3][-1] / norms[3][-2] - 1)
    if min(growth2) <= 0.05:
        failures.append(f"D=2 growth {growth2}")
    if change3 >= 0.02:
        failures.append(f"D=3 last change {change3:.3f}")
    worst = 0.0
    for dim in (1, 2, 3):
        for n in (8, 16, 32):
            a = _dipole_norm(dim, n, "cg").field.values
            b = _dipole_norm(dim, n, "dft").field.values
            worst = max(worst, float(np.max(np.abs(a - b))))
    if worst > 1e-8:
        failures.append(f"cg vs dft {worst:.1e}")
    detail = "D=2 growth " + ", ".join(f"{100 * x:.1f}%" for x in growth2) + f"; D=3 last {100 * change3:.2f}%; cg/dft {worst:.1e}"
    check(7, "lattice dichotomy", failures, detail)


def _dipole_cases():
    yield "line", integer_line(), Window.interval(-50, 50), 0, 3
    for n in (3, 8, 17, 32):
        yield f"cyclic{n}", build_cyclic(n), None, 0, 1
    for dim, n in ((2, 8), (2, 16), (3, 8)):
        yield f"lattice{dim}x{n}", build_lattice(dim, n), None, (0,) * dim, (1,) + (0,) * (dim - 1)
    for name, g, w in families():
        w = _window(g, w)
        yield name, g, w, w.vertices[0], w.vertices[-1]


def test_08_kirchhoff():
    failures = []
    worst = 0.0
    for name, g, w, a, b in _dipole_cases():
        sol = solve_dipole(g, w, a, b)
        cur = currents_from_potential(g, sol)
        rep = verify_kirchhoff(g, cur, a, b)
        if not rep.passes(1e-9):
            failures.append(f"{name} node {rep.node_law_max_violation:.1e} loop {rep.loop_law_max_violation:.1e}")
        e = energy(g, sol.field)
        gap = abs(e - 2 * dissipation(g, cur)) / max(1.0, e)
        worst = max(worst, gap)
        if gap > 1e-9:
            failures.append(f"{name} dissipation gap {gap:.1e}")
    check(8, "Kirchhoff laws and dissipation", failures, f"dissipation gap {worst:.1e}")


def test_09_semigroup():
    rng = np.random.default_rng(99)
    failures = []
    for name, g, w in families():
        for boundary in ("induced", "compressed"):
            m = assemble_matrix(g, _window(g, w), boundary)
            v = VertexField(m.window, rng.standard_normal(m.shape[0]))
            if not np.array_equal(heat_apply(m, 0.0, v).values, v.values):
                failures.append(f"{name} S(0) != I")
            for _ in range(3):
                s, t = rng.uniform(0, 2, 2)
                lhs = heat_apply(m, s, heat_apply(m, t, v)).values
                rhs = heat_apply(m, s + t, v)
                if np.max(np.abs(lhs - rhs.values)) > 1e-9 * max(1.0, v.norm()):
                    failures.append(f"{name} semigroup law")
                if rhs.norm() > v.norm() + 1e-9:
                    failures.append(f"{name} contractivity")
    line = integer_line()
    ws = Window.interval(-20, 20)
    for t in (0.25, 0.5, 1.0):
        chk = truncation_error_check(line, ws, Window.interval(-200, 200), t, VertexField.delta(ws, 0))
        if not chk.passed or abs(chk.lambda_pf - 1.0) > 1e-12:
            failures.append(f"line t={t} {chk.as_dict()}")
    wc = Window.interval(0, 30)
    chk = truncation_error_check(build_chain("linear"), wc, Window.interval(0, 300), 0.1, VertexField.delta(wc, 0))
    if not chk.passed or abs(chk.lambda_pf - 31.0) > 1e-9:
        failures.append(f"linear chain {chk.as_dict()}")
    m4 = assemble_matrix(build_cyclic(4))
    for t in (0.1, 0.5, 1.0, 2.0):
        got = heat_apply(m4, t, VertexField.delta(m4.window, 0))[0]
        if abs(got - 0.25 * (1 + 2 * math.exp(-2 * t) + math.exp(-4 * t))) > 1e-12:
            failures.append(f"cyclic4 t={t}")
    check(9, "heat semigroup", failures, "S(0)=I, law, contractivity, truncation bounds, cyclic kernel")


def test_10_defect_probes():
    failures = []
    chains = {
        "constant": build_chain("constant"),
        "linear": build_chain("linear"),
        "square": build_chain("square"),
        "geometric2": build_chain("geometric", lam=2.0),
    }
    for name, g in chains.items():
        rep = defect_probe(HalfLineBandedOperator.from_graph(g), -1.0, 256)
        if rep.status != "ok" or rep.estimated_count != 0:
            failures.append(f"{name} shift -1 -> {rep.status} {rep.estimated_count}")
        if name == "linear":
            first = rep.shooting["first_values"]
            if abs(first[2] - 3.5) > 1e-12:
                failures.append(f"v2 = {first[2]!r}")
            energies = [e for _, e in sorted(rep.shooting["truncated_half_energies"].items(), key=lambda kv: int(kv[0]))]
            if not all(b < a for a, b in zip(energies, energies[1:])):
                failures.append("truncated energies do not diverge")
    models = {name: HalfLineBandedOperator.from_graph(g) for name, g in chains.items()}
    expected = {name: (0, 0) for name in models}
    models["QPQ"], expected["QPQ"] = build_QPQ(), (1, 1)
    models["P^2-Q^4"], expected["P^2-Q^4"] = build_hamiltonian(), (2, 2)
    for n_max in (256, 512):
        for name, op in models.items():
            est = deficiency_probe_banded(op, n_max)
            if est.status != "ok":
                failures.append(f"{name} n_max={n_max} inconclusive")
            elif est.indices != expected[name]:
                failures.append(f"{name} n_max={n_max} -> {est.indices}")
    check(10, "defect probes", failures, "shift -1 all 0, v2 = 7/2; (0,0), (1,1), (2,2) at 256 and 512")


def test_11_banded_algebra():
    failures = []
    n = 64
    p, q = build_P(), build_Q()
    widths = {"P": p.measured_bandwidth(n), "Q": q.measured_bandwidth(n),
              "QPQ": build_QPQ().measured_bandwidth(n), "H": build_hamiltonian().measured_bandwidth(n)}
    if widths["P"] != 1 or widths["Q"] != 1 or widths["QPQ"] > 3 or widths["H"] > 4:
        failures.append(f"bandwidths {widths}")
    a = commutator(p, q).section(n - 1)
    scalar = a[4, 4]
    dev = float(np.max(np.abs(a[4:60, :] - scalar * np.eye(n)[4:60, :])))
    if dev > 1e-12 or abs(abs(scalar) - 0.5) > 1e-12:
        failures.append(f"commutator scalar {scalar} dev {dev:.1e}")
    worst = 0.0
    for op in (p, q, build_QPQ(), build_hamiltonian()):
        sec = op.section(n + 2 * op.bandwidth)
        for y in range(n - op.bandwidth):
            e = np.zeros(y + 1, dtype=complex)
            e[y] = 1.0
            ref = np.linalg.norm(op.apply(e)) ** 2
            worst = max(worst, abs(np.sum(np.abs(sec[:, y]) ** 2) - ref) / max(1.0, ref))
    if worst > 1e-12:
        failures.append(f"Parseval gap {worst:.1e}")
    check(11, "banded algebra", failures, f"widths {widths}, |[P,Q] scalar| {abs(scalar):.3g}, Parseval {worst:.1e}")


def test_12_determinism(tmp_path):
    script = ROOT / "scripts" / "reproduce.py"
    snapshots = []
    for name in ("first", "second"):
        out_dir = tmp_path / name
        subprocess.run([sys.executable, str(script), "--out-dir", str(out_dir)], check=True, capture_output=True)
        snapshots.append({p.relative_to(out_dir): p.read_bytes() for p in out_dir.rglob("*") if p.is_file()})
    failures = []
    if snapshots[0].keys() != snapshots[1].keys():
        failures.append("file sets differ")
    failures += [str(k) for k in snapshots[0] if snapshots[0][k] != snapshots[1].get(k)]
    check(12, "reproduction determinism", failures, f"{len(snapshots[0])} files byte-identical")
