import math
from dataclasses import replace

import numpy as np
import pytest

from lapnet.graph import Window, build_chain, build_cyclic, build_lattice, from_edges, integer_line
from lapnet.operator import VertexField, apply_laplacian, energy
from lapnet.potential import (
    ConvergenceError,
    CurrentFunction,
    NoSolutionError,
    ResistanceMetric,
    currents_from_potential,
    dissipation,
    path_resistance_bound,
    potential_from_currents,
    reference_dipole,
    resistance_distance,
    solve_dipole,
    verify_kirchhoff,
)


def cyclic_closed_form(n):
    return np.array([0.0] + [-(n - j) / n for j in range(1, n)])


class TestSolveDipole:
    @pytest.mark.parametrize("n", [3, 4, 5, 9, 16])
    @pytest.mark.parametrize("solver", ["cg", "dft", "direct", "closed-form"])
    def test_cyclic(self, n, solver):
        sol = solve_dipole(build_cyclic(n), None, 0, 1, solver)
        np.testing.assert_allclose(sol.field.values, cyclic_closed_form(n), atol=1e-12)
        assert sol.energy == pytest.approx(2 * (n - 1) / n, rel=1e-12)

    def test_integer_line_shape(self):
        w = Window.interval(-50, 50)
        sol = solve_dipole(integer_line(), w, 0, 3)
        want = np.array([0.0 if n <= 0 else -min(n, 3) for n in range(-50, 51)])
        np.testing.assert_allclose(sol.field.values, want, atol=1e-10)
        assert sol.residual_norm <= 1e-9 * math.sqrt(len(w))

    def test_reversed_dipole(self):
        w = Window.interval(-10, 10)
        a = solve_dipole(integer_line(), w, 3, 0)
        b = solve_dipole(integer_line(), w, 3, 0, "closed-form")
        np.testing.assert_allclose(a.field.values, b.field.values, atol=1e-10)

    def test_lattice_cg_matches_dft(self):
        g = build_lattice(2, 16)
        a = solve_dipole(g, None, (0, 0), (0, 1))
        b = solve_dipole(g, None, (0, 0), (0, 1), "dft")
        assert np.max(np.abs(a.field.values - b.field.values)) < 1e-8

    def test_grounding_and_mean_zero(self):
        g = build_cyclic(6)
        sol = solve_dipole(g, None, 2, 4)
        assert sol.field[2] == 0.0 and sol.grounding == 2
        mz = solve_dipole(g, None, 2, 4, mean_zero=True)
        assert abs(mz.field.values.mean()) < 1e-14 and mz.grounding is None
        np.testing.assert_allclose(mz.field.values - mz.field[2], sol.field.values, atol=1e-12)

    def test_energy_identity(self, family):
        _, g, w = family
        a, b = w.vertices[0], w.vertices[len(w) // 2]
        sol = solve_dipole(g, w, a, b)
        assert sol.energy == pytest.approx(2 * sol.voltage_drop, rel=1e-8)
        rhs = VertexField.delta(w, a) - VertexField.delta(w, b)
        res = apply_laplacian(g, sol.field).values - rhs.values
        assert np.linalg.norm(res) <= max(sol.residual_norm, 1e-9 * math.sqrt(len(w)))

    def test_disconnected(self):
        g = from_edges([(0, 1, 1), (1, 2, 1), (0, 2, 1), (3, 4, 1), (4, 5, 1), (3, 5, 1)])
        with pytest.raises(NoSolutionError):
            solve_dipole(g, None, 0, 4)

    def test_convergence_error_carries_residual(self):
        with pytest.raises(ConvergenceError) as err:
            solve_dipole(integer_line(), Window.interval(-30, 30), -20, 20, maxiter=2)
        assert err.value.residual > 1e-10

    def test_bad_arguments(self):
        g = build_cyclic(5)
        with pytest.raises(ValueError):
            solve_dipole(g, None, 1, 1)
        with pytest.raises(ValueError):
            solve_dipole(g, None, 0, 1, "magic")
        with pytest.raises(ValueError):
            solve_dipole(integer_line(), Window.interval(-3, 3), 0, 1, "dft")
        with pytest.raises(ValueError):
            solve_dipole(g, None, 0, 2, "closed-form")


class TestReferenceDipole:
    def test_integer_line_values(self):
        sol = reference_dipole("integer-line", 3)
        assert (sol.field[1], sol.field[2], sol.field[5]) == (-1.0, -2.0, -3.0)
        assert sol.solver == "closed-form"

    def test_cyclic_values(self):
        sol = reference_dipole("cyclic", 5)
        assert sol.field[1] == pytest.approx(-4 / 5) and sol.field[4] == pytest.approx(-1 / 5)

    @pytest.mark.parametrize("model,param", [("integer-line", 4), ("cyclic", 7)])
    def test_round_trip(self, model, param):
        sol = reference_dipole(model, param)
        g = integer_line() if model == "integer-line" else build_cyclic(param)
        w = sol.field.window
        want = VertexField.delta(w, sol.alpha) - VertexField.delta(w, sol.beta)
        np.testing.assert_allclose(apply_laplacian(g, sol.field).values, want.values, atol=1e-13)

    def test_rejects(self):
        with pytest.raises(ValueError):
            reference_dipole("integer-line", 0)
        with pytest.raises(ValueError):
            reference_dipole("cyclic", 2)
        with pytest.raises(ValueError):
            reference_dipole("tree", 3)


class TestResistance:
    def test_zero_on_diagonal(self):
        assert resistance_distance(build_cyclic(5), None, 2, 2) == 0.0

    def test_cyclic4(self):
        assert resistance_distance(build_cyclic(4), None, 0, 1) == pytest.approx(math.sqrt(1.5), abs=1e-12)

    @pytest.mark.parametrize("m,n", [(0, 1), (2, 7), (5, 30)])
    def test_square_chain_series(self, m, n):
        d = resistance_distance(build_chain("square"), Window.interval(0, 60), m, n)
        want = math.sqrt(2 * sum(1 / k**2 for k in range(m + 1, n + 1)))
        assert d == pytest.approx(want, rel=1e-9)
        assert d < math.sqrt(2) * math.pi / math.sqrt(6)

    def test_base_vertex_does_not_matter(self):
        g = build_lattice(2, 5)
        a = ResistanceMetric(g)((1, 2), (3, 4))
        b = ResistanceMetric(g, base=(4, 4))((1, 2), (3, 4))
        assert a == pytest.approx(b, rel=1e-10)

    def test_metric_matches_dipole_energy(self):
        g = build_cyclic(11)
        d = resistance_distance(g, None, 2, 7)
        assert d**2 == pytest.approx(solve_dipole(g, None, 2, 7).energy, rel=1e-10)

    def test_unknown_base(self):
        with pytest.raises(KeyError):
            ResistanceMetric(build_cyclic(5), base=9)


class TestPathBound:
    @pytest.mark.parametrize("k", [1, 2, 5])
    def test_integer_line_equality(self, k):
        assert path_resistance_bound(integer_line(), 0, k) == 2 * k

    def test_cyclic4(self):
        assert path_resistance_bound(build_cyclic(4), 0, 1) == 2.0

    def test_single_edge(self):
        assert path_resistance_bound(from_edges([(0, 1, 5.0)]), 0, 1) == pytest.approx(0.4)

    def test_unreachable(self):
        g = from_edges([(0, 1, 1.0), (2, 3, 1.0)])
        with pytest.raises(NoSolutionError):
            path_resistance_bound(g, 0, 3)

    def test_bound_dominates_energy(self, family):
        _, g, w = family
        a, b = w.vertices[1], w.vertices[-2]
        assert solve_dipole(g, w, a, b).energy <= path_resistance_bound(g, a, b) * (1 + 1e-10)


class TestCurrents:
    def test_integer_line_k2(self):
        g = integer_line()
        I = currents_from_potential(g, reference_dipole("integer-line", 2, Window.interval(-4, 6)))
        assert {e: v for e, v in I.values.items() if v != 0} == {(0, 1): 1.0, (1, 2): 1.0}
        assert dissipation(g, I) == 2.0

    def test_constant_field(self):
        g = build_cyclic(5)
        sol = solve_dipole(g, None, 0, 1)
        flat = replace(sol, field=VertexField.constant(sol.field.window, 4.0))
        assert all(v == 0 for v in currents_from_potential(g, flat).values.values())

    def test_cyclic_orientation(self):
        n = 6
        g = build_cyclic(n)
        I = currents_from_potential(g, solve_dipole(g, None, 0, 1))
        assert I.flow(0, 1) == pytest.approx((n - 1) / n)
        for x in range(1, n):
            assert I.flow((x + 1) % n, x) == pytest.approx(1 / n)

    def test_antisymmetry(self):
        I = CurrentFunction(Window.interval(0, 2), {(0, 1): 0.5})
        assert I.flow(1, 0) == -0.5 and I.flow(1, 2) == 0.0

    def test_cyclic4_dissipation(self):
        g = build_cyclic(4)
        sol = solve_dipole(g, None, 0, 1)
        I = currents_from_potential(g, sol)
        assert dissipation(g, I) == pytest.approx(0.75)
        assert sol.energy == pytest.approx(2 * dissipation(g, I))

    def test_zero_current(self):
        assert dissipation(build_cyclic(4), CurrentFunction(Window.interval(0, 3), {})) == 0.0


class TestKirchhoff:
    def test_cyclic5_solution(self):
        g = build_cyclic(5)
        rep = verify_kirchhoff(g, currents_from_potential(g, solve_dipole(g, None, 0, 1)), 0, 1)
        assert rep.node_law_max_violation <= 1e-10 and rep.loop_law_max_violation <= 1e-10
        assert rep.loops_checked == 1

    def test_zero_current_violates_node_law(self):
        rep = verify_kirchhoff(build_cyclic(4), CurrentFunction(Window.interval(0, 3), {}), 0, 2)
        assert rep.node_law_max_violation == 1.0 and rep.loop_law_max_violation == 0.0

    def test_circulating_current(self):
        g = build_cyclic(4)
        I = CurrentFunction(Window.interval(0, 3), {(0, 1): 1.0, (1, 2): 1.0, (2, 3): 1.0, (0, 3): -1.0})
        rep = verify_kirchhoff(g, I)
        assert rep.node_law_max_violation == 0.0
        assert rep.loop_law_max_violation == 4.0

    def test_lattice_loop_count(self):
        g = build_lattice(2, 4)
        rep = verify_kirchhoff(g, currents_from_potential(g, solve_dipole(g, None, (0, 0), (2, 3))), (0, 0), (2, 3))
        assert rep.loops_checked == 32 - 16 + 1
        assert rep.passes(1e-9)

    def test_round_trip_to_potential(self, family):
        _, g, w = family
        sol = solve_dipole(g, w, w.vertices[0], w.vertices[-1])
        back = potential_from_currents(g, currents_from_potential(g, sol))
        diff = back.values - sol.field.values
        assert np.ptp(diff) < 1e-9
