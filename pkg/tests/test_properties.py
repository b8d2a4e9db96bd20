"""Property tests over random fields, random graphs and random times."""

import math

import numpy as np
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import families
from lapnet.graph import from_edges
from lapnet.operator import VertexField, apply_laplacian, assemble_matrix, energy, energy_bilinear, row_sum_check
from lapnet.potential import ResistanceMetric, currents_from_potential, dissipation, solve_dipole, verify_kirchhoff
from lapnet.semigroup import heat_apply

FAMILIES = families()
finite_floats = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def _window(g, w):
    return w if w is not None else g.default_window()


def _interior(g, w):
    boundary = {x for x, _, _ in g.crossing_edges(w)}
    return np.array([x not in boundary for x in w.vertices])


@st.composite
def family_fields(draw, count=1):
    """A family and ``count`` real fields on its window, zero wherever the window is cut."""
    _, g, w = draw(st.sampled_from(FAMILIES))
    w = _window(g, w)
    mask = _interior(g, w)
    fields = []
    for _ in range(count):
        x = draw(arrays(np.float64, len(w), elements=finite_floats))
        fields.append(VertexField(w, np.where(mask, x, 0.0)))
    return g, w, fields


@st.composite
def connected_graphs(draw):
    n = draw(st.integers(3, 9))
    cond = st.floats(0.1, 10.0)
    edges = {(k, k + 1): draw(cond) for k in range(n - 1)}
    for _ in range(draw(st.integers(0, n))):
        a, b = sorted(draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=2, unique=True)))
        edges[(a, b)] = draw(cond)
    return from_edges([(a, b, c) for (a, b), c in edges.items()])


def _rel(a, b):
    return abs(a - b) / max(1.0, abs(a), abs(b))


@given(family_fields(count=2))
def test_symmetry(data):
    g, _, (u, v) = data
    lhs = u.inner(apply_laplacian(g, v))
    rhs = apply_laplacian(g, u).inner(v)
    assert _rel(lhs, rhs) <= 1e-10


@given(family_fields())
def test_energy_identity(data):
    g, _, (u,) = data
    assert _rel(2 * u.inner(apply_laplacian(g, u)).real, energy(g, u)) <= 1e-10


@given(family_fields(count=2))
def test_bilinear_energy(data):
    g, _, (u, v) = data
    assert _rel(energy_bilinear(g, u, v), 2 * u.inner(apply_laplacian(g, v))) <= 1e-10


@given(st.sampled_from(FAMILIES))
def test_row_sums_vanish(fam):
    _, g, w = fam
    assert row_sum_check(g, _window(g, w)) <= 1e-12


@given(connected_graphs(), st.data())
def test_metric_axioms(g, data):
    w = g.full_window()
    metric = ResistanceMetric(g, w)
    x, y, z = (data.draw(st.sampled_from(w.vertices)) for _ in range(3))
    assert metric(x, x) == 0.0
    assert abs(metric(x, y) - metric(y, x)) <= 1e-9
    if x != y:
        assert metric(x, y) > 1e-9
    assert metric(x, z) <= metric(x, y) + metric(y, z) + 1e-9


@given(connected_graphs(), st.data())
def test_kirchhoff_and_dissipation(g, data):
    w = g.full_window()
    a = data.draw(st.sampled_from(w.vertices))
    b = data.draw(st.sampled_from(w.vertices))
    assume(a != b)
    sol = solve_dipole(g, w, a, b)
    cur = currents_from_potential(g, sol)
    assert verify_kirchhoff(g, cur, a, b).passes(1e-9)
    assert _rel(energy(g, sol.field), 2 * dissipation(g, cur)) <= 1e-9


@given(st.sampled_from(FAMILIES), st.floats(0, 2), st.floats(0, 2), st.integers(0, 2**32 - 1))
def test_semigroup_law(fam, s, t, seed):
    _, g, w = fam
    m = assemble_matrix(g, _window(g, w), "compressed")
    v = VertexField(m.window, np.random.default_rng(seed).standard_normal(m.shape[0]))
    a = heat_apply(m, s, heat_apply(m, t, v))
    b = heat_apply(m, s + t, v)
    scale = max(1.0, float(np.max(np.abs(b.values))))
    assert np.max(np.abs(a.values - b.values)) <= 1e-9 * scale


@given(st.sampled_from(FAMILIES), st.sampled_from(["induced", "compressed"]), st.floats(0, 5), st.integers(0, 2**32 - 1))
def test_contractivity(fam, boundary, t, seed):
    _, g, w = fam
    m = assemble_matrix(g, _window(g, w), boundary)
    v = VertexField(m.window, np.random.default_rng(seed).standard_normal(m.shape[0]))
    assert heat_apply(m, t, v).norm() <= v.norm() + 1e-9


@given(connected_graphs())
def test_heat_preserves_mass_on_finite_graphs(g):
    m = assemble_matrix(g)
    v = VertexField.delta(m.window, m.window.vertices[0])
    assert math.isclose(float(np.sum(heat_apply(m, 0.7, v).values)), 1.0, abs_tol=1e-12)
