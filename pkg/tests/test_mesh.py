from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import scan_cell, scan_gamma
from pbe.errors import MeshError, OutOfDomainError
from pbe.mesh import build_mesh, cell_index, gamma_index, project


def test_uniform_unit_mesh():
    m = build_mesh("uniform", 0.0, 4.0, 4)
    np.testing.assert_array_equal(m.edges, [0, 1, 2, 3, 4])
    np.testing.assert_array_equal(m.centers, [0.5, 1.5, 2.5, 3.5])
    assert m.uniform and m.n_cells == 4 and m.h == 1.0 == m.delta_h


def test_experiment_mesh_width():
    m = build_mesh("uniform", 1e-3, 100.0, 30)
    assert m.n_cells == 30
    assert m.h == pytest.approx((100 - 1e-3) / 30, rel=1e-13)
    assert m.uniform


def test_uniform_zero_origin_edges_are_multiples_of_h():
    m = build_mesh("uniform", 0.0, 7.3, 37)
    np.testing.assert_allclose(m.edges, np.arange(38) * (7.3 / 37), rtol=1e-15, atol=0)
    assert m.h == pytest.approx(7.3 / 37, rel=1e-14)


def test_geometric_log_uniform_against_scan():
    m = build_mesh("geometric", 1e-3, 100.0, 16, max_ratio=1e6)
    k = np.arange(17)
    np.testing.assert_allclose(m.edges, 1e-3 * (100 / 1e-3) ** (k / 16), rtol=1e-13)
    widths = [m.edges[i + 1] - m.edges[i] for i in range(16)]
    assert m.h / m.delta_h == pytest.approx(max(widths) / min(widths), rel=1e-12)
    assert not m.uniform


def test_geometric_default_bound_rejects_log_uniform():
    with pytest.raises(MeshError, match="mesh condition"):
        build_mesh("geometric", 1e-3, 100.0, 16)


def test_geometric_ratio_within_bound():
    m = build_mesh("geometric", 0.0, 10.0, 20, ratio=1.05)
    assert m.h / m.delta_h == pytest.approx(1.05**19, rel=1e-10)
    assert m.h / m.delta_h <= m.max_ratio


@pytest.mark.parametrize(
    "args",
    [
        ("uniform", 1.0, 1.0, 4),
        ("uniform", 2.0, 1.0, 4),
        ("uniform", 0.0, 1.0, 1),
        ("uniform", -1.0, 1.0, 4),
        ("geometric", 0.0, 1.0, 4),
        ("hexagonal", 0.0, 1.0, 4),
    ],
)
def test_build_mesh_rejects(args):
    with pytest.raises(MeshError):
        build_mesh(*args)


def test_gamma_uniform_examples():
    m = build_mesh("uniform", 0.0, 5.0, 5)
    assert gamma_index(m, 2, 0) == 2
    for i in range(5):
        assert gamma_index(m, i, i) == 0


def test_gamma_geometric_matches_scan():
    m = build_mesh("geometric", 0.0, 10.0, 8, ratio=1.15)
    assert gamma_index(m, 5, 2) == scan_gamma(m, 5, 2)
    for i in range(8):
        for j in range(i + 1):
            assert gamma_index(m, i, j) == scan_gamma(m, i, j)
            assert m.gamma_table[i, j] == scan_gamma(m, i, j)


def test_gamma_below_x_min_is_signalled():
    # wide first cell above a large x_min: x_{1/2} - x_0 = 0.5 <= x_min
    m = build_mesh("uniform", 1.0, 3.0, 2)
    with pytest.raises(OutOfDomainError):
        gamma_index(m, 0, 0)
    assert m.gamma_table[0, 0] == 0
    with pytest.raises(IndexError):
        gamma_index(m, 0, 1)


def test_project_examples():
    m = build_mesh("uniform", 0.0, 4.0, 4)
    assert project(m, 1.5, "mid") == 1.5
    assert project(m, 2.0, "right") == 2.0
    assert project(m, 2.0, "left") == 1.0
    g = build_mesh("geometric", 0.0, 4.0, 6, ratio=1.2)
    k = scan_cell(g.edges, 0.7)
    assert project(g, 0.7, "mid") == g.centers[k]
    assert project(g, 0.7, "left") == g.edges[k]
    assert project(g, 0.7, "right") == g.edges[k + 1]


@pytest.mark.parametrize("x", [0.0, -0.1, 4.0000001])
def test_project_rejects_outside(x):
    m = build_mesh("uniform", 0.0, 4.0, 4)
    with pytest.raises(OutOfDomainError):
        project(m, x)


def test_project_rejects_unknown_mode():
    with pytest.raises(ValueError):
        project(build_mesh("uniform", 0.0, 4.0, 4), 1.0, "top")


@pytest.mark.parametrize(
    "mesh",
    [
        build_mesh("uniform", 1e-3, 100.0, 30),
        build_mesh("geometric", 0.0, 5.0, 17, ratio=1.07),
        build_mesh("geometric", 1e-3, 100.0, 12, max_ratio=1e6),
    ],
)
def test_project_agrees_with_scan_on_random_points(mesh):
    rng = np.random.default_rng(7)
    pts = rng.uniform(mesh.x_min, mesh.R, 1000)
    pts = pts[pts > mesh.x_min]
    idx = cell_index(mesh, pts)
    expected = np.array([scan_cell(mesh.edges, p) for p in pts])
    np.testing.assert_array_equal(idx, expected)
    np.testing.assert_array_equal(project(mesh, pts, "mid"), mesh.centers[expected])
    np.testing.assert_array_equal(project(mesh, pts, "left"), mesh.edges[expected])
    np.testing.assert_array_equal(project(mesh, pts, "right"), mesh.edges[expected + 1])


def test_mesh_is_read_only():
    m = build_mesh("uniform", 0.0, 1.0, 4)
    with pytest.raises(ValueError):
        m.edges[0] = 1.0


meshes = st.one_of(
    st.builds(
        lambda x0, L, n: build_mesh("uniform", x0, x0 + L, n),
        st.sampled_from([0.0, 1e-3, 0.1]),
        st.floats(0.5, 200.0),
        st.integers(2, 60),
    ),
    st.builds(
        lambda L, n, r: build_mesh("geometric", 0.0, L, n, ratio=r, max_ratio=1e12),
        st.floats(0.5, 200.0),
        st.integers(2, 40),
        st.floats(1.01, 1.5),
    ),
)


@settings(max_examples=60, deadline=None)
@given(meshes)
def test_mesh_invariants(m):
    assert np.all(np.diff(m.edges) > 0)
    assert np.all((m.centers > m.edges[:-1]) & (m.centers < m.edges[1:]))
    assert m.widths.sum() == pytest.approx(m.R - m.x_min, rel=1e-12)
    assert m.h / m.delta_h <= m.max_ratio * (1 + 1e-12)


@settings(max_examples=60, deadline=None)
@given(meshes)
def test_gamma_brackets_the_difference(m):
    for i in range(m.n_cells):
        for j in range(i + 1):
            d = m.edges[i + 1] - m.centers[j]
            if d <= m.x_min:
                continue
            g = gamma_index(m, i, j)
            assert m.edges[g] < d <= m.edges[g + 1]
            if m.uniform and m.x_min < 0.4 * m.h:
                # the shortcut needs x_min < h/2, always true for x_min = 0
                assert g == i - j
