import numpy as np
import pytest

from weakslip import mesh as meshmod
from weakslip.errors import GeometryError, InvalidArgumentError
from weakslip.mesh import (facet_geometry, facet_lengths, generate_ellipse_mesh,
                           generate_rect_mesh, refine_uniform, write_vtk)


def test_rect_mesh_counts():
    m = generate_rect_mesh(32, 32)
    assert len(m.cells) == 2048
    assert len(m.vertices) == 33 * 33
    assert np.all(m.areas() > 0)
    assert m.areas().sum() == pytest.approx(1.0)


def test_rect_mesh_euler_formula():
    m = generate_rect_mesh(5, 7)
    v, e, c = len(m.vertices), len(m.edges), len(m.cells)
    assert v - e + c == 1


def test_rect_markers_and_counts():
    m = generate_rect_mesh(4, 6, lx=2.0, ly=3.0, origin=(-1.0, 0.5))
    mids = m.facet_midpoints()
    for name, count in [("left", 6), ("right", 6), ("bottom", 4), ("top", 4)]:
        sel = m.facet_marker == m.marker_ids[name]
        assert sel.sum() == count
    left = m.facet_marker == m.marker_ids["left"]
    assert np.allclose(mids[left, 0], -1.0)


def test_outward_normals_unit_square():
    m = generate_rect_mesh(3, 3)
    t = np.array([0.25, 0.5, 0.75])
    expected = {"left": (-1, 0), "right": (1, 0),
                "bottom": (0, -1), "top": (0, 1)}
    for name, n_exact in expected.items():
        cells, locs = m.facets_with_marker(name)
        _, normal, measure = facet_geometry(m, cells, locs, t)
        assert np.allclose(normal, np.array(n_exact), atol=1e-12)
        assert np.allclose(np.linalg.norm(normal, axis=2), 1.0)
        assert np.allclose(measure, 1.0 / 3.0)


def test_facet_lengths_match_edge_lengths():
    m = generate_rect_mesh(2, 2)
    h = facet_lengths(m, m.facet_cell, m.facet_local)
    assert np.allclose(h, 0.5)


def test_orientation_fixup():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    m = meshmod.Mesh(verts, np.array([[0, 2, 1]]))  # clockwise on purpose
    assert m.areas()[0] == pytest.approx(0.5)


def test_degenerate_cell_raises():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(GeometryError):
        meshmod.Mesh(verts, np.array([[0, 1, 2]]))


def test_bad_index_raises():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(InvalidArgumentError):
        meshmod.Mesh(verts, np.array([[0, 1, 7]]))


def test_refine_uniform_preserves_area_and_markers():
    m = generate_rect_mesh(3, 2, lx=1.5)
    f = refine_uniform(m)
    assert len(f.cells) == 4 * len(m.cells)
    assert f.areas().sum() == pytest.approx(m.areas().sum())
    for name in m.marker_ids:
        n0 = (m.facet_marker == m.marker_ids[name]).sum()
        n1 = (f.facet_marker == f.marker_ids[name]).sum()
        assert n1 == 2 * n0
    assert not np.any(f.facet_marker == 0)


def test_refine_keeps_region_markers():
    m = generate_rect_mesh(2, 2)
    m.region_markers[:] = np.arange(len(m.cells))
    f = refine_uniform(m)
    assert np.array_equal(f.region_markers, np.repeat(m.region_markers, 4))


def test_ellipse_area_quadratic_boundary():
    m = generate_ellipse_mesh(16, 0.0, degree=2)
    # Straight-cell area underestimates the disc; the quadratic boundary
    # is accounted for in assembly, but even the chordal area is close.
    assert m.areas().sum() == pytest.approx(np.pi, rel=5e-3)
    r = np.linalg.norm(m.vertices[m.edges[m.facet_edge]], axis=2)
    assert np.allclose(r, 1.0, atol=1e-12)


def test_ellipse_boundary_nodes_on_curve():
    eps = 0.1
    m = generate_ellipse_mesh(8, eps, degree=2)
    bdry = m.cell_edges[m.facet_cell, m.facet_local]
    p = m.edge_nodes[bdry]
    assert np.allclose(p[:, 0] ** 2 + (p[:, 1] / (1 + eps)) ** 2, 1.0,
                       atol=1e-12)
    f = refine_uniform(m)
    bdry = f.cell_edges[f.facet_cell, f.facet_local]
    p = f.edge_nodes[bdry]
    assert np.allclose(p[:, 0] ** 2 + (p[:, 1] / (1 + eps)) ** 2, 1.0,
                       atol=1e-12)


def test_ellipse_facet_normals_point_outward():
    m = generate_ellipse_mesh(6, 0.0, degree=2)
    t = np.array([0.5])
    x, n, _ = facet_geometry(m, m.facet_cell, m.facet_local, t)
    # Outward normal of the unit disc at x is x/|x|.
    xhat = x[:, 0] / np.linalg.norm(x[:, 0], axis=1)[:, None]
    assert np.all(np.sum(n[:, 0] * xhat, axis=1) > 0.95)


def test_interior_facets_roundtrip():
    m = generate_rect_mesh(2, 2)
    m.marker_ids["iface"] = 9
    m.set_interior_facets([0, 1], [0, 1], [9, 9])
    cells, locs = m.interior_facets_with_marker("iface")
    assert np.array_equal(cells, [0, 1])
    assert np.array_equal(locs, [0, 1])


def test_write_vtk(tmp_path):
    m = generate_rect_mesh(2, 2)
    path = tmp_path / "out.vtk"
    write_vtk(path, m, point_data={"T": np.zeros(len(m.vertices)),
                                   "u": np.ones((len(m.vertices), 2))},
              cell_data={"region": m.region_markers.astype(float)})
    text = path.read_text()
    assert "UNSTRUCTURED_GRID" in text
    assert "POINT_DATA 9" in text
    assert "VECTORS u double" in text
