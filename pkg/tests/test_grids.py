import numpy as np
import pytest

from lmalab import Grid, unit_box_grid
from lmalab.errors import LabError


def test_unit_box_shape_and_spacing():
    g = unit_box_grid(2, 17)
    assert g.node_shape == (17, 17)
    assert g.cell_shape == (16, 16)
    assert g.spacing == pytest.approx(2.0 / 16)
    assert g.n_nodes == 17 * 17
    assert g.cell_volume == pytest.approx(g.spacing**2)


def test_nodes_and_cell_centers_offset():
    g = unit_box_grid(2, 9)
    nodes = g.nodes
    centers = g.cell_centers
    assert nodes.shape == (9, 9, 2)
    assert centers.shape == (8, 8, 2)
    # cell centers sit half a spacing inside the node lattice
    assert centers[0, 0] == pytest.approx(nodes[0, 0] + g.spacing / 2)
    assert nodes[0, 0] == pytest.approx([-1.0, -1.0])
    assert nodes[-1, -1] == pytest.approx([1.0, 1.0])


def test_nearest_node_roundtrip():
    g = unit_box_grid(3, 17)
    idx = g.nearest_node(np.array([0.1, -0.2, 0.3]))
    p = g.node_point(idx)
    assert np.all(np.abs(p - np.array([0.1, -0.2, 0.3])) <= g.spacing / 2 + 1e-12)
    # exact node snaps to itself
    idx0 = g.nearest_node(p)
    assert tuple(idx0) == tuple(idx)


def test_refine_doubles():
    g = unit_box_grid(2, 9)
    f = g.refine()
    assert f.npts == 17
    assert f.spacing == pytest.approx(g.spacing / 2)
    # refined node lattice contains the coarse one
    assert np.allclose(f.nodes[::2, ::2], g.nodes)


def test_off_center_box():
    g = unit_box_grid(2, 33, halfwidth=0.5, center=(0.5, 0.5))
    assert g.nodes[0, 0] == pytest.approx([0.0, 0.0])
    assert g.nodes[-1, -1] == pytest.approx([1.0, 1.0])


def test_degenerate_grid_rejected():
    with pytest.raises((LabError, ValueError)):
        Grid((0.0, 0.0), (1.0, 1.0), 1)
