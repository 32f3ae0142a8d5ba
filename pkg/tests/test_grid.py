import numpy as np
import pytest

from vhcm.grid import Grid, Material, horizon_nodes, make_grid, variable_horizon


def test_standard_grid_geometry():
    g = make_grid(1.0, 256, 8)
    assert g.h == 1 / 256
    assert g.delta == 1 / 32
    assert g.node_count == 257
    assert g.x[0] == 0.0 and g.x[-1] == 1.0


def test_nodes_are_exact_multiples_of_h():
    g = make_grid(1.0, 256, 8)
    k = np.arange(257)
    assert np.array_equal(g.x, k * g.h)
    assert g.node(100) == 100 * g.h


def test_snap_nearest_and_outside():
    g = make_grid(1.0, 256, 8)
    assert g.snap(0.71) == 182
    assert g.snap(0.5) == 128
    assert g.snap(1.0) == 256
    with pytest.raises(ValueError):
        g.snap(1.01)
    with pytest.raises(ValueError):
        g.snap(-0.01)


@pytest.mark.parametrize("args", [(0.0, 256, 8), (1.0, 0, 8), (1.0, 256, 0), (1.0, 33, 8)])
def test_make_grid_rejects(args):
    with pytest.raises(ValueError):
        make_grid(*args)


def test_smallest_grid_accepted():
    assert make_grid(1.0, 34, 8).n == 34


def test_kappa_matches_local_stiffness():
    mat = Material()
    assert mat.kappa(1 / 32) == pytest.approx(2048.0)
    assert Material(2.0, 3.0).EA == 6.0
    with pytest.raises(ValueError):
        Material(0.0, 1.0)


def test_variable_horizon_shrinks_to_interfaces():
    g = make_grid(1.0, 256, 8)
    a, b = 0.25, 0.75
    assert variable_horizon(g, a, b, 0.5) == g.delta
    assert variable_horizon(g, a, b, a + 2 * g.h) == 2 * g.h
    assert variable_horizon(g, a, b, b - g.h) == g.h
    with pytest.raises(ValueError):
        variable_horizon(g, a, b, a)


def test_horizon_nodes_is_min_distance():
    ks = np.arange(11, 40)
    got = [horizon_nodes(8, 10, 40, int(k)) for k in ks]
    assert got == [min(k - 10, 8, 40 - k) for k in ks]


def test_grid_is_frozen():
    g = Grid(1.0, 256, 8)
    with pytest.raises(Exception):
        g.n = 10
