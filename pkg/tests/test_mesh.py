import numpy as np
import pytest

from cohesivefatigue.mesh import (DomainSpec, Mesh, build_mesh, assemble_stiffness,
                                  dirichlet_lift, field_energy, lift_gradient_norm,
                                  _element_stiffness, dump_mesh_csv,
                                  TAG_DIRICHLET_BOTTOM, TAG_DIRICHLET_TOP)


def test_node_and_triangle_counts():
    mesh = build_mesh(DomainSpec(1.0, 1.0, 1, 2))
    assert mesh.n_nodes == 8
    assert mesh.triangles.shape[0] == 4
    assert mesh.n_interface == 2
    mesh = build_mesh(DomainSpec(1.0, 1.0, 4, 2))
    assert mesh.n_nodes == 20
    assert mesh.triangles.shape[0] == 16
    assert mesh.n_interface == 5


def test_bad_specs_rejected():
    with pytest.raises(ValueError):
        DomainSpec(1.0, 1.0, 1, 3)     # crack line must lie on a mesh line
    with pytest.raises(ValueError):
        DomainSpec(1.0, 1.0, 0, 2)
    with pytest.raises(ValueError):
        DomainSpec(0.0, 1.0, 1, 2)
    with pytest.raises(ValueError):
        DomainSpec(1.0, -1.0, 1, 2)


def test_interface_weights_trapezoid():
    mesh = build_mesh(DomainSpec(2.0, 1.0, 4, 2))
    h = 2.0 / 4
    np.testing.assert_allclose(mesh.weights, [h / 2, h, h, h, h / 2])
    assert mesh.weights.sum() == pytest.approx(2.0)


def test_element_stiffness_unit_right_triangle():
    xy = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    expected = 0.5 * np.array([[2.0, -1.0, -1.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])
    np.testing.assert_allclose(_element_stiffness(xy), expected, atol=1e-15)


def test_degenerate_triangle_rejected():
    xy = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(ValueError):
        _element_stiffness(xy)


@pytest.mark.parametrize("nx,ny", [(1, 2), (3, 4), (5, 6)])
def test_row_sums_zero(nx, ny):
    mesh = build_mesh(DomainSpec(1.0, 1.0, nx, ny))
    K = assemble_stiffness(mesh).K
    assert np.max(np.abs(np.asarray(K.sum(axis=1)))) < 1e-14


@pytest.mark.parametrize("lx,ly,nx,ny", [(1.0, 1.0, 1, 2), (1.0, 1.0, 4, 6), (2.0, 0.5, 3, 4)])
def test_energy_of_linear_profile_exact(lx, ly, nx, ny):
    # continuous field y/ly has |grad| = 1/ly, so the energy is lx/(2 ly)
    mesh = build_mesh(DomainSpec(lx, ly, nx, ny))
    system = assemble_stiffness(mesh)
    u = dirichlet_lift(mesh, 1.0)
    assert field_energy(system, u) == pytest.approx(lx / (2.0 * ly), rel=1e-13)
    assert lift_gradient_norm(mesh.spec) == pytest.approx(np.sqrt(lx / ly))


def test_no_triangle_straddles_interface():
    mesh = build_mesh(DomainSpec(1.0, 1.0, 3, 4))
    mid = 0.5
    for tri in mesh.triangles:
        ys = mesh.coords[tri, 1]
        assert not (ys.min() < mid and ys.max() > mid)


def test_upper_triangles_reference_upper_copies():
    spec = DomainSpec(1.0, 1.0, 3, 4)
    mesh = build_mesh(spec)
    n_grid = (spec.nx + 1) * (spec.ny + 1)
    mid = 0.5
    uppers = set(mesh.pairs[:, 0].tolist())
    lowers = set(mesh.pairs[:, 1].tolist())
    for tri in mesh.triangles:
        ys = mesh.coords[tri, 1]
        above = ys.max() > mid
        for n, y in zip(tri, ys):
            if y == mid:
                assert (n in uppers) == above
                assert (n in lowers) == (not above)
    assert all(u >= n_grid for u in uppers)


def test_plus_minus_block_decoupled():
    mesh = build_mesh(DomainSpec(1.0, 1.0, 4, 4))
    K = assemble_stiffness(mesh).K.toarray()
    up, lo = mesh.pairs[:, 0], mesh.pairs[:, 1]
    assert np.max(np.abs(K[np.ix_(up, lo)])) == 0.0


def test_dirichlet_tags_and_lift():
    mesh = build_mesh(DomainSpec(1.0, 2.0, 2, 4))
    bottom, top = mesh.dirichlet_nodes()
    assert len(bottom) == 3 and len(top) == 3
    assert all(mesh.coords[n, 1] == 0.0 for n in bottom)
    assert all(mesh.coords[n, 1] == 2.0 for n in top)
    lift = dirichlet_lift(mesh, 3.0)
    np.testing.assert_allclose(lift[top], 3.0)
    np.testing.assert_allclose(lift[bottom], 0.0)
    assert np.all(dirichlet_lift(mesh, 0.0) == 0.0)
    mesh1 = build_mesh(DomainSpec(1.0, 1.0, 2, 2))
    np.testing.assert_array_equal(dirichlet_lift(mesh1, 1.0), mesh1.coords[:, 1])


def test_mesh_dump(tmp_path):
    mesh = build_mesh(DomainSpec(1.0, 1.0, 2, 2))
    nodes, tris = tmp_path / "nodes.csv", tmp_path / "tris.csv"
    dump_mesh_csv(mesh, nodes, tris)
    assert len(nodes.read_text().splitlines()) == mesh.n_nodes + 1
    assert len(tris.read_text().splitlines()) == mesh.triangles.shape[0] + 1
