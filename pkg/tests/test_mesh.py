"""Geometry, grid construction, and transmissibility tests."""

from __future__ import annotations

import dataclasses
import textwrap

import numpy as np
import pytest

from fracflow.mesh import (
    FACE_GAMMA,
    FACE_GAMMA1,
    FACE_GAMMA2,
    SUB_F,
    SUB_M1,
    SUB_M2,
    ScalingRegime,
    build_geometry,
    build_grid,
    build_single_block_grid,
    default_fracture_nx,
    face_transmissibilities,
    face_transmissibility,
    mesh_report,
)


# -- geometry ------------------------------------------------------------------


def test_geometry_unit_width_ratio():
    lay = build_geometry(1.0)
    assert lay.fracture == (-0.5, 0.5, 0.0, 1.0)
    assert lay.m1 == (-1.5, -0.5, 0.0, 1.0)
    assert lay.m2 == (0.5, 1.5, 0.0, 1.0)


def test_geometry_reduced():
    lay = build_geometry(0.0)
    assert lay.reduced
    assert lay.fracture is None
    assert lay.m1 == (-1.0, 0.0, 0.0, 1.0)
    assert lay.m2 == (0.0, 1.0, 0.0, 1.0)
    assert lay.gamma1_x == lay.gamma2_x == 0.0


def test_geometry_direct_substitution():
    lay = build_geometry(0.1)
    assert lay.m2 == pytest.approx((0.05, 1.05, 0.0, 1.0))
    assert lay.gamma1_x == -0.05
    assert lay.gamma2_x == 0.05


def test_geometry_accepts_regime():
    lay = build_geometry(ScalingRegime(width_ratio=0.01))
    assert lay.width_ratio == 0.01


def test_geometry_half_width_blocks():
    lay = build_geometry(0.2, matrix_width=0.5)
    assert lay.m1 == pytest.approx((-0.6, -0.1, 0.0, 1.0))
    assert lay.area == pytest.approx(1.2)


def test_geometry_rejects_negative():
    with pytest.raises(ValueError):
        build_geometry(-0.1)
    with pytest.raises(ValueError):
        ScalingRegime(width_ratio=-1.0)


# -- grids ---------------------------------------------------------------------


def test_smallest_matching_grid():
    g = build_grid(build_geometry(0.1), {"m1": (1, 1), "f": (1, 1),
                                         "m2": (1, 1)})
    assert g.n_cells == 3
    n_gamma = np.sum(g.face_kind == FACE_GAMMA1) + np.sum(
        g.face_kind == FACE_GAMMA2)
    assert n_gamma == 2
    assert g.interior_faces.size == 2  # only the two interface faces


def test_headline_cell_count():
    g = build_grid(build_geometry(1.0), {"m1": (160, 160), "f": (160, 160),
                                         "m2": (160, 160)})
    assert g.n_cells == 3 * 160 * 160


def test_fracture_cell_size_scales_with_width():
    lay = build_geometry(0.01)
    nxf = default_fracture_nx(0.01, 160)
    g = build_grid(lay, {"m1": (160, 160), "f": (nxf, 160), "m2": (160, 160)})
    assert nxf == 40
    f_ids = g.cells_in("f")
    assert g.cell_dx[f_ids[0]] == pytest.approx(1.0 / 4000.0, rel=1e-14)


def test_default_fracture_nx_series():
    assert [default_fracture_nx(e, 160)
            for e in (1.0, 1e-1, 1e-2, 1e-3, 1e-4)] == [160, 80, 40, 20, 10]
    assert default_fracture_nx(1e-8, 160) == 2
    with pytest.raises(ValueError):
        default_fracture_nx(0.0, 160)


def test_grid_rejects_bad_resolutions():
    lay = build_geometry(0.1)
    with pytest.raises(ValueError):
        build_grid(lay, {"m1": (4, 4), "f": (2, 3), "m2": (4, 4)})
    with pytest.raises(ValueError):
        build_grid(lay, {"m1": (4, 4), "m2": (4, 4)})
    with pytest.raises(ValueError):
        build_grid(lay, {"m1": (0, 4), "f": (2, 4), "m2": (4, 4)})
    g0 = build_geometry(0.0)
    with pytest.raises(ValueError):
        build_grid(g0, {"m1": (4, 4), "m2": (4, 5)})


def test_cell_areas_sum_to_domain_area():
    for eps in (1.0, 0.1, 0.003):
        lay = build_geometry(eps)
        g = build_grid(lay, {"m1": (7, 5), "f": (3, 5), "m2": (7, 5)})
        assert np.sum(g.cell_area) == pytest.approx(lay.area, rel=1e-12)
    lay0 = build_geometry(0.0)
    g0 = build_grid(lay0, {"m1": (7, 5), "m2": (7, 5)})
    assert np.sum(g0.cell_area) == pytest.approx(2.0, rel=1e-12)


def test_interface_faces_match_subdomains():
    g = build_grid(build_geometry(0.1), {"m1": (3, 4), "f": (2, 4),
                                         "m2": (3, 4)})
    for kind, sub_a, sub_b in ((FACE_GAMMA1, SUB_M1, SUB_F),
                               (FACE_GAMMA2, SUB_F, SUB_M2)):
        faces = np.nonzero(g.face_kind == kind)[0]
        assert faces.size == 4
        own, nbr = g.face_owner[faces], g.face_neighbor[faces]
        assert np.all(g.cell_sub[own] == sub_a)
        assert np.all(g.cell_sub[nbr] == sub_b)
        # matching grid: shared faces have identical y-extent
        np.testing.assert_allclose(g.cell_y[own], g.cell_y[nbr], atol=1e-15)
        np.testing.assert_allclose(g.face_area[faces], 0.25, rtol=1e-14)


def test_reduced_interface_rows():
    g = build_grid(build_geometry(0.0), {"m1": (3, 4), "m2": (3, 4)})
    faces = np.nonzero(g.face_kind == FACE_GAMMA)[0]
    assert faces.size == 4
    assert np.all(g.cell_sub[g.face_owner[faces]] == SUB_M1)
    assert np.all(g.cell_sub[g.face_neighbor[faces]] == SUB_M2)
    np.testing.assert_array_equal(g.gamma_m1, g.face_owner[faces])
    np.testing.assert_array_equal(g.gamma_m2, g.face_neighbor[faces])
    np.testing.assert_allclose(g.interface_y, (np.arange(4) + 0.5) / 4.0)
    np.testing.assert_allclose(g.face_d_owner[faces], 0.5 / 3.0, rtol=1e-14)
    # interface sits exactly on x = 0
    np.testing.assert_array_equal(g.face_x[faces], 0.0)


def test_every_interior_face_appears_once():
    g = build_grid(build_geometry(0.2), {"m1": (3, 4), "f": (2, 4),
                                         "m2": (3, 4)})
    ii = g.interior_faces
    assert np.all(g.face_owner[ii] != g.face_neighbor[ii])
    pairs = {tuple(sorted(p))
             for p in zip(g.face_owner[ii], g.face_neighbor[ii])}
    assert len(pairs) == ii.size
    # counts: vertical (nx-1)*ny per block + 2*ny interface,
    # horizontal nx*(ny-1) per block
    assert ii.size == (2 * 4 + 1 * 4 + 2 * 4) + 2 * 4 + (3 + 2 + 3) * 3


def test_boundary_face_count_and_edges():
    g = build_grid(build_geometry(0.2), {"m1": (3, 4), "f": (2, 4),
                                         "m2": (3, 4)})
    bb = g.boundary_faces
    assert bb.size == 2 * 4 + 2 * (3 + 2 + 3)
    assert np.all(g.face_neighbor[bb] == -1)
    assert np.all(g.face_edge[bb] >= 0)
    assert np.all(g.face_edge[g.interior_faces] == -1)


def test_refinement_quarters_max_cell_area():
    lay = build_geometry(0.1)
    coarse = build_grid(lay, {"m1": (4, 4), "f": (2, 4), "m2": (4, 4)})
    fine = build_grid(lay, {"m1": (8, 8), "f": (4, 8), "m2": (8, 8)})
    assert np.max(fine.cell_area) == pytest.approx(
        np.max(coarse.cell_area) / 4.0, rel=1e-12)


def test_grid_is_immutable():
    g = build_single_block_grid((0.0, 1.0, 0.0, 1.0), 2, 2)
    with pytest.raises(dataclasses.FrozenInstanceError):
        g.cell_x = np.zeros(4)


def test_single_block_grid_edges():
    g = build_single_block_grid((0.0, 1.0, 0.0, 2.0), 3, 5)
    assert g.n_cells == 15
    bb = g.boundary_faces
    for edge, count in ((0, 5), (1, 5), (2, 3), (3, 3)):
        assert np.sum(g.face_edge[bb] == edge) == count


# -- transmissibilities ----------------------------------------------------------


def test_transmissibility_homogeneous_unit():
    g = build_single_block_grid((0.0, 2.0, 0.0, 1.0), 2, 1)
    f = int(g.interior_faces[0])
    assert face_transmissibility(g, f, 1.0, 1.0) == pytest.approx(1.0)


def test_transmissibility_harmonic_average():
    g = build_single_block_grid((0.0, 2.0, 0.0, 1.0), 2, 1)
    f = int(g.interior_faces[0])
    assert face_transmissibility(g, f, 2.0, 1.0) == pytest.approx(4.0 / 3.0)


def test_transmissibility_boundary_half_cell():
    g = build_single_block_grid((0.0, 2.0, 0.0, 1.0), 2, 1)
    b = int(g.boundary_faces[0])
    assert g.face_d_owner[b] == 0.5
    assert face_transmissibility(g, b, 1.0) == pytest.approx(2.0)


def test_transmissibility_symmetry():
    # mirror-symmetric geometry: the gamma1 face with conductivities (a, b)
    # must match the gamma2 face with (b, a)
    g = build_grid(build_geometry(0.1), {"m1": (3, 4), "f": (2, 4),
                                         "m2": (3, 4)})
    f1 = int(np.nonzero(g.face_kind == FACE_GAMMA1)[0][0])
    f2 = int(np.nonzero(g.face_kind == FACE_GAMMA2)[0][0])
    a, b = 3.7, 0.2
    assert face_transmissibility(g, f1, a, b) == pytest.approx(
        face_transmissibility(g, f2, b, a), rel=1e-14)


def test_transmissibility_rejects_nonpositive():
    g = build_single_block_grid((0.0, 2.0, 0.0, 1.0), 2, 1)
    f = int(g.interior_faces[0])
    with pytest.raises(ValueError):
        face_transmissibility(g, f, 0.0, 1.0)
    with pytest.raises(ValueError):
        face_transmissibility(g, f, 1.0, -2.0)
    with pytest.raises(ValueError):
        face_transmissibilities(g, np.array([1.0, 0.0]))


def test_vector_transmissibilities_match_scalar():
    g = build_grid(build_geometry(0.3), {"m1": (3, 2), "f": (2, 2),
                                         "m2": (4, 2)})
    rng = np.random.default_rng(3)
    k = rng.uniform(0.1, 2.0, g.n_cells)
    T = face_transmissibilities(g, k)
    for f in range(g.n_faces):
        nbr = g.face_neighbor[f]
        if nbr >= 0:
            ref = face_transmissibility(g, f, k[g.face_owner[f]], k[nbr])
        else:
            ref = face_transmissibility(g, f, k[g.face_owner[f]])
        assert T[f] == pytest.approx(ref, rel=1e-14)


# -- report ----------------------------------------------------------------------


def test_mesh_report_golden_resolved():
    g = build_grid(build_geometry(0.1), {"m1": (3, 4), "f": (2, 4),
                                         "m2": (3, 4)})
    expected = textwrap.dedent("""\
        geometry: resolved fracture, width ratio 0.1
        matrix width: 1
        subdomain m1: x [-1.05, -0.05], cells 3 x 4, dx 0.333333333333, dy 0.25
        subdomain f: x [-0.05, 0.05], cells 2 x 4, dx 0.05, dy 0.25
        subdomain m2: x [0.05, 1.05], cells 3 x 4, dx 0.333333333333, dy 0.25
        interior faces: 44
        gamma1 faces: 4
        gamma2 faces: 4
        boundary faces: 24
        cells: 32
        total area: 2.1
        """)
    assert mesh_report(g) == expected


def test_mesh_report_golden_reduced():
    g = build_grid(build_geometry(0.0), {"m1": (3, 4), "m2": (3, 4)})
    expected = textwrap.dedent("""\
        geometry: reduced interface
        matrix width: 1
        subdomain m1: x [-1, 0], cells 3 x 4, dx 0.333333333333, dy 0.25
        subdomain m2: x [0, 1], cells 3 x 4, dx 0.333333333333, dy 0.25
        interior faces: 34
        gamma faces: 4
        boundary faces: 20
        cells: 24
        total area: 2
        """)
    assert mesh_report(g) == expected
