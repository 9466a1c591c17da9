import math

import numpy as np
import pytest

from wavescat.errors import GeometryError, MeshParameterError
from wavescat.geometry import truncate
from wavescat.mesh import (
    TraceMesh,
    check_mesh,
    generate,
    min_angle_deg,
    trace_mesh,
    triangle_signed_areas,
    write_mesh,
)
from wavescat.scenes import obstacle_strip, straight_strip, t_junction, width_step

PI = math.pi


def _mesh(scene, R=4.0, h=PI / 16, **kw):
    return generate(truncate(scene, R), h, **kw)


@pytest.mark.parametrize("scene_fn", [straight_strip, obstacle_strip, width_step, t_junction])
def test_mesh_invariants_on_canned_scenes(scene_fn):
    mesh = _mesh(scene_fn())
    assert check_mesh(mesh) == []
    assert np.all(triangle_signed_areas(mesh) > 0)


def test_min_angle_quality():
    for scene_fn in (straight_strip, obstacle_strip, width_step, t_junction):
        mesh = _mesh(scene_fn())
        assert min_angle_deg(mesh) >= 20.0


def test_h_larger_than_width_rejected():
    dom = truncate(straight_strip(), 4.0)
    with pytest.raises(MeshParameterError):
        generate(dom, PI)
    with pytest.raises(MeshParameterError):
        generate(dom, PI / 4)        # must be strictly below width/4
    with pytest.raises(MeshParameterError):
        generate(dom, 0.0)


def test_self_intersecting_junction_rejected():
    from wavescat.geometry import make_scene

    bowtie = make_scene(
        [(0.0, 0.0), (2.0, 2.0), (2.0, 0.0), (0.0, 2.0)],
        [{"attach_edge_index": 0, "collar_length": 0.0}],
    )
    with pytest.raises(GeometryError):
        generate(truncate(bowtie, 1.0), 0.1)


def test_mesh_deterministic():
    m1 = _mesh(obstacle_strip(), h=PI / 12)
    m2 = _mesh(obstacle_strip(), h=PI / 12)
    np.testing.assert_array_equal(m1.nodes, m2.nodes)
    np.testing.assert_array_equal(m1.triangles, m2.triangles)
    np.testing.assert_array_equal(m1.boundary_edges, m2.boundary_edges)
    np.testing.assert_array_equal(m1.edge_labels, m2.edge_labels)


def test_gamma_nodes_at_radius():
    R = 3.5
    mesh = _mesh(t_junction(), R=R)
    for end in mesh.domain.scene.ends:
        edges = mesh.gamma_edges(end.index)
        assert len(edges) > 0
        nodes = mesh.nodes[np.unique(edges.ravel())]
        _, t = end.local_coords(nodes)
        assert np.max(np.abs(t - R)) <= 1e-12 * R


def test_trace_mesh_integrates_constants():
    mesh = _mesh(straight_strip())
    tm = trace_mesh(mesh, 1)
    ones = np.ones(len(tm.y))
    assert ones @ (tm.mass @ ones) == pytest.approx(PI, abs=1e-12)


def test_trace_mesh_integrates_linear():
    mesh = _mesh(straight_strip(), h=PI / 17)
    for p in (1, 2):
        tm = trace_mesh(mesh, p)
        ones = np.ones(len(tm.y))
        d = tm.width
        assert ones @ (tm.mass @ ones) == pytest.approx(d, abs=1e-12)
        assert ones @ (tm.mass @ tm.y) == pytest.approx(d * d / 2, abs=1e-12)


def test_single_element_trace_mass():
    d = 1.7
    tm = TraceMesh.from_coords(np.array([0.0, d]))
    np.testing.assert_allclose(tm.mass, d / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]]))


def test_trace_mesh_canonical_order():
    tm = TraceMesh.from_coords(np.array([0.5, 0.0, 1.0]))
    assert np.all(np.diff(tm.y) > 0)
    mesh = _mesh(straight_strip())
    for p in (1, 2):
        tm = trace_mesh(mesh, p)
        assert np.all(np.diff(tm.y) > 0)
        assert tm.y[0] == 0.0
        assert tm.y[-1] == pytest.approx(PI)


def test_trace_mass_positive_definite():
    mesh = _mesh(straight_strip(), h=PI / 20)
    tm = trace_mesh(mesh, 1)
    vals = np.linalg.eigvalsh(tm.mass)
    assert vals[0] > 0


def test_unknown_end_rejected():
    mesh = _mesh(straight_strip())
    with pytest.raises(GeometryError):
        trace_mesh(mesh, 7)


def test_corner_grading_refines_toward_corners():
    scene = straight_strip()
    plain = _mesh(scene, h=PI / 8)
    graded = generate(truncate(scene, 4.0), PI / 8, grade_corners=True)
    assert check_mesh(graded) == []
    assert len(graded.nodes) > len(plain.nodes)
    # smallest cross-section interval shrinks by the grading ratio 1/8
    tm_p = trace_mesh(plain, 1)
    tm_g = trace_mesh(graded, 1)
    assert np.min(np.diff(tm_g.y)) < 0.2 * np.min(np.diff(tm_p.y))


def test_obstacle_removes_cells():
    with_obs = _mesh(obstacle_strip(), h=PI / 12)
    without = _mesh(straight_strip(), h=PI / 12)
    area_obs = np.sum(triangle_signed_areas(with_obs))
    area_strip = np.sum(triangle_signed_areas(without))
    obs = obstacle_strip().obstacles[0]
    hole = (obs[:, 0].max() - obs[:, 0].min()) * (obs[:, 1].max() - obs[:, 1].min())
    assert area_strip - area_obs == pytest.approx(hole, rel=1e-12)


def test_mesh_dump_roundtrips_counts(tmp_path):
    mesh = _mesh(straight_strip(), h=PI / 8)
    path = tmp_path / "mesh.txt"
    write_mesh(mesh, path)
    lines = path.read_text().strip().splitlines()
    assert sum(1 for l in lines if l.startswith("v ")) == len(mesh.nodes)
    assert sum(1 for l in lines if l.startswith("t ")) == len(mesh.triangles)
    assert sum(1 for l in lines if l.startswith("e ")) == len(mesh.boundary_edges)
