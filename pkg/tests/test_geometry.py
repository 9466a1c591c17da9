import math

import numpy as np
import pytest

from wavescat.errors import InvalidRadiusError
from wavescat.geometry import (
    CrossSection,
    CylindricalEnd,
    WaveguideScene,
    make_scene,
    scene_from_json,
    scene_to_json,
    truncate,
    validate_scene,
)
from wavescat.scenes import obstacle_strip, straight_strip, t_junction, width_step

PI = math.pi


def test_straight_strip_is_valid():
    assert validate_scene(straight_strip()) == []


def test_all_canned_scenes_are_valid():
    for scene in (straight_strip(), obstacle_strip(), width_step(),
                  width_step(alignment="flush"), t_junction()):
        assert validate_scene(scene) == [], scene.name


def test_overlapping_ends_diagnosed():
    # staircase polygon with two +x facing edges whose semicylinders overlap
    junction = [
        (0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (3.0, 2.0),
        (3.0, 1.0), (5.0, 1.0), (5.0, 3.0), (0.0, 3.0),
    ]
    scene = make_scene(junction, [
        {"attach_edge_index": 1, "collar_length": 0.0},   # x=2, y in [0,2]
        {"attach_edge_index": 5, "collar_length": 0.0},   # x=5, y in [1,3]
    ])
    diags = validate_scene(scene)
    assert any("ends 1,2 overlap" in d for d in diags)


def test_zero_width_end_diagnosed():
    base = straight_strip()
    bad_end = CylindricalEnd(
        index=1,
        cross_section=CrossSection(width=0.0),
        origin=base.ends[0].origin,
        axis=base.ends[0].axis,
        y_dir=base.ends[0].y_dir,
        collar_length=0.0,
        attach_edge=None,
    )
    scene = WaveguideScene(junction=base.junction, ends=(bad_end, base.ends[1]))
    diags = validate_scene(scene)
    assert any("cross-section width must be positive" in d for d in diags)


def test_non_ccw_junction_diagnosed():
    scene = make_scene(
        [(0.0, 0.0), (0.0, PI), (2.0, PI), (2.0, 0.0)],  # clockwise
        [{"attach_edge_index": 0, "collar_length": 0.0}],
    )
    diags = validate_scene(scene)
    assert any("counter-clockwise" in d for d in diags)


def test_truncate_strip_segments():
    scene = straight_strip()
    dom = truncate(scene, 5.0)
    assert len(dom.gamma_segments) == 2
    for seg, end in zip(dom.gamma_segments, scene.ends):
        assert seg.end_index == end.index
        np.testing.assert_allclose(seg.p1 - seg.p0, end.width * end.y_dir, atol=1e-14)
        _, t0 = end.local_coords(seg.p0)
        assert abs(t0 - 5.0) < 1e-14
    # left end points -x, right end +x
    assert dom.gamma_segments[0].p0[0] == pytest.approx(-5.0)
    assert dom.gamma_segments[1].p0[0] == pytest.approx(7.0)


def test_truncate_t_junction_has_three_segments():
    dom = truncate(t_junction(), 4.0)
    assert len(dom.gamma_segments) == 3
    # the stub segment sits at the stub height + 4
    stub = dom.gamma_segments[2]
    assert stub.p0[1] == pytest.approx(PI + 4.0)


def test_truncate_rejects_nonpositive_radius():
    scene = straight_strip()
    with pytest.raises(InvalidRadiusError):
        truncate(scene, 0.0)
    with pytest.raises(InvalidRadiusError):
        truncate(scene, -1.0)


def test_truncation_monotone_and_segments_congruent():
    scene = t_junction()
    d1 = truncate(scene, 3.0)
    d2 = truncate(scene, 6.0)
    assert np.all(d2.contains(d1.boundary_vertices()))
    assert not np.all(d1.contains(d2.boundary_vertices()))
    for s1, s2, end in zip(d1.gamma_segments, d2.gamma_segments, scene.ends):
        shift = 3.0 * end.axis
        np.testing.assert_allclose(s1.p0 + shift, s2.p0, atol=1e-12)
        np.testing.assert_allclose(s1.p1 + shift, s2.p1, atol=1e-12)


def test_scene_json_roundtrip(tmp_path):
    scene = obstacle_strip()
    path = tmp_path / "scene.json"
    scene_to_json(scene, path)
    loaded = scene_from_json(path)
    assert validate_scene(loaded) == []
    np.testing.assert_allclose(loaded.junction, scene.junction)
    assert len(loaded.obstacles) == 1
    np.testing.assert_allclose(loaded.obstacles[0], scene.obstacles[0])
    assert [e.attach_edge for e in loaded.ends] == [e.attach_edge for e in scene.ends]
    assert [e.width for e in loaded.ends] == pytest.approx([e.width for e in scene.ends])


def test_local_coordinates_span_width():
    scene = straight_strip()
    end = scene.ends[0]
    y, t = end.local_coords(np.array([[0.0, PI], [0.0, 0.0], [-2.0, PI / 2]]))
    assert y[0] == pytest.approx(0.0)
    assert y[1] == pytest.approx(PI)
    assert t[2] == pytest.approx(2.0)
    assert 0.0 < y[2] < PI
