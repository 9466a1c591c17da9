"""Canned scene builders used by the tests, the examples and the CLI configs.

All scenes are rectilinear with axis-aligned ends.  Cross-section widths
default to pi so the transverse cut-offs sit at 1, 4, 9, ...
"""

from __future__ import annotations

import math

from .geometry import WaveguideScene, make_scene

PI = math.pi


def straight_strip(width: float = PI, length: float = 2.0) -> WaveguideScene:
    """Uniform guide: rectangular junction with an end on each short side."""
    junction = [
        (0.0, 0.0),
        (length, 0.0),
        (length, width),
        (0.0, width),
    ]
    ends = [
        {"attach_edge_index": 3, "collar_length": length / 2},  # left, faces -x
        {"attach_edge_index": 1, "collar_length": length / 2},  # right, faces +x
    ]
    return make_scene(junction, ends, name="straight_strip")


def obstacle_strip(
    width: float = PI,
    length: float = 2.0,
    obstacle: tuple[float, float, float, float] | None = None,
) -> WaveguideScene:
    """Strip with one rectangular Dirichlet obstacle (x0, x1, y0, y1).

    The default obstacle sits at the middle of the guide axis but is offset
    across the strip, so it couples the first propagating mode to every
    evanescent transverse channel, including the lowest one.
    """
    if obstacle is None:
        obstacle = (
            length / 2 - 0.2,
            length / 2 + 0.2,
            width / 2 - 0.75,
            width / 2 + 0.35,
        )
    x0, x1, y0, y1 = obstacle
    junction = [
        (0.0, 0.0),
        (length, 0.0),
        (length, width),
        (0.0, width),
    ]
    obs = [(x0, y0), (x0, y1), (x1, y1), (x1, y0)]  # clockwise
    ends = [
        {"attach_edge_index": 3, "collar_length": min(x0, length / 2)},
        {"attach_edge_index": 1, "collar_length": min(length - x1, length / 2)},
    ]
    return make_scene(junction, ends, obstacles=[obs], name="obstacle_strip")


def centerline_plate(
    width: float = PI,
    length: float = 2.0,
    plate_span: tuple[float, float] = (0.5, 1.5),
    plate_thickness: float = 0.15,
) -> WaveguideScene:
    """Strip with a thin Dirichlet plate along the guide axis.

    The mirror-symmetric plate supports channel modes trapped in the odd
    sector with frequencies embedded in the even continuum, which makes this
    the stress scene for sweeps across embedded eigenvalues.
    """
    x0, x1 = plate_span
    y0 = width / 2 - plate_thickness / 2
    y1 = width / 2 + plate_thickness / 2
    junction = [
        (0.0, 0.0),
        (length, 0.0),
        (length, width),
        (0.0, width),
    ]
    obs = [(x0, y0), (x0, y1), (x1, y1), (x1, y0)]
    ends = [
        {"attach_edge_index": 3, "collar_length": min(x0, length / 2)},
        {"attach_edge_index": 1, "collar_length": min(length - x1, length / 2)},
    ]
    return make_scene(junction, ends, obstacles=[obs], name="centerline_plate")


def width_step(
    d_left: float = PI,
    d_right: float = 2 * PI,
    collar_left: float = 0.5,
    collar_right: float = 0.5,
    alignment: str = "centered",
) -> WaveguideScene:
    """Abrupt width change, mode-matching reference geometry.

    End 1 is the narrow guide on the -x side, end 2 the wide guide on +x;
    the junction plane is x = 0 and each end origin sits one collar length
    away from it.  Pair with ``oracle.step_scene_S`` for the same wave basis.
    """
    if d_left > d_right:
        raise ValueError("d_left must not exceed d_right")
    o = 0.5 * (d_right - d_left) if alignment == "centered" else 0.0
    junction = [
        (-collar_left, o),
        (0.0, o),
        (0.0, 0.0),
        (collar_right, 0.0),
        (collar_right, d_right),
        (0.0, d_right),
        (0.0, o + d_left),
        (-collar_left, o + d_left),
    ]
    if alignment == "flush":
        # lower walls coincide: drop the degenerate step edge at the bottom
        junction = [
            (-collar_left, 0.0),
            (0.0, 0.0),
            (collar_right, 0.0),
            (collar_right, d_right),
            (0.0, d_right),
            (0.0, d_left),
            (-collar_left, d_left),
        ]
        ends = [
            {"attach_edge_index": 6, "collar_length": collar_left},
            {"attach_edge_index": 2, "collar_length": collar_right},
        ]
    else:
        ends = [
            {"attach_edge_index": 7, "collar_length": collar_left},
            {"attach_edge_index": 3, "collar_length": collar_right},
        ]
    return make_scene(junction, ends, name=f"width_step_{alignment}")


def t_junction(
    width: float = PI,
    stub_width: float = PI / 2,
    length: float = 3.0,
    stub_x: float = 1.0,
) -> WaveguideScene:
    """Three-port junction: straight strip with a stub opening upward."""
    junction = [
        (0.0, 0.0),
        (length, 0.0),
        (length, width),
        (stub_x + stub_width, width),
        (stub_x, width),
        (0.0, width),
    ]
    ends = [
        {"attach_edge_index": 5, "collar_length": min(stub_x, width) / 2},
        {"attach_edge_index": 1, "collar_length": min(length - stub_x - stub_width, width) / 2},
        {"attach_edge_index": 3, "collar_length": 0.0},
    ]
    return make_scene(junction, ends, name="t_junction")
