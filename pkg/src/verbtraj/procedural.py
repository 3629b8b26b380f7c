"""Procedural articulated-object instances.

Each category builds a small cuboid assembly with exactly one movable joint
(plus optional fixed trim links such as handles and panels). Dimensions,
colors, and joint limits are drawn from per-category ranges in a versioned
config; the same (category, seed, config) always yields an identical model.

The camera convention elsewhere in the package puts +x toward the viewer,
so fronts, doors, and drawer travel face +x, lids open about the top edges,
and every movable joint opens away from its lower limit (closed) toward the
upper limit (fully open).
"""

from __future__ import annotations

import json
import zlib
from typing import Any

import numpy as np

from .errors import ModelError
from .kinematics import Joint, Link, ObjectModel, build_model

CONFIG_VERSION = 1

DEFAULT_CATEGORY_CONFIG: dict[str, Any] = {
    "config_version": CONFIG_VERSION,
    "categories": {
        "cabinet-hinged-door": {
            "kind": "front_door",
            "body_hx": [0.18, 0.30], "body_hy": [0.22, 0.38], "body_hz": [0.30, 0.50],
            "door_thickness": [0.012, 0.025],
            "door_scale_y": [0.95, 1.0], "door_scale_z": [0.90, 1.0],
            "hinge": "left", "placement": "center",
            "joint_range": [1.35, 1.90],
            "handle": False, "panel": False,
        },
        "safe-like": {
            "kind": "front_door",
            "body_hx": [0.22, 0.32], "body_hy": [0.24, 0.34], "body_hz": [0.26, 0.40],
            "door_thickness": [0.040, 0.080],
            "door_scale_y": [0.80, 0.90], "door_scale_z": [0.80, 0.90],
            "hinge": "right", "placement": "center",
            "joint_range": [1.20, 1.70],
            "handle": True, "panel": False,
        },
        "microwave-like": {
            "kind": "front_door",
            "body_hx": [0.16, 0.24], "body_hy": [0.30, 0.45], "body_hz": [0.18, 0.26],
            "door_thickness": [0.015, 0.030],
            "door_scale_y": [0.60, 0.72], "door_scale_z": [0.88, 0.96],
            "hinge": "left", "placement": "edge",
            "joint_range": [1.40, 1.85],
            "handle": False, "panel": True,
        },
        "fridge-like": {
            "kind": "front_door",
            "body_hx": [0.22, 0.30], "body_hy": [0.25, 0.35], "body_hz": [0.42, 0.50],
            "door_thickness": [0.020, 0.040],
            "door_scale_y": [0.95, 1.0], "door_scale_z": [0.95, 1.0],
            "hinge": "right", "placement": "center",
            "joint_range": [1.50, 2.00],
            "handle": True, "panel": False,
        },
        "washer-like": {
            "kind": "front_door",
            "body_hx": [0.25, 0.35], "body_hy": [0.25, 0.35], "body_hz": [0.25, 0.35],
            "door_thickness": [0.020, 0.035],
            "door_scale_y": [0.55, 0.70], "door_scale_z": [0.55, 0.70],
            "hinge": "left", "placement": "center",
            "joint_range": [1.60, 2.10],
            "handle": False, "panel": False,
        },
        "dishwasher-like": {
            "kind": "front_door",
            "body_hx": [0.20, 0.28], "body_hy": [0.25, 0.35], "body_hz": [0.30, 0.42],
            "door_thickness": [0.015, 0.030],
            "door_scale_y": [0.92, 1.0], "door_scale_z": [0.92, 1.0],
            "hinge": "bottom", "placement": "center",
            "joint_range": [1.20, 1.60],
            "handle": False, "panel": False,
        },
        "box-with-lid": {
            "kind": "top_lid",
            "body_hx": [0.20, 0.35], "body_hy": [0.22, 0.38], "body_hz": [0.15, 0.28],
            "lid_thickness": [0.012, 0.025],
            "lid_overhang": [1.00, 1.06],
            "joint_range": [1.80, 2.40],
            "pedal": False,
        },
        "trashcan-like": {
            "kind": "top_lid",
            "body_hx": [0.14, 0.22], "body_hy": [0.14, 0.22], "body_hz": [0.30, 0.45],
            "lid_thickness": [0.012, 0.025],
            "lid_overhang": [1.02, 1.10],
            "joint_range": [1.50, 2.00],
            "pedal": True,
        },
        "laptop-like": {
            "kind": "top_lid",
            "body_hx": [0.22, 0.32], "body_hy": [0.28, 0.40], "body_hz": [0.015, 0.030],
            "lid_thickness": [0.012, 0.020],
            "lid_overhang": [0.94, 0.99],
            "joint_range": [1.50, 1.90],
            "pedal": False,
        },
        "cabinet-drawer": {
            "kind": "drawer",
            "body_hx": [0.20, 0.30], "body_hy": [0.22, 0.35], "body_hz": [0.25, 0.45],
            "drawer_scale_x": [0.80, 0.88], "drawer_scale_y": [0.76, 0.86],
            "drawer_scale_z": [0.28, 0.40],
            "travel": [0.25, 0.45],
            "knob": True,
        },
    },
}


def load_category_config(path: str) -> dict[str, Any]:
    with open(path, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    if "categories" not in cfg:
        raise ModelError(f"category config {path!r} has no 'categories' section")
    return cfg


def list_categories(config: dict[str, Any] | None = None) -> list[str]:
    cfg = config or DEFAULT_CATEGORY_CONFIG
    return sorted(cfg["categories"].keys())


def _u(rng: np.random.Generator, rng_pair) -> float:
    lo, hi = float(rng_pair[0]), float(rng_pair[1])
    return lo + (hi - lo) * float(rng.random())


def _color(rng: np.random.Generator) -> np.ndarray:
    return 0.10 + 0.85 * rng.random(3)


def _distinct_colors(rng: np.random.Generator, n: int) -> list[np.ndarray]:
    colors: list[np.ndarray] = []
    for _ in range(n):
        best = _color(rng)
        for _ in range(200):
            if all(np.abs(best - c).sum() >= 0.55 for c in colors):
                break
            best = _color(rng)
        colors.append(best)
    return colors


def _build_front_door(rng, spec) -> tuple[list[Link], list[Joint]]:
    hx, hy, hz = (_u(rng, spec["body_hx"]), _u(rng, spec["body_hy"]), _u(rng, spec["body_hz"]))
    th = _u(rng, spec["door_thickness"])
    dy = _u(rng, spec["door_scale_y"]) * hy
    dz = _u(rng, spec["door_scale_z"]) * hz
    upper = _u(rng, spec["joint_range"])
    n_colors = 2 + bool(spec["handle"]) + bool(spec["panel"])
    colors = _distinct_colors(rng, n_colors)
    hinge = spec["hinge"]
    if hinge == "left":
        yc = hy - dy if spec["placement"] == "edge" else 0.0
        origin = (hx + th, yc + dy, 0.0)
        axis = (0.0, 0.0, 1.0)
        door_visual = (0.0, -dy, 0.0)
    elif hinge == "right":
        yc = -hy + dy if spec["placement"] == "edge" else 0.0
        origin = (hx + th, yc - dy, 0.0)
        axis = (0.0, 0.0, -1.0)
        door_visual = (0.0, dy, 0.0)
    elif hinge == "bottom":
        origin = (hx + th, 0.0, -dz)
        axis = (0.0, 1.0, 0.0)
        door_visual = (0.0, 0.0, dz)
    else:
        raise ModelError(f"unknown hinge {hinge!r}")
    links = [
        Link("body", (hx, hy, hz), colors[0]),
        Link("door", (th, dy, dz), colors[1], visual_xyz=door_visual),
    ]
    joints = [
        Joint("door_hinge", "revolute", "body", "door", axis=axis,
              origin_xyz=origin, limit_lower=0.0, limit_upper=upper),
    ]
    ci = 2
    if spec["handle"]:
        # vertical bar on the door front near the free edge
        free_y = -1.7 * dy if hinge == "left" else 1.7 * dy
        links.append(Link("handle", (0.015, 0.015, min(0.3 * dz, 0.09)), colors[ci]))
        joints.append(Joint("handle_mount", "fixed", "door", "handle",
                            origin_xyz=(th + 0.015, free_y, 0.0)))
        ci += 1
    if spec["panel"]:
        # control strip filling the front face beside an edge-placed door
        py = hy - dy
        if py > 0.01:
            links.append(Link("panel", (0.8 * th, py, 0.92 * hz), colors[ci]))
            joints.append(Joint("panel_mount", "fixed", "body", "panel",
                                origin_xyz=(hx + 0.8 * th, -dy, 0.0)))
    return links, joints


def _build_top_lid(rng, spec) -> tuple[list[Link], list[Joint]]:
    hx, hy, hz = (_u(rng, spec["body_hx"]), _u(rng, spec["body_hy"]), _u(rng, spec["body_hz"]))
    lth = _u(rng, spec["lid_thickness"])
    ov = _u(rng, spec["lid_overhang"])
    upper = _u(rng, spec["joint_range"])
    colors = _distinct_colors(rng, 2 + bool(spec["pedal"]))
    links = [
        Link("body", (hx, hy, hz), colors[0]),
        Link("lid", (ov * hx, ov * hy, lth), colors[1], visual_xyz=(hx, 0.0, 0.0)),
    ]
    joints = [
        # hinge along the top back edge; positive angle lifts the front edge
        Joint("lid_hinge", "revolute", "body", "lid", axis=(0.0, -1.0, 0.0),
              origin_xyz=(-hx, 0.0, hz + lth), limit_lower=0.0, limit_upper=upper),
    ]
    if spec["pedal"]:
        links.append(Link("pedal", (0.03, 0.04, 0.015), colors[2]))
        joints.append(Joint("pedal_mount", "fixed", "body", "pedal",
                            origin_xyz=(hx + 0.03, 0.0, -hz + 0.05)))
    return links, joints


def _build_drawer(rng, spec) -> tuple[list[Link], list[Joint]]:
    hx, hy, hz = (_u(rng, spec["body_hx"]), _u(rng, spec["body_hy"]), _u(rng, spec["body_hz"]))
    dx = _u(rng, spec["drawer_scale_x"]) * hx
    dy = _u(rng, spec["drawer_scale_y"]) * hy
    dz = _u(rng, spec["drawer_scale_z"]) * hz
    travel = _u(rng, spec["travel"])
    colors = _distinct_colors(rng, 2 + bool(spec["knob"]))
    lip = 0.02  # drawer face sits proud of the body front when closed
    links = [
        Link("body", (hx, hy, hz), colors[0]),
        Link("drawer", (dx, dy, dz), colors[1]),
    ]
    joints = [
        Joint("drawer_slide", "prismatic", "body", "drawer", axis=(1.0, 0.0, 0.0),
              origin_xyz=(hx + lip - dx, 0.0, -(0.95 * hz - dz)),
              limit_lower=0.0, limit_upper=travel),
    ]
    if spec["knob"]:
        links.append(Link("knob", (0.012, 0.02, 0.02), colors[2]))
        joints.append(Joint("knob_mount", "fixed", "drawer", "knob",
                            origin_xyz=(dx + 0.012, 0.0, 0.0)))
    return links, joints


_BUILDERS = {
    "front_door": _build_front_door,
    "top_lid": _build_top_lid,
    "drawer": _build_drawer,
}


def generate_procedural(
    category: str, seed: int, config: dict[str, Any] | None = None
) -> ObjectModel:
    """Deterministically build one object instance of a procedural category."""
    cfg = config or DEFAULT_CATEGORY_CONFIG
    try:
        spec = cfg["categories"][category]
    except KeyError:
        known = ", ".join(sorted(cfg["categories"]))
        raise ModelError(f"unknown category {category!r} (known: {known})") from None
    kind = spec.get("kind")
    if kind not in _BUILDERS:
        raise ModelError(f"category {category!r}: unknown builder kind {kind!r}")
    rng = np.random.default_rng([zlib.crc32(category.encode("utf-8")), seed & 0xFFFFFFFF])
    links, joints = _BUILDERS[kind](rng, spec)
    return build_model(links, joints, model_id=f"{category}#{seed}")
