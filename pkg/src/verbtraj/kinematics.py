"""Articulated-object models: URDF-subset parsing, validation, forward
kinematics, and per-timestep state updates.

A model is a tree of box-shaped links connected by revolute, prismatic, or
fixed joints. A state is the 6-DoF root pose (x, y, z, roll, pitch, yaw with
fixed-axis XYZ Euler angles) plus one position per non-fixed joint, in
document order. All functions are pure; models and states are immutable.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import KinematicsError, ModelError, UrdfError

JOINT_KINDS = ("revolute", "prismatic", "fixed")

_AXIS_NORM_TOL = 1e-9


def _as_vec3(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64).reshape(-1)
    if arr.shape != (3,):
        raise ModelError(f"{name} must be a 3-vector, got shape {arr.shape}")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Joint:
    name: str
    kind: str
    parent: str
    child: str
    axis: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    origin_xyz: np.ndarray = field(default_factory=lambda: np.zeros(3))
    origin_rpy: np.ndarray = field(default_factory=lambda: np.zeros(3))
    limit_lower: float | None = None
    limit_upper: float | None = None

    def __post_init__(self):
        if self.kind not in JOINT_KINDS:
            raise ModelError(f"joint {self.name!r}: unsupported kind {self.kind!r}")
        axis = _as_vec3(self.axis, f"joint {self.name!r} axis")
        norm = float(np.linalg.norm(axis))
        if abs(norm - 1.0) > _AXIS_NORM_TOL:
            raise ModelError(f"joint {self.name!r}: axis must have unit norm, got {norm}")
        object.__setattr__(self, "axis", _frozen(axis))
        object.__setattr__(self, "origin_xyz", _frozen(_as_vec3(self.origin_xyz, "origin xyz")))
        object.__setattr__(self, "origin_rpy", _frozen(_as_vec3(self.origin_rpy, "origin rpy")))
        if self.kind == "fixed":
            if self.limit_lower is not None or self.limit_upper is not None:
                raise ModelError(f"joint {self.name!r}: fixed joints take no limits")
        else:
            if self.limit_lower is None or self.limit_upper is None:
                raise ModelError(f"joint {self.name!r}: {self.kind} joint missing limits")
            if not (self.limit_lower <= self.limit_upper):
                raise ModelError(
                    f"joint {self.name!r}: limit_lower {self.limit_lower} exceeds "
                    f"limit_upper {self.limit_upper}"
                )

    @property
    def movable(self) -> bool:
        return self.kind != "fixed"


@dataclass(frozen=True, eq=False)
class Link:
    name: str
    half_extents: np.ndarray
    color: np.ndarray = field(default_factory=lambda: np.array([0.8, 0.8, 0.8]))
    visual_xyz: np.ndarray = field(default_factory=lambda: np.zeros(3))
    visual_rpy: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        he = _as_vec3(self.half_extents, f"link {self.name!r} half_extents")
        if not np.all(he > 0):
            raise ModelError(f"link {self.name!r}: half-extents must be strictly positive")
        color = _as_vec3(self.color, f"link {self.name!r} color")
        if np.any(color < 0) or np.any(color > 1):
            raise ModelError(f"link {self.name!r}: color components must lie in [0, 1]")
        object.__setattr__(self, "half_extents", _frozen(he))
        object.__setattr__(self, "color", _frozen(color))
        object.__setattr__(self, "visual_xyz", _frozen(_as_vec3(self.visual_xyz, "visual xyz")))
        object.__setattr__(self, "visual_rpy", _frozen(_as_vec3(self.visual_rpy, "visual rpy")))


@dataclass(frozen=True, eq=False)
class ObjectModel:
    links: tuple[Link, ...]
    joints: tuple[Joint, ...]
    root: str
    model_id: str = ""

    @property
    def n_dof(self) -> int:
        return sum(1 for j in self.joints if j.movable)

    @property
    def movable_joints(self) -> tuple[Joint, ...]:
        return tuple(j for j in self.joints if j.movable)

    def link(self, name: str) -> Link:
        for ln in self.links:
            if ln.name == name:
                return ln
        raise ModelError(f"unknown link {name!r}")

    def movable_joint(self, index: int = 0) -> Joint:
        movables = self.movable_joints
        if not movables:
            raise ModelError(f"model {self.model_id!r} has no movable joint")
        if not 0 <= index < len(movables):
            raise ModelError(f"movable joint index {index} out of range (n_dof={len(movables)})")
        return movables[index]

    def dof_index(self, joint_name: str) -> int:
        """Position of a movable joint inside the joint_positions vector."""
        idx = 0
        for j in self.joints:
            if j.name == joint_name:
                if not j.movable:
                    raise ModelError(f"joint {joint_name!r} is fixed")
                return idx
            if j.movable:
                idx += 1
        raise ModelError(f"unknown joint {joint_name!r}")

    def subtree_links(self, link_name: str) -> tuple[str, ...]:
        """Names of link_name and every link below it in the joint tree."""
        children: dict[str, list[str]] = {}
        for j in self.joints:
            children.setdefault(j.parent, []).append(j.child)
        out: list[str] = []
        stack = [link_name]
        while stack:
            cur = stack.pop()
            out.append(cur)
            stack.extend(children.get(cur, ()))
        return tuple(out)


def build_model(links, joints, model_id: str = "") -> ObjectModel:
    """Validate the link/joint tree and return an immutable model."""
    links = tuple(links)
    joints = tuple(joints)
    link_names = [ln.name for ln in links]
    if len(set(link_names)) != len(link_names):
        raise ModelError("duplicate link names")
    joint_names = [j.name for j in joints]
    if len(set(joint_names)) != len(joint_names):
        raise ModelError("duplicate joint names")
    name_set = set(link_names)
    children = set()
    for j in joints:
        if j.parent not in name_set:
            raise ModelError(f"joint {j.name!r} references unknown link {j.parent!r}")
        if j.child not in name_set:
            raise ModelError(f"joint {j.name!r} references unknown link {j.child!r}")
        if j.child in children:
            raise ModelError(f"link {j.child!r} has multiple parent joints")
        children.add(j.child)
    roots = [n for n in link_names if n not in children]
    if len(roots) != 1:
        raise ModelError(f"model must have exactly one root link, found {len(roots)}")
    # reachability from the root rules out cycles among the remaining links
    child_map: dict[str, list[str]] = {}
    for j in joints:
        child_map.setdefault(j.parent, []).append(j.child)
    seen = set()
    stack = [roots[0]]
    while stack:
        cur = stack.pop()
        seen.add(cur)
        stack.extend(child_map.get(cur, ()))
    if seen != name_set:
        raise ModelError("cyclic joint graph: some links are unreachable from the root")
    return ObjectModel(links=links, joints=joints, root=roots[0], model_id=model_id)


@dataclass(frozen=True, eq=False)
class ObjectState:
    root_pose: np.ndarray
    joint_positions: np.ndarray
    present: bool = True

    def __post_init__(self):
        pose = np.asarray(self.root_pose, dtype=np.float64).reshape(-1)
        if pose.shape != (6,):
            raise KinematicsError(f"root_pose must have 6 components, got {pose.shape}")
        q = np.asarray(self.joint_positions, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "root_pose", _frozen(pose))
        object.__setattr__(self, "joint_positions", _frozen(q))

    def with_present(self, present: bool) -> "ObjectState":
        return replace(self, present=present)


def zero_state(model: ObjectModel) -> ObjectState:
    return ObjectState(np.zeros(6), np.zeros(model.n_dof))


def euler_xyz_to_matrix(rpy) -> np.ndarray:
    """Fixed-axis XYZ Euler angles (URDF rpy convention): R = Rz @ Ry @ Rx."""
    r, p, y = float(rpy[0]), float(rpy[1]), float(rpy[2])
    cr, sr = math.cos(r), math.sin(r)
    cp, sp = math.cos(p), math.sin(p)
    cy, sy = math.cos(y), math.sin(y)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def rotation_about_axis(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    kx, ky, kz = float(axis[0]), float(axis[1]), float(axis[2])
    c, s = math.cos(angle), math.sin(angle)
    cc = 1.0 - c
    return np.array(
        [
            [c + kx * kx * cc, kx * ky * cc - kz * s, kx * kz * cc + ky * s],
            [ky * kx * cc + kz * s, c + ky * ky * cc, ky * kz * cc - kx * s],
            [kz * kx * cc - ky * s, kz * ky * cc + kx * s, c + kz * kz * cc],
        ]
    )


def make_transform(xyz, rpy) -> np.ndarray:
    t = np.eye(4)
    t[:3, :3] = euler_xyz_to_matrix(rpy)
    t[:3, 3] = np.asarray(xyz, dtype=np.float64)
    return t


def pose_to_matrix(pose6) -> np.ndarray:
    pose6 = np.asarray(pose6, dtype=np.float64)
    return make_transform(pose6[:3], pose6[3:])


def _joint_motion(joint: Joint, q: float) -> np.ndarray:
    t = np.eye(4)
    if joint.kind == "revolute":
        t[:3, :3] = rotation_about_axis(joint.axis, q)
    elif joint.kind == "prismatic":
        t[:3, 3] = joint.axis * q
    return t


def forward_kinematics(model: ObjectModel, state: ObjectState) -> dict[str, np.ndarray]:
    """World transform of every link frame for the given state."""
    if state.joint_positions.shape != (model.n_dof,):
        raise KinematicsError(
            f"state has {state.joint_positions.shape[0]} joint positions, "
            f"model expects {model.n_dof}"
        )
    dof_of = {}
    idx = 0
    for j in model.joints:
        if j.movable:
            dof_of[j.name] = idx
            idx += 1
    transforms = {model.root: pose_to_matrix(state.root_pose)}
    joints_of: dict[str, list[Joint]] = {}
    for j in model.joints:
        joints_of.setdefault(j.parent, []).append(j)
    stack = [model.root]
    while stack:
        parent = stack.pop()
        for j in joints_of.get(parent, ()):
            q = state.joint_positions[dof_of[j.name]] if j.movable else 0.0
            transforms[j.child] = (
                transforms[parent]
                @ make_transform(j.origin_xyz, j.origin_rpy)
                @ _joint_motion(j, q)
            )
            stack.append(j.child)
    return transforms


def clip_joint_positions(model: ObjectModel, q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64).copy()
    for i, j in enumerate(model.movable_joints):
        q[i] = min(max(q[i], j.limit_lower), j.limit_upper)
    return q


def apply_delta(model: ObjectModel, state: ObjectState, delta) -> ObjectState:
    """Increment the root pose and joint positions; joints clamp to limits."""
    delta = np.asarray(delta, dtype=np.float64).reshape(-1)
    expected = 6 + model.n_dof
    if delta.shape != (expected,):
        raise KinematicsError(f"delta must have length {expected}, got {delta.shape[0]}")
    pose = state.root_pose + delta[:6]
    q = clip_joint_positions(model, state.joint_positions + delta[6:])
    return ObjectState(pose, q, present=state.present)


# --- URDF subset ---------------------------------------------------------

_LINK_CHILD_TAGS = {"visual"}
_VISUAL_CHILD_TAGS = {"geometry", "origin", "material"}
_JOINT_CHILD_TAGS = {"origin", "axis", "limit", "parent", "child"}


def _parse_floats(text: str | None, n: int, what: str) -> np.ndarray:
    if text is None:
        raise UrdfError(f"{what}: missing value")
    parts = text.split()
    if len(parts) != n:
        raise UrdfError(f"{what}: expected {n} numbers, got {text!r}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise UrdfError(f"{what}: {exc}") from None


def _parse_link(el: ET.Element) -> Link:
    name = el.get("name")
    if not name:
        raise UrdfError("link missing name attribute")
    for child in el:
        if child.tag not in _LINK_CHILD_TAGS:
            raise UrdfError(f"link {name!r}: unsupported element {child.tag!r}")
    visual = el.find("visual")
    if visual is None:
        raise UrdfError(f"link {name!r}: missing box visual")
    for child in visual:
        if child.tag not in _VISUAL_CHILD_TAGS:
            raise UrdfError(f"link {name!r}: unsupported element {child.tag!r}")
    geom = visual.find("geometry")
    if geom is None:
        raise UrdfError(f"link {name!r}: visual missing geometry")
    shapes = list(geom)
    if len(shapes) != 1 or shapes[0].tag != "box":
        bad = shapes[0].tag if shapes else "empty"
        raise UrdfError(f"link {name!r}: non-box geometry {bad!r}")
    size = _parse_floats(shapes[0].get("size"), 3, f"link {name!r} box size")
    xyz = np.zeros(3)
    rpy = np.zeros(3)
    origin = visual.find("origin")
    if origin is not None:
        if origin.get("xyz") is not None:
            xyz = _parse_floats(origin.get("xyz"), 3, f"link {name!r} origin xyz")
        if origin.get("rpy") is not None:
            rpy = _parse_floats(origin.get("rpy"), 3, f"link {name!r} origin rpy")
    color = np.array([0.8, 0.8, 0.8])
    material = visual.find("material")
    if material is not None:
        color_el = material.find("color")
        if color_el is not None:
            rgba = _parse_floats(color_el.get("rgba"), 4, f"link {name!r} color rgba")
            color = rgba[:3]
    try:
        return Link(name=name, half_extents=size / 2.0, color=color, visual_xyz=xyz, visual_rpy=rpy)
    except ModelError as exc:
        raise UrdfError(str(exc)) from None


def _parse_joint(el: ET.Element) -> Joint:
    name = el.get("name")
    if not name:
        raise UrdfError("joint missing name attribute")
    kind = el.get("type")
    if kind not in JOINT_KINDS:
        raise UrdfError(f"joint {name!r}: unsupported joint type {kind!r}")
    for child in el:
        if child.tag not in _JOINT_CHILD_TAGS:
            raise UrdfError(f"joint {name!r}: unsupported element {child.tag!r}")
    parent_el = el.find("parent")
    child_el = el.find("child")
    if parent_el is None or parent_el.get("link") is None:
        raise UrdfError(f"joint {name!r}: missing parent link")
    if child_el is None or child_el.get("link") is None:
        raise UrdfError(f"joint {name!r}: missing child link")
    xyz = np.zeros(3)
    rpy = np.zeros(3)
    origin = el.find("origin")
    if origin is not None:
        if origin.get("xyz") is not None:
            xyz = _parse_floats(origin.get("xyz"), 3, f"joint {name!r} origin xyz")
        if origin.get("rpy") is not None:
            rpy = _parse_floats(origin.get("rpy"), 3, f"joint {name!r} origin rpy")
    axis = np.array([1.0, 0.0, 0.0])
    axis_el = el.find("axis")
    if axis_el is not None:
        axis = _parse_floats(axis_el.get("xyz"), 3, f"joint {name!r} axis")
        norm = float(np.linalg.norm(axis))
        if norm < _AXIS_NORM_TOL:
            raise UrdfError(f"joint {name!r}: zero axis")
        if abs(norm - 1.0) > _AXIS_NORM_TOL:  # keep already-unit axes bit-exact
            axis = axis / norm
    lower = upper = None
    limit_el = el.find("limit")
    if kind != "fixed":
        if limit_el is None or limit_el.get("lower") is None or limit_el.get("upper") is None:
            raise UrdfError(f"joint {name!r}: {kind} joint missing limits")
        lower = float(limit_el.get("lower"))
        upper = float(limit_el.get("upper"))
    elif limit_el is not None:
        raise UrdfError(f"joint {name!r}: fixed joints take no limits")
    try:
        return Joint(
            name=name, kind=kind, parent=parent_el.get("link"), child=child_el.get("link"),
            axis=axis, origin_xyz=xyz, origin_rpy=rpy, limit_lower=lower, limit_upper=upper,
        )
    except ModelError as exc:
        raise UrdfError(str(exc)) from None


def parse_urdf(text: str, model_id: str = "") -> ObjectModel:
    """Parse the supported URDF subset into a validated ObjectModel.

    Supported elements: robot, link/visual/{geometry/box, origin, material/color},
    joint[type in revolute|prismatic|fixed]/{origin, axis, limit, parent, child}.
    Anything else raises UrdfError.
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise UrdfError(f"malformed XML: {exc}") from None
    if root.tag != "robot":
        raise UrdfError(f"document root must be <robot>, got <{root.tag}>")
    links: list[Link] = []
    joints: list[Joint] = []
    for el in root:
        if el.tag == "link":
            links.append(_parse_link(el))
        elif el.tag == "joint":
            joints.append(_parse_joint(el))
        else:
            raise UrdfError(f"unsupported element {el.tag!r} under <robot>")
    if not links:
        raise UrdfError("document declares no links")
    try:
        return build_model(links, joints, model_id=model_id or root.get("name", ""))
    except ModelError as exc:
        raise UrdfError(str(exc)) from None


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def model_to_urdf(model: ObjectModel) -> str:
    """Serialize back to the supported subset; parse_urdf round-trips it."""
    robot = ET.Element("robot", name=model.model_id or "object")
    for ln in model.links:
        link_el = ET.SubElement(robot, "link", name=ln.name)
        visual = ET.SubElement(link_el, "visual")
        ET.SubElement(visual, "origin", xyz=_fmt(ln.visual_xyz), rpy=_fmt(ln.visual_rpy))
        geom = ET.SubElement(visual, "geometry")
        ET.SubElement(geom, "box", size=_fmt(ln.half_extents * 2.0))
        material = ET.SubElement(visual, "material", name=f"{ln.name}_color")
        ET.SubElement(material, "color", rgba=_fmt(list(ln.color) + [1.0]))
    for j in model.joints:
        joint_el = ET.SubElement(robot, "joint", name=j.name, type=j.kind)
        ET.SubElement(joint_el, "origin", xyz=_fmt(j.origin_xyz), rpy=_fmt(j.origin_rpy))
        ET.SubElement(joint_el, "parent", link=j.parent)
        ET.SubElement(joint_el, "child", link=j.child)
        ET.SubElement(joint_el, "axis", xyz=_fmt(j.axis))
        if j.movable:
            ET.SubElement(joint_el, "limit", lower=repr(j.limit_lower), upper=repr(j.limit_upper))
    ET.indent(robot)
    return ET.tostring(robot, encoding="unicode")


def models_equal(a: ObjectModel, b: ObjectModel) -> bool:
    """Field-wise equality on every link and joint (bitwise on numbers)."""
    if len(a.links) != len(b.links) or len(a.joints) != len(b.joints) or a.root != b.root:
        return False
    for la, lb in zip(a.links, b.links):
        if la.name != lb.name:
            return False
        for f in ("half_extents", "color", "visual_xyz", "visual_rpy"):
            if not np.array_equal(getattr(la, f), getattr(lb, f)):
                return False
    for ja, jb in zip(a.joints, b.joints):
        if (ja.name, ja.kind, ja.parent, ja.child) != (jb.name, jb.kind, jb.parent, jb.child):
            return False
        if (ja.limit_lower, ja.limit_upper) != (jb.limit_lower, jb.limit_upper):
            return False
        for f in ("axis", "origin_xyz", "origin_rpy"):
            if not np.array_equal(getattr(ja, f), getattr(jb, f)):
                return False
    return True
