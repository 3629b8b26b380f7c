"""Deterministic software rasterizer.

Renders an articulated-object state to a fixed-size RGB frame: pinhole
perspective projection, per-link cuboids split into 12 triangles, z-buffered
flat Lambertian shading (0.3 ambient + 0.7 directional). No anti-aliasing and
no randomness, so equal inputs yield bitwise-equal images on every backend.

With the default camera (eye on +x looking at the origin, up = +z), world -y
appears screen-right and +z screen-up; fronts of objects face +x.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import RenderError
from .kinematics import ObjectModel, ObjectState, forward_kinematics, make_transform

_DEF_LIGHT = (0.35, -0.25, 0.9)


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise RenderError("zero-length direction vector")
    return v / n


@dataclass(frozen=True, eq=False)
class CameraConfig:
    eye: tuple[float, float, float] = (2.5, 0.0, 1.2)
    look_at: tuple[float, float, float] = (0.0, 0.0, 0.0)
    up: tuple[float, float, float] = (0.0, 0.0, 1.0)
    vertical_fov: float = math.radians(50.0)
    near: float = 0.05
    far: float = 100.0
    background: tuple[float, float, float] = (0.15, 0.15, 0.18)
    light_direction: tuple[float, float, float] = _DEF_LIGHT

    def __post_init__(self):
        if not 0.0 < self.vertical_fov < math.pi:
            raise RenderError(f"vertical_fov must lie in (0, pi), got {self.vertical_fov}")
        if not 0.0 < self.near < self.far:
            raise RenderError(f"need 0 < near < far, got near={self.near} far={self.far}")
        fwd = np.asarray(self.look_at, dtype=np.float64) - np.asarray(self.eye, dtype=np.float64)
        if np.linalg.norm(fwd) == 0.0:
            raise RenderError("eye and look_at coincide")
        if np.linalg.norm(np.cross(self.up, fwd)) < 1e-12:
            raise RenderError("up vector is parallel to the view direction")

    def basis(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(eye, right, up', forward) with right = normalize(up x forward)."""
        eye = np.asarray(self.eye, dtype=np.float64)
        fwd = _unit(np.asarray(self.look_at, dtype=np.float64) - eye)
        right = _unit(np.cross(self.up, fwd))
        up = np.cross(fwd, right)
        return eye, right, up, fwd


DEFAULT_CAMERA = CameraConfig()


@dataclass(frozen=True)
class ImageRGB:
    width: int
    height: int
    pixels: bytes = field(repr=False)

    def __post_init__(self):
        if len(self.pixels) != self.width * self.height * 3:
            raise RenderError(
                f"pixel buffer has {len(self.pixels)} bytes, expected "
                f"{self.width * self.height * 3}"
            )

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(self.height, self.width, 3)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "ImageRGB":
        arr = np.ascontiguousarray(arr, dtype=np.uint8)
        h, w, c = arr.shape
        if c != 3:
            raise RenderError("image array must be HxWx3")
        return cls(width=w, height=h, pixels=arr.tobytes())

    def save_png(self, path) -> None:
        from PIL import Image

        Image.fromarray(self.to_array(), mode="RGB").save(path, format="PNG")

    @classmethod
    def load_png(cls, path) -> "ImageRGB":
        from PIL import Image

        with Image.open(path) as im:
            return cls.from_array(np.asarray(im.convert("RGB")))

    def save_raw(self, path) -> None:
        """Raw dump: u32le width, u32le height, then RGB bytes (golden tests)."""
        with open(path, "wb") as fh:
            fh.write(struct.pack("<II", self.width, self.height))
            fh.write(self.pixels)

    @classmethod
    def load_raw(cls, path) -> "ImageRGB":
        with open(path, "rb") as fh:
            w, h = struct.unpack("<II", fh.read(8))
            return cls(width=w, height=h, pixels=fh.read(w * h * 3))


# cuboid corner i has sign bits (x, y, z) = (i>>2, i>>1, i) & 1; faces carry
# their outward local normal so shading never depends on triangle winding
_CORNER_SIGNS = np.array(
    [[(-1, 1)[(i >> 2) & 1], (-1, 1)[(i >> 1) & 1], (-1, 1)[i & 1]] for i in range(8)],
    dtype=np.float64,
)
_FACES = (
    ((4, 5, 7, 6), (1.0, 0.0, 0.0)),
    ((0, 2, 3, 1), (-1.0, 0.0, 0.0)),
    ((2, 6, 7, 3), (0.0, 1.0, 0.0)),
    ((0, 1, 5, 4), (0.0, -1.0, 0.0)),
    ((1, 3, 7, 5), (0.0, 0.0, 1.0)),
    ((0, 4, 6, 2), (0.0, 0.0, -1.0)),
)


def _link_triangles(half_extents: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(12, 3, 3) local triangle vertices and (12, 3) local face normals."""
    corners = _CORNER_SIGNS * half_extents
    tris = np.empty((12, 3, 3))
    normals = np.empty((12, 3))
    for f, (quad, normal) in enumerate(_FACES):
        a, b, c, d = quad
        tris[2 * f] = corners[[a, b, c]]
        tris[2 * f + 1] = corners[[a, c, d]]
        normals[2 * f] = normal
        normals[2 * f + 1] = normal
    return tris, normals


def render(
    model: ObjectModel,
    state: ObjectState,
    camera: CameraConfig = DEFAULT_CAMERA,
    size: tuple[int, int] = (64, 64),
    part_link: str | None = None,
    part_offset=None,
) -> ImageRGB:
    """Rasterize one state. ``part_link``/``part_offset`` rigidly displace the
    named link's subtree (dataset device for part removal/insertion)."""
    width, height = int(size[0]), int(size[1])
    if width <= 0 or height <= 0:
        raise RenderError(f"image size must be positive, got {size}")
    img = np.empty((height, width, 3), dtype=np.float64)
    img[:, :] = np.asarray(camera.background, dtype=np.float64)
    zbuf = np.zeros((height, width), dtype=np.float64)

    if state.present:
        offset_links: frozenset[str] = frozenset()
        if part_link is not None and part_offset is not None:
            offset_links = frozenset(model.subtree_links(part_link))
        light = _unit(camera.light_direction)
        transforms = forward_kinematics(model, state)
        tri_list, color_list = [], []
        for link in model.links:
            tv = transforms[link.name] @ make_transform(link.visual_xyz, link.visual_rpy)
            rot, trans = tv[:3, :3], tv[:3, 3]
            if link.name in offset_links:
                trans = trans + np.asarray(part_offset, dtype=np.float64)
            tris, normals = _link_triangles(link.half_extents)
            world = tris @ rot.T + trans
            n_world = normals @ rot.T
            lambert = np.maximum(n_world @ light, 0.0)
            shade = 0.3 + 0.7 * lambert
            tri_list.append(world)
            color_list.append(shade[:, None] * link.color)
        world = np.concatenate(tri_list, axis=0)
        colors = np.concatenate(color_list, axis=0)

        eye, right, up, fwd = camera.basis()
        rel = world - eye
        z = rel @ fwd
        keep = np.all((z > camera.near) & (z < camera.far), axis=1)
        if keep.any():
            world, colors, z = world[keep], colors[keep], z[keep]
            rel = world - eye
            x = rel @ right
            y = rel @ up
            tan_half = math.tan(camera.vertical_fov / 2.0)
            aspect = width / height
            sx = width * 0.5 + (x / (z * tan_half * aspect)) * (width * 0.5)
            sy = height * 0.5 - (y / (z * tan_half)) * (height * 0.5)
            xy = np.ascontiguousarray(np.stack([sx, sy], axis=-1))
            invz = np.ascontiguousarray(1.0 / z)
            backend.rasterize_triangles(xy, invz, np.ascontiguousarray(colors), img, zbuf)

    quantized = np.clip(np.rint(img * 255.0), 0.0, 255.0).astype(np.uint8)
    return ImageRGB.from_array(quantized)


def empty_scene(camera: CameraConfig = DEFAULT_CAMERA, size: tuple[int, int] = (64, 64)) -> ImageRGB:
    """The background-only frame (what an absent object renders as)."""
    width, height = int(size[0]), int(size[1])
    if width <= 0 or height <= 0:
        raise RenderError(f"image size must be positive, got {size}")
    bg = np.asarray(camera.background, dtype=np.float64)
    row = np.clip(np.rint(bg * 255.0), 0.0, 255.0).astype(np.uint8)
    arr = np.broadcast_to(row, (height, width, 3))
    return ImageRGB.from_array(arr)


def render_trajectory(
    model: ObjectModel,
    states,
    camera: CameraConfig = DEFAULT_CAMERA,
    size: tuple[int, int] = (64, 64),
    part_link: str | None = None,
    part_offsets=None,
) -> list[ImageRGB]:
    """Element-wise render of a state sequence (length preserved)."""
    states = list(states)
    if not states:
        raise RenderError("state sequence is empty")
    if part_offsets is not None and len(part_offsets) != len(states):
        raise RenderError("part_offsets length must match the state sequence")
    out = []
    for i, st in enumerate(states):
        off = None if part_offsets is None else part_offsets[i]
        out.append(render(model, st, camera, size, part_link=part_link, part_offset=off))
    return out
