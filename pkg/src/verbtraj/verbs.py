"""The verb vocabulary and canonical labeled trajectories.

Fifteen classes: six whole-object translations, whole-object removal, part
removal/insertion, open/close of the selected joint, three rotations, and a
"None" class where two motions happen at once. Every trajectory has 21 states
linearly interpolated between a canonical initiation and termination chosen
to be maximally distinct.

Screen conventions (fixed default camera, +x toward the viewer): Push recedes
(-x), Pull approaches (+x), Raise/Lower are world +/-z, TranslateLeft is +y
(screen-left), TranslateRight is -y. Rotations: Roll 90 deg about x (screen
plane), Turn 90 deg about z, Flip 270 deg about y. Whole-object and part
removal slide out of the view frustum (+y and +z respectively).
"""

from __future__ import annotations

import enum
import math
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import DatasetError
from .kinematics import ObjectModel, ObjectState
from .render import DEFAULT_CAMERA, CameraConfig, ImageRGB, render, render_trajectory

N_FRAMES = 21
N_STEPS = N_FRAMES - 1


class Verb(enum.Enum):
    PUSH = 0
    PULL = 1
    RAISE = 2
    LOWER = 3
    TRANSLATE_LEFT = 4
    TRANSLATE_RIGHT = 5
    REMOVE_WHOLE = 6
    REMOVE_PART = 7
    INSERT_PART = 8
    OPEN = 9
    CLOSE = 10
    ROLL = 11
    TURN = 12
    FLIP = 13
    NONE = 14

    @property
    def index(self) -> int:
        return self.value

    @property
    def label(self) -> str:
        return _LABELS[self.value]

    @classmethod
    def from_label(cls, label: str) -> "Verb":
        try:
            return cls(_LABELS.index(label))
        except ValueError:
            raise DatasetError(
                f"unknown verb {label!r}; valid verbs: {', '.join(_LABELS)}"
            ) from None


_LABELS = (
    "Push", "Pull", "Raise", "Lower", "TranslateLeft", "TranslateRight",
    "RemoveWhole", "RemovePart", "InsertPart", "Open", "Close",
    "Roll", "Turn", "Flip", "None",
)

N_CLASSES = len(_LABELS)
ALL_VERBS = tuple(Verb)
SINGLE_VERBS = tuple(v for v in Verb if v is not Verb.NONE)

# verbs that articulate or detach a part need a movable joint
JOINT_VERBS = frozenset({Verb.OPEN, Verb.CLOSE, Verb.REMOVE_PART, Verb.INSERT_PART})

# pose vector layout: (x, y, z, roll, pitch, yaw)
FLIP_TOTAL = 1.5 * math.pi  # 270 degrees
_POSE_TOTALS: dict[Verb, tuple[int, float]] = {
    Verb.PUSH: (0, -2.0),
    Verb.PULL: (0, 1.2),
    Verb.RAISE: (2, 0.8),
    Verb.LOWER: (2, -0.8),
    Verb.TRANSLATE_LEFT: (1, 0.8),
    Verb.TRANSLATE_RIGHT: (1, -0.8),
    Verb.REMOVE_WHOLE: (1, 4.0),
    Verb.ROLL: (3, 0.5 * math.pi),
    Verb.TURN: (5, 0.5 * math.pi),
    Verb.FLIP: (4, FLIP_TOTAL),
}
PART_TOTAL = 4.0  # +z slide that takes a part out of the frustum

# exclusive degree-of-freedom groups; "None" draws two verbs from different
# groups so at least two groups change at once
_DOF_GROUP: dict[Verb, str] = {
    Verb.PUSH: "x", Verb.PULL: "x",
    Verb.TRANSLATE_LEFT: "y", Verb.TRANSLATE_RIGHT: "y", Verb.REMOVE_WHOLE: "y",
    Verb.RAISE: "z", Verb.LOWER: "z",
    Verb.ROLL: "roll", Verb.FLIP: "pitch", Verb.TURN: "yaw",
    Verb.OPEN: "joint", Verb.CLOSE: "joint",
    Verb.REMOVE_PART: "part", Verb.INSERT_PART: "part",
}


def dof_group(verb: Verb) -> str:
    return _DOF_GROUP[verb]


def canonical_pose_delta(verb: Verb) -> np.ndarray:
    """Per-step root-pose delta of a single verb (zeros for joint/part verbs)."""
    delta = np.zeros(6)
    if verb in _POSE_TOTALS:
        idx, total = _POSE_TOTALS[verb]
        delta[idx] = total / N_STEPS
    return delta


@dataclass(frozen=True, eq=False)
class Trajectory:
    model: ObjectModel
    category: str
    verb: Verb
    states: tuple[ObjectState, ...]
    seed: int
    part_link: str | None = None
    part_offsets: np.ndarray | None = None  # (N_FRAMES, 3) render metadata

    def __post_init__(self):
        if len(self.states) != N_FRAMES:
            raise DatasetError(f"trajectory must have {N_FRAMES} states, got {len(self.states)}")

    @property
    def model_id(self) -> str:
        return self.model.model_id

    def render_frames(
        self,
        camera: CameraConfig = DEFAULT_CAMERA,
        size: tuple[int, int] = (64, 64),
        indices=None,
    ) -> list[ImageRGB]:
        if indices is None:
            return render_trajectory(
                self.model, self.states, camera, size,
                part_link=self.part_link, part_offsets=self.part_offsets,
            )
        out = []
        for i in indices:
            off = None if self.part_offsets is None else self.part_offsets[i]
            out.append(
                render(self.model, self.states[i], camera, size,
                       part_link=self.part_link, part_offset=off)
            )
        return out


def closed_joint_positions(model: ObjectModel) -> np.ndarray:
    return np.array([j.limit_lower for j in model.movable_joints], dtype=np.float64)


def canonical_initiation(model: ObjectModel, verb: Verb, joint_index: int = 0) -> ObjectState:
    """Initiation state: object at the origin, joints closed (Close starts open)."""
    q = closed_joint_positions(model)
    if verb is Verb.CLOSE:
        j = model.movable_joint(joint_index)
        q[model.dof_index(j.name)] = j.limit_upper
    return ObjectState(np.zeros(6), q)


def _require_joint(model: ObjectModel, verb: Verb, joint_index: int):
    if not model.movable_joints:
        raise DatasetError(
            f"verb {verb.label} requires a movable joint but model "
            f"{model.model_id!r} has none"
        )
    return model.movable_joint(joint_index)


def make_verb_trajectory(
    model: ObjectModel,
    verb: Verb,
    seed: int = 0,
    category: str = "",
    joint_index: int = 0,
) -> Trajectory:
    """Canonical 21-frame trajectory of a single verb on the given model."""
    if verb is Verb.NONE:
        raise DatasetError("make_verb_trajectory does not take the None label; "
                           "use make_none_trajectory")
    if verb in JOINT_VERBS:
        _require_joint(model, verb, joint_index)

    q0 = closed_joint_positions(model)
    part_link = None
    part_offsets = None

    if verb is Verb.OPEN or verb is Verb.CLOSE:
        joint = model.movable_joint(joint_index)
        di = model.dof_index(joint.name)
        values = np.linspace(joint.limit_lower, joint.limit_upper, N_FRAMES)
        states = []
        for t in range(N_FRAMES):
            q = q0.copy()
            q[di] = values[t]
            states.append(ObjectState(np.zeros(6), q))
        if verb is Verb.CLOSE:
            states = states[::-1]  # exact time-reverse of Open
    elif verb is Verb.REMOVE_PART or verb is Verb.INSERT_PART:
        joint = model.movable_joint(joint_index)
        part_link = joint.child
        offsets = np.zeros((N_FRAMES, 3))
        offsets[:, 2] = np.linspace(0.0, PART_TOTAL, N_FRAMES)
        if verb is Verb.INSERT_PART:
            offsets = offsets[::-1].copy()  # exact time-reverse of RemovePart
        part_offsets = offsets
        states = [ObjectState(np.zeros(6), q0) for _ in range(N_FRAMES)]
    else:
        idx, total = _POSE_TOTALS[verb]
        values = np.linspace(0.0, total, N_FRAMES)
        states = []
        for t in range(N_FRAMES):
            pose = np.zeros(6)
            pose[idx] = values[t]
            present = not (verb is Verb.REMOVE_WHOLE and t == N_STEPS)
            states.append(ObjectState(pose, q0, present=present))

    return Trajectory(
        model=model, category=category, verb=verb, states=tuple(states),
        seed=seed, part_link=part_link, part_offsets=part_offsets,
    )


def _none_pool(model: ObjectModel) -> list[Verb]:
    pool = [Verb.PUSH, Verb.PULL, Verb.RAISE, Verb.LOWER,
            Verb.TRANSLATE_LEFT, Verb.TRANSLATE_RIGHT,
            Verb.ROLL, Verb.TURN, Verb.FLIP]
    if model.movable_joints:
        pool.append(Verb.OPEN)
    return pool


def make_none_trajectory(
    model: ObjectModel, seed: int = 0, category: str = "", joint_index: int = 0
) -> Trajectory:
    """Two distinct verbs from different DoF groups applied simultaneously."""
    rng = np.random.default_rng(
        [zlib.crc32(b"none"), zlib.crc32(model.model_id.encode("utf-8")),
         seed & 0xFFFFFFFFFFFFFFFF]
    )
    pool = _none_pool(model)
    groups = sorted({dof_group(v) for v in pool})
    picked_groups = rng.choice(len(groups), size=2, replace=False)
    verbs = []
    for gi in picked_groups:
        members = [v for v in pool if dof_group(v) == groups[gi]]
        verbs.append(members[int(rng.integers(len(members)))])

    pose_total = np.zeros(6)
    joint_motion = None
    for v in verbs:
        if v in _POSE_TOTALS:
            idx, total = _POSE_TOTALS[v]
            pose_total[idx] += total
        elif v is Verb.OPEN:
            joint = model.movable_joint(joint_index)
            joint_motion = (model.dof_index(joint.name), joint.limit_lower, joint.limit_upper)

    q0 = closed_joint_positions(model)
    fractions = np.linspace(0.0, 1.0, N_FRAMES)
    states = []
    for t in range(N_FRAMES):
        q = q0.copy()
        if joint_motion is not None:
            di, lo, hi = joint_motion
            q[di] = lo + (hi - lo) * fractions[t]
        states.append(ObjectState(pose_total * fractions[t], q))
    return Trajectory(
        model=model, category=category, verb=Verb.NONE, states=tuple(states), seed=seed
    )


def sample_indices(count: int) -> list[int]:
    """Frame indices evenly spaced over 0..20 including both endpoints."""
    if not 2 <= count <= N_FRAMES:
        raise DatasetError(f"frame count must lie in [2, {N_FRAMES}], got {count}")
    return [round(i * N_STEPS / (count - 1)) for i in range(count)]


def sample_frames(
    trajectory: Trajectory,
    count: int,
    camera: CameraConfig = DEFAULT_CAMERA,
    size: tuple[int, int] = (64, 64),
) -> list[ImageRGB]:
    """Render the evenly spaced subsample of a trajectory's frames."""
    return trajectory.render_frames(camera, size, indices=sample_indices(count))
