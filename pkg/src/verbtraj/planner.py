"""Verb-conditioned trajectory search.

Given a trained classifier, a target verb, and an object's initiation state,
search the per-timestep (6+n) state change with CMA-ES so that the rendered
trajectory maximizes the classifier's probability of the verb (equivalently,
minimizes the cross-entropy against the one-hot target). Because every verb
moves at most one degree of freedom, candidate deltas are masked to their
largest-magnitude component before scoring.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from .cmaes import CmaConfig, cma_minimize
from .errors import PlannerError
from .kinematics import ObjectModel, ObjectState, apply_delta
from .render import DEFAULT_CAMERA, CameraConfig, ImageRGB, render
from .verbs import Verb

TRAJECTORY_SCHEMA_VERSION = 1


def mask_max_dim(delta: np.ndarray) -> np.ndarray:
    """Zero all components except the largest-magnitude one (lowest index wins
    ties); the all-zero vector passes through unchanged."""
    delta = np.asarray(delta, dtype=np.float64).reshape(-1)
    if delta.size == 0:
        raise PlannerError("delta vector is empty")
    out = np.zeros_like(delta)
    k = int(np.argmax(np.abs(delta)))
    out[k] = delta[k]
    return out


def rollout(model: ObjectModel, initiation: ObjectState, delta, frames: int) -> list[ObjectState]:
    """Apply the per-timestep delta frames-1 times starting from initiation."""
    if frames < 1:
        raise PlannerError(f"frames must be >= 1, got {frames}")
    states = [initiation]
    for _ in range(frames - 1):
        states.append(apply_delta(model, states[-1], delta))
    return states


@dataclass(frozen=True)
class PlanRequest:
    model: ObjectModel
    initiation: ObjectState
    verb: Verb
    classifier: nn.CnnModel
    camera: CameraConfig = DEFAULT_CAMERA
    frames: int = 5
    cma: CmaConfig | None = None

    def __post_init__(self):
        if self.verb is Verb.NONE:
            raise PlannerError("cannot plan for the None label")
        arch = self.classifier.arch
        if arch.in_channels != 3 * self.frames:
            raise PlannerError(
                f"classifier expects {arch.in_channels} channels but "
                f"{self.frames} frames supply {3 * self.frames}"
            )

    @property
    def dimension(self) -> int:
        return 6 + self.model.n_dof

    def image_size(self) -> tuple[int, int]:
        return (self.classifier.arch.width, self.classifier.arch.height)


@dataclass
class PlanResult:
    delta: np.ndarray
    states: list[ObjectState]
    frames: list[ImageRGB]
    final_loss: float
    probabilities: np.ndarray
    history: list[dict] = field(default_factory=list)


def _frames_for_delta(request: PlanRequest, masked_delta: np.ndarray,
                      initiation_frame: ImageRGB) -> tuple[list[ObjectState], list[ImageRGB]]:
    states = rollout(request.model, request.initiation, masked_delta, request.frames)
    rendered = [initiation_frame]
    for st in states[1:]:
        rendered.append(render(request.model, st, request.camera, request.image_size()))
    return states, rendered


def _loss_of_frames(request: PlanRequest, rendered: list[ImageRGB]) -> tuple[float, np.ndarray]:
    probs = nn.predict(request.classifier, rendered)
    target = np.zeros((1, request.classifier.arch.n_classes))
    target[0, request.verb.index] = 1.0
    loss = nn.cross_entropy(probs[None, :], target)
    return loss, probs


def score_trajectory(request: PlanRequest, delta) -> float:
    """Cross-entropy of the rendered rollout against the target verb."""
    delta = np.asarray(delta, dtype=np.float64).reshape(-1)
    if delta.shape != (request.dimension,):
        raise PlannerError(f"delta must have length {request.dimension}, got {delta.shape[0]}")
    init_frame = render(request.model, request.initiation, request.camera, request.image_size())
    _, rendered = _frames_for_delta(request, mask_max_dim(delta), init_frame)
    loss, _ = _loss_of_frames(request, rendered)
    return loss


def default_cma_config(request: PlanRequest, seed: int = 0) -> CmaConfig:
    """sigma0=0.33, population 40, 60 generations; joint deltas bounded by the
    joint's full travel, pose deltas unbounded."""
    d = request.dimension
    lower = np.full(d, -np.inf)
    upper = np.full(d, np.inf)
    for i, joint in enumerate(request.model.movable_joints):
        span = joint.limit_upper - joint.limit_lower
        lower[6 + i] = -span
        upper[6 + i] = span
    return CmaConfig(dimension=d, sigma0=0.33, population=40, max_generations=60,
                     seed=seed, lower=lower, upper=upper)


def optimize_trajectory(request: PlanRequest, trace_path=None) -> PlanResult:
    """CMA-ES search over the per-timestep delta; returns the best plan found."""
    config = request.cma if request.cma is not None else default_cma_config(request)
    if config.dimension != request.dimension:
        raise PlannerError(
            f"CMA dimension {config.dimension} != request dimension {request.dimension}"
        )
    init_frame = render(request.model, request.initiation, request.camera, request.image_size())

    def objective(x: np.ndarray) -> float:
        _, rendered = _frames_for_delta(request, mask_max_dim(x), init_frame)
        loss, _ = _loss_of_frames(request, rendered)
        return loss

    result = cma_minimize(objective, config, trace_path=trace_path)
    best = mask_max_dim(result.best_x)
    states, rendered = _frames_for_delta(request, best, init_frame)
    loss, probs = _loss_of_frames(request, rendered)
    return PlanResult(delta=best, states=states, frames=rendered, final_loss=loss,
                      probabilities=probs, history=result.history)


def export_trajectory(result: PlanResult, verb: Verb, path) -> None:
    """Versioned JSON export; states are reproducible by re-rolling the delta."""
    doc = {
        "schema_version": TRAJECTORY_SCHEMA_VERSION,
        "verb": verb.label,
        "frames": len(result.states),
        "delta": result.delta.tolist(),
        "states": [
            {
                "root_pose": st.root_pose.tolist(),
                "joint_positions": st.joint_positions.tolist(),
                "present": st.present,
            }
            for st in result.states
        ],
        "final_loss": result.final_loss,
        "probabilities": result.probabilities.tolist(),
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1), encoding="utf-8")


def load_trajectory(path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("schema_version") != TRAJECTORY_SCHEMA_VERSION:
        raise PlannerError(f"unsupported trajectory schema_version {doc.get('schema_version')!r}")
    return doc
