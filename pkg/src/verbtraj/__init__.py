"""verbtraj: verb-conditioned trajectory classification and synthesis for
articulated objects.

Train a small CNN to recognize which manipulation verb a rendered object
trajectory depicts, then search object degrees of freedom with CMA-ES to
synthesize trajectories for a commanded verb on new objects.
"""

from .backend import BACKEND_NAME
from .cmaes import CmaConfig, CmaResult, CmaState, cma_ask, cma_init, cma_minimize, cma_tell
from .dataset import DatasetManifest, ManifestEntry, build_dataset, load_manifest, split_kfold
from .errors import (
    CmaError,
    DatasetError,
    KinematicsError,
    ModelError,
    ModelFormatError,
    NetworkError,
    PlannerError,
    RenderError,
    UrdfError,
    VerbtrajError,
)
from .kinematics import (
    Joint,
    Link,
    ObjectModel,
    ObjectState,
    apply_delta,
    build_model,
    forward_kinematics,
    model_to_urdf,
    parse_urdf,
)
from .nn import (
    AdamState,
    CnnArch,
    CnnModel,
    TrainConfig,
    adam_init,
    adam_step,
    backward,
    cross_entropy,
    forward,
    init_model,
    load_model,
    predict,
    save_model,
    train,
)
from .planner import (
    PlanRequest,
    PlanResult,
    export_trajectory,
    mask_max_dim,
    optimize_trajectory,
    rollout,
    score_trajectory,
)
from .procedural import DEFAULT_CATEGORY_CONFIG, generate_procedural, list_categories
from .render import DEFAULT_CAMERA, CameraConfig, ImageRGB, empty_scene, render, render_trajectory
from .verbs import (
    N_CLASSES,
    N_FRAMES,
    Verb,
    canonical_initiation,
    make_none_trajectory,
    make_verb_trajectory,
    sample_frames,
    sample_indices,
)

__version__ = "0.1.0"
