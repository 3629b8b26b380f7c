"""Dataset generation and on-disk layout.

A dataset is a directory tree of PNG frames plus a ``manifest.json``:

    <root>/manifest.json
    <root>/<category>/inst_<iii>/<VerbLabel>/frame_00.png ... frame_20.png

Entries are one trajectory each (category instance x verb label). The
manifest records relative frame paths, a SHA-256 of the raw pixel bytes of
all 21 frames, and the generation parameters, so identical (config, seed)
runs produce byte-identical manifests.
"""

from __future__ import annotations

import hashlib
import json
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import procedural, verbs
from .errors import DatasetError
from .render import DEFAULT_CAMERA, CameraConfig, ImageRGB
from .verbs import Verb

SCHEMA_VERSION = 1


@dataclass
class ManifestEntry:
    id: str
    category: str
    instance: int
    instance_seed: int
    verb: str
    frames: list[str]
    frames_sha256: str
    split: str = ""

    @property
    def verb_enum(self) -> Verb:
        return Verb.from_label(self.verb)


@dataclass
class DatasetManifest:
    image_size: tuple[int, int]
    categories: list[str]
    seed: int
    entries: list[ManifestEntry]
    skipped: list[dict] = field(default_factory=list)
    frame_count: int = verbs.N_FRAMES
    sample_indices: list[int] = field(default_factory=lambda: verbs.sample_indices(5))
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> str:
        doc = asdict(self)
        doc["image_size"] = list(self.image_size)
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        doc = json.loads(text)
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise DatasetError(
                f"unsupported manifest schema_version {doc.get('schema_version')!r}"
            )
        entries = [ManifestEntry(**e) for e in doc["entries"]]
        return cls(
            image_size=tuple(doc["image_size"]),
            categories=list(doc["categories"]),
            seed=int(doc["seed"]),
            entries=entries,
            skipped=list(doc.get("skipped", [])),
            frame_count=int(doc["frame_count"]),
            sample_indices=list(doc["sample_indices"]),
        )

    def sha256(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()


def instance_seed(dataset_seed: int, category: str, instance: int) -> int:
    """Stable per-instance seed, independent of the category list ordering."""
    return zlib.crc32(f"{dataset_seed}:{category}:{instance}".encode("utf-8"))


def make_trajectory_for_entry(
    model, category: str, verb: Verb, seed: int
) -> verbs.Trajectory:
    if verb is Verb.NONE:
        return verbs.make_none_trajectory(model, seed=seed, category=category)
    return verbs.make_verb_trajectory(model, verb, seed=seed, category=category)


def build_dataset(
    out_dir,
    categories,
    instances_per_category: int,
    image_size: tuple[int, int] = (64, 64),
    camera: CameraConfig = DEFAULT_CAMERA,
    seed: int = 0,
    labels=verbs.ALL_VERBS,
    category_config=None,
    sample_count: int = 5,
) -> DatasetManifest:
    """Generate, render, and write one trajectory per (category, instance, label)."""
    categories = list(categories)
    if len(categories) < 2:
        raise DatasetError("need at least two categories")
    if instances_per_category < 1:
        raise DatasetError("need at least one instance per category")
    known = procedural.list_categories(category_config)
    for cat in categories:
        if cat not in known:
            raise DatasetError(f"unknown category {cat!r} (known: {', '.join(known)})")

    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    entries: list[ManifestEntry] = []
    skipped: list[dict] = []
    for cat in categories:
        for inst in range(instances_per_category):
            iseed = instance_seed(seed, cat, inst)
            model = procedural.generate_procedural(cat, iseed, category_config)
            for verb in labels:
                try:
                    traj = make_trajectory_for_entry(model, cat, verb, iseed)
                except DatasetError as exc:
                    skipped.append(
                        {"category": cat, "instance": inst, "verb": verb.label,
                         "reason": str(exc)}
                    )
                    continue
                rel_dir = f"{cat}/inst_{inst:03d}/{verb.label}"
                frame_dir = root / rel_dir
                frame_dir.mkdir(parents=True, exist_ok=True)
                frames = traj.render_frames(camera, image_size)
                digest = hashlib.sha256()
                paths = []
                for t, frame in enumerate(frames):
                    rel = f"{rel_dir}/frame_{t:02d}.png"
                    frame.save_png(root / rel)
                    digest.update(frame.pixels)
                    paths.append(rel)
                entries.append(
                    ManifestEntry(
                        id=rel_dir, category=cat, instance=inst, instance_seed=iseed,
                        verb=verb.label, frames=paths, frames_sha256=digest.hexdigest(),
                    )
                )
    manifest = DatasetManifest(
        image_size=tuple(image_size), categories=categories, seed=seed,
        entries=entries, skipped=skipped,
        sample_indices=verbs.sample_indices(sample_count),
    )
    (root / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    return manifest


def load_manifest(path, check_files: bool = True) -> DatasetManifest:
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    manifest = DatasetManifest.from_json(path.read_text(encoding="utf-8"))
    if check_files:
        root = path.parent
        for entry in manifest.entries:
            for rel in entry.frames:
                if not (root / rel).is_file():
                    raise DatasetError(f"manifest references missing file {rel!r}")
    return manifest


def split_kfold(
    manifest: DatasetManifest,
    test_category: str,
    val_fraction: float = 0.2,
    seed: int = 0,
    categories=None,
) -> dict[str, list[ManifestEntry]]:
    """Hold out one category; shuffle the rest into train/val by val_fraction."""
    pool = manifest.entries
    if categories is not None:
        categories = list(categories)
        pool = [e for e in pool if e.category in categories]
        if test_category not in categories:
            raise DatasetError(f"test category {test_category!r} not in {categories}")
    if test_category not in {e.category for e in pool}:
        raise DatasetError(f"unknown test category {test_category!r}")
    test = [e for e in pool if e.category == test_category]
    rest = [e for e in pool if e.category != test_category]
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(rest))
    n_val = int(round(val_fraction * len(rest)))
    val = [rest[i] for i in order[:n_val]]
    train = [rest[i] for i in order[n_val:]]
    return {"train": train, "val": val, "test": test}


def load_entry_frames(root, entry: ManifestEntry, indices) -> np.ndarray:
    """(len(indices), H, W, 3) uint8 frames of one entry."""
    root = Path(root)
    frames = [ImageRGB.load_png(root / entry.frames[i]).to_array() for i in indices]
    return np.stack(frames, axis=0)


def load_split_arrays(
    root, entries, indices
) -> tuple[np.ndarray, np.ndarray]:
    """Channel-stacked samples (N, H, W, 3*T) uint8 and label indices (N,)."""
    if not entries:
        raise DatasetError("entry list is empty")
    xs = []
    ys = np.empty(len(entries), dtype=np.int64)
    for i, entry in enumerate(entries):
        frames = load_entry_frames(root, entry, indices)  # (T, H, W, 3)
        t, h, w, _ = frames.shape
        xs.append(frames.transpose(1, 2, 0, 3).reshape(h, w, 3 * t))
        ys[i] = entry.verb_enum.index
    return np.stack(xs, axis=0), ys
