"""The four stimulus datasets and their manifests.

All four sampling grids are fixed:

* ``static-image``: 300x300, L_e=200, w_e=1, p_b in {0.005, 0.01, 0.02,
  0.03, 0.04, 0.05}, p_f in {0.02, 0.03, ..., 0.25}, configurations with
  p_f < 2 p_b skipped, 5 images each -> 620 images.
* ``dynamic-merged-image``: p_b(t) = 1 - (1 - 0.005)^t for t = 1..10,
  clean rectangle of width t, p_f in {0.015, 0.02, ..., 0.07}, 5 each ->
  600 images.
* ``static-video`` / ``dynamic-video``: p_b = 0.005 per frame, p_f in
  {0.015, ..., 0.07}, 20 ten-second 30 fps edge videos per configuration
  plus as many pure-noise videos -> 480 videos each; poses jump every 16
  frames.

Randomness: stimulus ``i`` of a dataset uses
``np.random.default_rng((seed, i))``, so regeneration is bit-identical
and stimuli are independent across workers.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .pbm import write_pbm
from .stimuli import (
    DegradationParams,
    EdgeSpec,
    VideoSpec,
    degrade_image,
    degrade_video,
    rasterize_edge,
    sample_pose,
)

class SchemaError(ValueError):
    """Manifest or log file does not match the documented schema."""


SCHEMA_VERSION = 1
CANVAS = (300, 300)
EDGE_LENGTH = 200.0
STATIC_PB_GRID = (0.005, 0.01, 0.02, 0.03, 0.04, 0.05)
STATIC_PF_GRID = tuple(round(0.02 + 0.01 * i, 3) for i in range(24))  # 0.02..0.25
VIDEO_PB = 0.005
VIDEO_PF_GRID = tuple(round(0.015 + 0.005 * i, 4) for i in range(12))  # 0.015..0.07
MERGE_T_GRID = tuple(range(1, 11))
IMAGES_PER_CONFIG = 5
VIDEOS_PER_CONFIG = 20
DATASET_KINDS = (
    "static-image",
    "dynamic-merged-image",
    "static-video",
    "dynamic-video",
)


@dataclass(frozen=True)
class ManifestEntry:
    stimulus_id: str
    path: str
    p_b: float
    p_f: float
    has_edge: bool
    merge_count: int = 1
    edge: dict | None = None  # EdgeSpec fields of the initial pose
    frame_count: int = 1
    fps: float = 0.0


@dataclass
class DatasetManifest:
    kind: str
    seed: int
    schema_version: int
    entries: list[ManifestEntry]

    def save(self, path: str | Path) -> None:
        payload = {
            "schema_version": self.schema_version,
            "kind": self.kind,
            "seed": self.seed,
            "entries": [asdict(e) for e in self.entries],
        }
        with open(path, "w") as f:
            json.dump(payload, f, indent=1)
            f.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        with open(path) as f:
            try:
                payload = json.load(f)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
        if payload.get("schema_version") != SCHEMA_VERSION:
            raise SchemaError(
                f"manifest schema {payload.get('schema_version')} != {SCHEMA_VERSION}"
            )
        try:
            entries = [ManifestEntry(**e) for e in payload["entries"]]
            return cls(
                payload["kind"], payload["seed"], payload["schema_version"], entries
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"{path}: malformed manifest: {exc}") from exc

    def params_by_id(self) -> dict[str, tuple[float, float]]:
        return {e.stimulus_id: (e.p_b, e.p_f) for e in self.entries}

    def edge_info_by_id(self) -> dict[str, tuple[bool, float | None]]:
        return {
            e.stimulus_id: (e.has_edge, e.p_f if e.has_edge else None)
            for e in self.entries
        }


def edge_to_dict(spec: EdgeSpec) -> dict:
    return {
        "midpoint": list(spec.midpoint),
        "angle": spec.angle,
        "length": spec.length,
        "width": spec.width,
        "velocity": spec.velocity,
        "direction_sign": spec.direction_sign,
    }


def edge_from_dict(d: dict) -> EdgeSpec:
    return EdgeSpec(
        tuple(d["midpoint"]),
        d["angle"],
        d["length"],
        d["width"],
        d["velocity"],
        d["direction_sign"],
    )


def static_image_configs() -> list[tuple[float, float]]:
    """(p_b, p_f) pairs of dataset 1, with the p_f < 2 p_b skip rule."""
    return [
        (p_b, p_f)
        for p_b in STATIC_PB_GRID
        for p_f in STATIC_PF_GRID
        if p_f >= 2 * p_b
    ]


def dynamic_merged_configs() -> list[tuple[int, float]]:
    """(t, p_f) pairs of dataset 2."""
    return [(t, p_f) for t in MERGE_T_GRID for p_f in VIDEO_PF_GRID]


def _stimulus_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng((seed, index))


def generate_dataset(kind: str, seed: int, out_dir: str | Path) -> DatasetManifest:
    """Generate one dataset and its manifest under ``out_dir``.

    Images are written as ``<id>.pbm``; videos as ``<id>/f0000.pbm`` ...
    The manifest is ``manifest.json`` in ``out_dir``.
    """
    if kind not in DATASET_KINDS:
        raise ValueError(f"unknown dataset kind {kind!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries: list[ManifestEntry] = []
    index = 0

    if kind == "static-image":
        for p_b, p_f in static_image_configs():
            params = DegradationParams(p_b, p_f)
            for _ in range(IMAGES_PER_CONFIG):
                rng = _stimulus_rng(seed, index)
                pose = sample_pose(rng, CANVAS, EDGE_LENGTH)
                clean = rasterize_edge(pose, CANVAS)
                image = degrade_image(clean, params, rng)
                sid = f"{kind}-{index:05d}"
                rel = f"{sid}.pbm"
                write_pbm(out_dir / rel, image)
                entries.append(
                    ManifestEntry(sid, rel, p_b, p_f, True, 1, edge_to_dict(pose))
                )
                index += 1

    elif kind == "dynamic-merged-image":
        p_b1 = VIDEO_PB
        for t, p_f in dynamic_merged_configs():
            p_b_t = 1.0 - (1.0 - p_b1) ** t
            params = DegradationParams(p_b_t, p_f)
            for _ in range(IMAGES_PER_CONFIG):
                rng = _stimulus_rng(seed, index)
                pose = sample_pose(rng, CANVAS, EDGE_LENGTH, width=float(t))
                clean = rasterize_edge(pose, CANVAS)
                image = degrade_image(clean, params, rng)
                sid = f"{kind}-{index:05d}"
                rel = f"{sid}.pbm"
                write_pbm(out_dir / rel, image)
                entries.append(
                    ManifestEntry(sid, rel, p_b_t, p_f, True, t, edge_to_dict(pose))
                )
                index += 1

    else:
        velocity = 1.0 if kind == "dynamic-video" else 0.0
        video = VideoSpec(fps=30.0, duration=10.0, jump_period=16)
        params_noise = DegradationParams(VIDEO_PB, 0.0)
        for p_f in VIDEO_PF_GRID:
            params = DegradationParams(VIDEO_PB, p_f)
            for _ in range(VIDEOS_PER_CONFIG):
                rng = _stimulus_rng(seed, index)
                pose = sample_pose(
                    rng,
                    CANVAS,
                    EDGE_LENGTH,
                    velocity=velocity,
                    sample_direction=velocity != 0,
                )
                frames = degrade_video(pose, video, params, CANVAS, rng)
                sid = f"{kind}-{index:05d}"
                entries.append(
                    ManifestEntry(
                        sid,
                        _write_video(out_dir, sid, frames),
                        VIDEO_PB,
                        p_f,
                        True,
                        1,
                        edge_to_dict(pose),
                        len(frames),
                        video.fps,
                    )
                )
                index += 1
        for p_f in VIDEO_PF_GRID:  # one noise video per edge video
            for _ in range(VIDEOS_PER_CONFIG):
                rng = _stimulus_rng(seed, index)
                frames = degrade_video(None, video, params_noise, CANVAS, rng)
                sid = f"{kind}-{index:05d}"
                entries.append(
                    ManifestEntry(
                        sid,
                        _write_video(out_dir, sid, frames),
                        VIDEO_PB,
                        0.0,
                        False,
                        1,
                        None,
                        len(frames),
                        video.fps,
                    )
                )
                index += 1

    manifest = DatasetManifest(kind, seed, SCHEMA_VERSION, entries)
    manifest.save(out_dir / "manifest.json")
    return manifest


def _write_video(out_dir: Path, sid: str, frames) -> str:
    vdir = out_dir / sid
    vdir.mkdir(exist_ok=True)
    for t, frame in enumerate(frames):
        write_pbm(vdir / f"f{t:04d}.pbm", frame)
    return sid


def load_stimulus(out_dir: str | Path, entry: ManifestEntry) -> list[np.ndarray]:
    """Read a manifest entry back as a list of frames (length 1 for images)."""
    from .pbm import read_pbm

    base = Path(out_dir) / entry.path
    if base.is_dir():
        return [read_pbm(p) for p in sorted(base.glob("f*.pbm"))]
    return [read_pbm(base)]
