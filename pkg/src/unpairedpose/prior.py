"""Synthetic 2D pose prior generation.

A procedural articulated skeleton stands in for a hand-built 3D animal asset:
bones hang off a kinematic tree, each with a rest direction and an
azimuth/elevation wiggle around it, animated by a sinusoidal gait (diagonal
limb pairs in phase, as in a trot) plus smooth Ornstein-Uhlenbeck noise, with
every angle clamped to its joint limits.  Projecting the animated sequences
through a camera yields the empirical prior of plausible 2D poses; the same
machinery can also render paired grayscale capsule images for experiments on
fully synthetic footage.

Everything here is a pure function of its inputs: a prior dataset regenerates
bit-for-bit from its recorded metadata.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import yaml

from . import __version__
from .skeleton import (
    JointLimits,
    Pose2D,
    Pose3D,
    SkeletonTopology,
    TopologyConfig,
    body_part_of,
    bone_lengths_array,
    build_topology,
    joint_limits,
    limb_groups,
)

_WORLD_UP = np.array([0.0, 0.0, 1.0])
_BODY_HEADING = np.array([1.0, 0.0, 0.0])

# Trotting gait: diagonal limb pairs move together, the two pairs half a
# cycle apart.
_TROT_PHASES = {"left_fore": 0.0, "right_hind": 0.0, "right_fore": math.pi, "left_hind": math.pi}
_TAIL_WAVE_STEP = 0.7  # phase lag per tail segment, gives a travelling wave

_PART_AMPLITUDE = {"limb": 1.0, "tail": 0.6, "head": 0.3, "spine": 0.3, "body": 0.4}


class ProjectionError(ValueError):
    """Raised when a joint cannot be projected (behind a pinhole camera)."""

    def __init__(self, message: str, point_index: int | None = None):
        super().__init__(message)
        self.point_index = point_index


class GenerationError(ValueError):
    """Raised for inconsistent prior-generation inputs."""


# ---------------------------------------------------------------------------
# Camera
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CameraModel:
    """World -> camera transform plus projection and view normalization.

    ``rotation``/``translation`` map world points to camera coordinates
    (camera looks along its +z axis).  ``view_window`` is (cx, cy, half)
    in camera-plane units: plane coordinates are normalized into [-1, 1]^2
    by an isotropic window of half-extent ``half`` centred on (cx, cy).
    """

    kind: str  # "orthographic" | "pinhole"
    rotation: np.ndarray  # (3, 3)
    translation: np.ndarray  # (3,)
    focal: float | None = None
    view_window: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.kind not in ("orthographic", "pinhole"):
            raise ValueError(f"unknown camera kind {self.kind!r}")
        R = np.array(self.rotation, dtype=np.float64)
        t = np.array(self.translation, dtype=np.float64)
        if R.shape != (3, 3) or t.shape != (3,):
            raise ValueError("camera extrinsics must be a 3x3 rotation and 3-vector")
        if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-9:
            raise ValueError("camera rotation is not orthonormal within 1e-9")
        if self.kind == "pinhole" and (self.focal is None or self.focal <= 0):
            raise ValueError("pinhole camera needs a positive focal length")
        R.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)
        if self.view_window is not None:
            cx, cy, half = (float(v) for v in self.view_window)
            if half <= 0:
                raise ValueError("view window half-extent must be positive")
            object.__setattr__(self, "view_window", (cx, cy, half))

    def camera_coords(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation.T + self.translation

    def plane_coords(self, points: np.ndarray) -> np.ndarray:
        """Project to camera-plane units, before view normalization.

        Pinhole projection raises :class:`ProjectionError` if any point sits
        at or behind the camera plane.
        """
        cam = self.camera_coords(points)
        if self.kind == "orthographic":
            return cam[..., :2].copy()
        z = cam[..., 2]
        if np.any(z <= 1e-9):
            bad = int(np.argwhere(z <= 1e-9)[0][-1])
            raise ProjectionError(
                f"point {bad} is behind the pinhole camera", point_index=bad
            )
        return self.focal * cam[..., :2] / z[..., None]

    def normalize(self, plane: np.ndarray) -> np.ndarray:
        if self.view_window is None:
            raise GenerationError("camera has no view window; fit one with fit_view_window")
        cx, cy, half = self.view_window
        out = np.empty_like(plane)
        out[..., 0] = (plane[..., 0] - cx) / half
        out[..., 1] = (plane[..., 1] - cy) / half
        return out

    def with_window(self, window: tuple[float, float, float]) -> "CameraModel":
        return replace(self, view_window=window)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "rotation": [[float(v) for v in row] for row in self.rotation],
            "translation": [float(v) for v in self.translation],
            "focal": None if self.focal is None else float(self.focal),
            "view_window": None if self.view_window is None else list(self.view_window),
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "CameraModel":
        window = raw.get("view_window")
        return cls(
            kind=raw["kind"],
            rotation=np.array(raw["rotation"], dtype=np.float64),
            translation=np.array(raw["translation"], dtype=np.float64),
            focal=raw.get("focal"),
            view_window=None if window is None else tuple(window),
        )


def camera_preset(name: str, kind: str = "orthographic", distance: float = 4.0,
                  focal: float | None = None) -> CameraModel:
    """Built-in viewpoints.

    "ventral": camera below the ground plane looking up (under-treadmill
    geometry); "side": camera on the animal's right looking across.
    """
    if name == "ventral":
        R = np.eye(3)
    elif name == "side":
        R = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
    else:
        raise ValueError(f"unknown camera preset {name!r} (expected 'ventral' or 'side')")
    t = np.array([0.0, 0.0, distance])
    if kind == "pinhole" and focal is None:
        focal = distance
    return CameraModel(kind=kind, rotation=R, translation=t, focal=focal)


def fit_view_window(plane_points: np.ndarray, margin: float = 0.1) -> tuple[float, float, float]:
    """Smallest isotropic window covering the points, with a relative margin."""
    pts = np.asarray(plane_points, dtype=np.float64).reshape(-1, 2)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    center = (lo + hi) / 2.0
    half = float(np.max(hi - lo) / 2.0) * (1.0 + margin)
    if half <= 0:
        half = 1.0
    return (float(center[0]), float(center[1]), half)


# ---------------------------------------------------------------------------
# Motion parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MotionParams:
    """Knobs of the semi-random gait animation.

    ``phase_offsets`` shifts individual limb groups (radians, by group name)
    on top of the built-in trot pattern.  ``gait_amplitude`` is the sinusoid
    amplitude as a fraction of each joint's half-range.
    """

    gait_frequency: float = 1.0 / 24.0  # cycles per frame
    noise_scale: float = 0.12  # radians, stationary std of the smooth noise
    phase_offsets: Mapping[str, float] = field(default_factory=dict)
    body_speed: float = 0.0  # model units per frame
    seed: int = 0
    gait_amplitude: float = 0.5

    def __post_init__(self):
        if self.gait_frequency <= 0:
            raise ValueError("gait_frequency must be positive")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be non-negative")
        if not 0.0 <= self.gait_amplitude <= 1.0:
            raise ValueError("gait_amplitude must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "gait_frequency": float(self.gait_frequency),
            "noise_scale": float(self.noise_scale),
            "phase_offsets": {str(k): float(v) for k, v in self.phase_offsets.items()},
            "body_speed": float(self.body_speed),
            "seed": int(self.seed),
            "gait_amplitude": float(self.gait_amplitude),
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "MotionParams":
        return cls(
            gait_frequency=raw["gait_frequency"],
            noise_scale=raw["noise_scale"],
            phase_offsets=dict(raw.get("phase_offsets") or {}),
            body_speed=raw["body_speed"],
            seed=int(raw["seed"]),
            gait_amplitude=raw.get("gait_amplitude", 0.5),
        )


# ---------------------------------------------------------------------------
# Kinematic model
# ---------------------------------------------------------------------------


def _orthonormal_frames(dirs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-row right-handed frame (x', y', z') with x' = dirs and z' the
    projection of world-up (falling back to world-forward for vertical x')."""
    x = dirs / np.linalg.norm(dirs, axis=-1, keepdims=True)
    z = _WORLD_UP - (x @ _WORLD_UP)[..., None] * x
    norms = np.linalg.norm(z, axis=-1)
    degenerate = norms < 1e-6
    if np.any(degenerate):
        alt = _BODY_HEADING - (x @ _BODY_HEADING)[..., None] * x
        z = np.where(degenerate[..., None], alt, z)
        norms = np.linalg.norm(z, axis=-1)
    z = z / norms[..., None]
    y = np.cross(z, x)
    return x, y, z


@dataclass(frozen=True)
class KinematicModel:
    """Everything needed to pose and animate one species procedurally."""

    topology: SkeletonTopology
    limits: JointLimits
    bone_lengths: np.ndarray  # (J,), root entry 0
    rest_local: np.ndarray  # (J, 3) parent-frame rest direction of the bone ending at j
    rest_world: np.ndarray  # (J, 3) same directions in world frame, canonical pose
    gait_phase: np.ndarray  # (J,) radians
    amp_scale: np.ndarray  # (J,) part-class amplitude multiplier
    part_class: tuple[str, ...]  # per joint: head/spine/tail/limb/body
    group_name: tuple[str | None, ...]  # limb group per joint, None outside limbs
    config: TopologyConfig

    @classmethod
    def from_config(cls, config: TopologyConfig) -> "KinematicModel":
        topo = build_topology(config)
        limits = joint_limits(config, topo)
        lengths = bone_lengths_array(config, topo)
        J = topo.n_joints

        # World rest directions: config vectors where given, else continue the
        # parent bone (body heading for children of the root).
        rest_world = np.zeros((J, 3))
        rest_world[topo.root_id] = _BODY_HEADING
        order = topo.topological_order()
        for b in order:
            p, c = topo.bones[b]
            name = topo.joints[c]
            if name in config.rest_directions:
                v = np.array(config.rest_directions[name], dtype=np.float64)
                n = np.linalg.norm(v)
                if n < 1e-9:
                    raise GenerationError(f"rest direction for {name!r} is near zero")
                rest_world[c] = v / n
            else:
                rest_world[c] = rest_world[p]

        # Express each rest direction in the frame anchored on the parent
        # bone's rest direction; animation rebuilds the frame from the
        # parent's current direction so children follow their parents.
        rest_local = np.zeros((J, 3))
        for b in order:
            p, c = topo.bones[b]
            x, y, z = _orthonormal_frames(rest_world[p][None, :])
            w = rest_world[c]
            rest_local[c] = [float(w @ x[0]), float(w @ y[0]), float(w @ z[0])]

        groups = limb_groups(config)
        group_name: list[str | None] = [None] * J
        for gname, members in groups.items():
            for joint in members:
                group_name[topo.joint_id(joint)] = gname

        part = tuple(body_part_of(config, topo.joints[j]) for j in range(J))

        phases = np.zeros(J)
        fallback_groups = sorted(g for g in groups if g not in _TROT_PHASES)
        for j in range(J):
            g = group_name[j]
            if g is not None:
                if g in _TROT_PHASES:
                    phases[j] = _TROT_PHASES[g]
                else:
                    phases[j] = math.pi * (fallback_groups.index(g) % 2)
        tail = [j for j in range(J) if part[j] == "tail"]
        for i, j in enumerate(tail):
            phases[j] += i * _TAIL_WAVE_STEP

        amp = np.array([_PART_AMPLITUDE[part[j]] for j in range(J)])
        amp[topo.root_id] = 0.0

        return cls(
            topology=topo,
            limits=limits,
            bone_lengths=lengths,
            rest_local=rest_local,
            rest_world=rest_world,
            gait_phase=phases,
            amp_scale=amp,
            part_class=part,
            group_name=tuple(group_name),
            config=config,
        )


def forward_kinematics(model: KinematicModel, angles: np.ndarray,
                       root_positions: np.ndarray) -> np.ndarray:
    """Joint positions (T, J, 3) from per-joint (azimuth, elevation) offsets.

    ``angles`` is (T, J, 2); the root row is ignored.  Bone directions are
    unit vectors by construction, so bone rigidity holds to float precision.
    """
    angles = np.asarray(angles, dtype=np.float64)
    if angles.ndim != 3 or angles.shape[1:] != (model.topology.n_joints, 2):
        raise GenerationError(f"angles must be (T, J, 2), got {angles.shape}")
    T, J, _ = angles.shape
    root = model.topology.root_id
    pos = np.zeros((T, J, 3))
    dirs = np.zeros((T, J, 3))
    pos[:, root] = np.asarray(root_positions, dtype=np.float64)
    dirs[:, root] = _BODY_HEADING

    for b in model.topology.topological_order():
        p, c = model.topology.bones[b]
        x, y, z = _orthonormal_frames(dirs[:, p])
        r = model.rest_local[c]
        az = angles[:, c, 0]
        el = angles[:, c, 1]
        # Ry(-el) then Rz(az) applied to the local rest direction.
        ca, sa = np.cos(az), np.sin(az)
        ce, se = np.cos(el), np.sin(el)
        px = r[0] * ce - r[2] * se
        py = np.full(T, r[1])
        pz = r[0] * se + r[2] * ce
        lx = px * ca - py * sa
        ly = px * sa + py * ca
        w = lx[:, None] * x + ly[:, None] * y + pz[:, None] * z
        dirs[:, c] = w
        pos[:, c] = pos[:, p] + model.bone_lengths[c] * w
    return pos


def sample_rest_pose(model: KinematicModel) -> Pose3D:
    """Canonical standing pose: every joint angle at its limit midpoint."""
    angles = model.limits.midpoints[None, :, :]
    coords = forward_kinematics(model, angles, np.zeros((1, 3)))
    return Pose3D(coords=coords[0], topology_ref=model.topology.name)


# ---------------------------------------------------------------------------
# Animation
# ---------------------------------------------------------------------------

_NOISE_CORR = math.exp(-1.0 / 8.0)  # per-frame correlation of the OU noise
_SWAY_AMPLITUDE = 0.02
_BOB_AMPLITUDE = 0.01


def animate_angles(model: KinematicModel, params: MotionParams, n_frames: int,
                   rng: np.random.Generator | None = None) -> np.ndarray:
    """Limit-clamped joint angle trajectories, (T, J, 2)."""
    if n_frames < 1:
        raise GenerationError("need at least one frame")
    if rng is None:
        rng = np.random.default_rng(np.random.PCG64(np.random.SeedSequence(params.seed)))
    J = model.topology.n_joints
    mid = model.limits.midpoints  # (J, 2)
    half = np.stack(
        [
            (model.limits.azimuth[:, 1] - model.limits.azimuth[:, 0]) / 2.0,
            (model.limits.elevation[:, 1] - model.limits.elevation[:, 0]) / 2.0,
        ],
        axis=1,
    )
    amp = params.gait_amplitude * model.amp_scale[:, None] * half  # (J, 2)

    phase = model.gait_phase.copy()
    for j in range(J):
        g = model.group_name[j]
        if g is not None and g in params.phase_offsets:
            phase[j] += params.phase_offsets[g]

    t = np.arange(n_frames)[:, None]
    wt = 2.0 * math.pi * params.gait_frequency * t + phase[None, :]  # (T, J)
    # Elevation leads azimuth by a quarter cycle: joints trace ellipses.
    gait = np.stack([np.sin(wt), np.sin(wt + math.pi / 2.0)], axis=2) * amp[None, :, :]

    noise = np.zeros((n_frames, J, 2))
    if params.noise_scale > 0:
        xi = rng.standard_normal((n_frames, J, 2)) * params.noise_scale
        drive = math.sqrt(1.0 - _NOISE_CORR**2)
        state = np.zeros((J, 2))
        for i in range(n_frames):
            state = _NOISE_CORR * state + drive * xi[i]
            noise[i] = state

    return model.limits.clamp(mid[None, :, :] + gait + noise)


def _root_trajectory(params: MotionParams, n_frames: int) -> np.ndarray:
    t = np.arange(n_frames, dtype=np.float64)
    w = 2.0 * math.pi * params.gait_frequency * t
    pos = np.zeros((n_frames, 3))
    pos[:, 0] = params.body_speed * t
    pos[:, 1] = _SWAY_AMPLITUDE * np.sin(w)
    pos[:, 2] = _BOB_AMPLITUDE * np.sin(2.0 * w)
    return pos


def animate_sequence(model: KinematicModel, params: MotionParams, n_frames: int) -> list[Pose3D]:
    """Animate ``n_frames`` poses of constrained semi-random motion.

    Deterministic given ``params.seed``; every emitted angle respects the
    joint limits (clamping is explicit in :func:`animate_angles`).
    """
    coords = animate_coords(model, params, n_frames)
    return [Pose3D(coords=c, topology_ref=model.topology.name) for c in coords]


def animate_coords(model: KinematicModel, params: MotionParams, n_frames: int) -> np.ndarray:
    angles = animate_angles(model, params, n_frames)
    return forward_kinematics(model, angles, _root_trajectory(params, n_frames))


# ---------------------------------------------------------------------------
# Projection
# ---------------------------------------------------------------------------


def project(pose: Pose3D, cam: CameraModel,
            topology: SkeletonTopology | None = None) -> Pose2D:
    """Project a 3D pose into normalized [-1, 1]^2 image coordinates."""
    try:
        plane = cam.plane_coords(pose.coords)
    except ProjectionError as exc:
        if topology is not None and exc.point_index is not None:
            raise ProjectionError(
                f"joint {topology.joints[exc.point_index]!r} is behind the pinhole camera",
                point_index=exc.point_index,
            ) from None
        raise
    return Pose2D(coords=cam.normalize(plane), topology_ref=pose.topology_ref)


# ---------------------------------------------------------------------------
# Prior dataset
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PriorDataset:
    """The unpaired set of plausible 2D poses, with its generation record."""

    poses: tuple[Pose2D, ...]
    topology_ref: str
    meta: dict

    def __len__(self) -> int:
        return len(self.poses)

    def coords(self) -> np.ndarray:
        """(M, J, 2) stacked pose coordinates."""
        return np.stack([p.coords for p in self.poses])


def _sequence_seed(base_seed: int, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=(index,))
    return np.random.Generator(np.random.PCG64(ss))


def generate_prior(model: KinematicModel, params: MotionParams, cam: CameraModel,
                   count: int, sequence_length: int = 240) -> PriorDataset:
    """Generate ``count`` prior poses from animated sequences.

    Sequences beyond the first use child seeds derived from ``params.seed``.
    If the camera has no view window, one is fitted over everything generated
    and recorded in the metadata, so regeneration reproduces the dataset
    bit-for-bit.
    """
    if count < 1:
        raise GenerationError("count must be >= 1")
    if sequence_length < 1:
        raise GenerationError("sequence_length must be >= 1")
    n_sequences = -(-count // sequence_length)
    plane_chunks = []
    for k in range(n_sequences):
        rng = _sequence_seed(params.seed, k)
        angles = animate_angles(model, params, sequence_length, rng=rng)
        coords = forward_kinematics(model, angles, _root_trajectory(params, sequence_length))
        plane_chunks.append(cam.plane_coords(coords))
    plane = np.concatenate(plane_chunks)[:count]

    fitted = cam
    if cam.view_window is None:
        fitted = cam.with_window(fit_view_window(plane))
    normalized = fitted.normalize(plane)

    topo_name = model.topology.name
    poses = tuple(Pose2D(coords=c, topology_ref=topo_name) for c in normalized)
    meta = {
        "format": "unpairedpose/prior",
        "version": __version__,
        "topology": topo_name,
        "topology_config": _config_to_dict(model.config),
        "count": int(count),
        "sequence_length": int(sequence_length),
        "motion": params.to_dict(),
        "camera": fitted.to_dict(),
    }
    return PriorDataset(poses=poses, topology_ref=topo_name, meta=meta)


def regenerate_prior(meta: Mapping) -> PriorDataset:
    """Rebuild a prior dataset purely from its metadata record."""
    config = _config_from_dict(meta["topology_config"])
    model = KinematicModel.from_config(config)
    params = MotionParams.from_dict(meta["motion"])
    cam = CameraModel.from_dict(meta["camera"])
    return generate_prior(model, params, cam, int(meta["count"]), int(meta["sequence_length"]))


def _config_to_dict(config: TopologyConfig) -> dict:
    return {
        "name": config.name,
        "joints": list(config.joints),
        "bones": [list(b) for b in config.bones],
        "root": config.root,
        "rest_directions": {k: list(v) for k, v in config.rest_directions.items()},
        "limits": {k: list(v) for k, v in config.limits.items()},
        "bone_lengths": {k: float(v) for k, v in config.bone_lengths.items()},
        "groups": dict(config.groups),
        "camera": config.camera,
    }


def _config_from_dict(raw: Mapping) -> TopologyConfig:
    return TopologyConfig(
        name=raw["name"],
        joints=tuple(raw["joints"]),
        bones=tuple((a, b) for a, b in raw["bones"]),
        root=raw.get("root"),
        rest_directions={k: tuple(v) for k, v in (raw.get("rest_directions") or {}).items()},
        limits={k: tuple(v) for k, v in (raw.get("limits") or {}).items()},
        bone_lengths=dict(raw.get("bone_lengths") or {}),
        groups=dict(raw.get("groups") or {}),
        camera=raw.get("camera", "ventral"),
    )


# ---------------------------------------------------------------------------
# Prior dataset I/O: poses.csv + meta.yaml in a directory
# ---------------------------------------------------------------------------


def save_prior(dataset: PriorDataset, directory: str | Path,
               topology: SkeletonTopology) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "poses.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["frame"]
        for joint in topology.joints:
            header += [f"{joint}_u", f"{joint}_v"]
        writer.writerow(header)
        for i, pose in enumerate(dataset.poses):
            row = [str(i)]
            for u, v in pose.coords:
                row += [repr(float(u)), repr(float(v))]
            writer.writerow(row)
    with open(directory / "meta.yaml", "w") as fh:
        yaml.safe_dump(dataset.meta, fh, sort_keys=True)


def load_prior(directory: str | Path) -> PriorDataset:
    directory = Path(directory)
    with open(directory / "meta.yaml") as fh:
        meta = yaml.safe_load(fh)
    topo_name = meta["topology"]
    joints = meta["topology_config"]["joints"]
    poses = []
    with open(directory / "poses.csv", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expected = ["frame"] + [f"{j}_{ax}" for j in joints for ax in ("u", "v")]
        if header != expected:
            raise GenerationError(f"unexpected poses.csv header in {directory}")
        for row in reader:
            vals = np.array([float(v) for v in row[1:]], dtype=np.float64).reshape(-1, 2)
            poses.append(Pose2D(coords=vals, topology_ref=topo_name))
    if len(poses) != meta["count"]:
        raise GenerationError(
            f"poses.csv has {len(poses)} rows but metadata records {meta['count']}"
        )
    return PriorDataset(poses=tuple(poses), topology_ref=topo_name, meta=meta)


# ---------------------------------------------------------------------------
# Synthetic capsule rendering (for experiments on fully synthetic footage)
# ---------------------------------------------------------------------------

_PART_THICKNESS = {"spine": 0.055, "head": 0.042, "tail": 0.024, "limb": 0.018, "body": 0.040}
_PART_FOREGROUND = {"spine": 0.92, "head": 0.88, "tail": 0.85, "limb": 0.80, "body": 0.90}


@dataclass(frozen=True)
class RenderStyle:
    """Capsule-render appearance; thickness fractions are of min(H, W)."""

    thickness: Mapping[str, float] = field(default_factory=lambda: dict(_PART_THICKNESS))
    foreground: Mapping[str, float] = field(default_factory=lambda: dict(_PART_FOREGROUND))
    background: float = 0.06
    edge_softness: float = 1.0  # px


def render_synthetic_image(model: KinematicModel, pose: Pose3D, cam: CameraModel,
                           resolution: tuple[int, int],
                           style: RenderStyle | None = None) -> np.ndarray:
    """Grayscale uint8 render: one filled capsule per bone, uniform background.

    Body bones are drawn thicker than limbs; the whole render is a pure
    function of its inputs.
    """
    style = style or RenderStyle()
    H, W = resolution
    topo = model.topology
    plane = cam.plane_coords(pose.coords)
    norm = cam.normalize(plane)
    px = np.empty_like(norm)
    px[:, 0] = (norm[:, 0] + 1.0) * 0.5 * W
    px[:, 1] = (norm[:, 1] + 1.0) * 0.5 * H

    ys = np.arange(H, dtype=np.float64) + 0.5
    xs = np.arange(W, dtype=np.float64) + 0.5
    gx, gy = np.meshgrid(xs, ys)

    scale = min(H, W)
    img = np.full((H, W), style.background, dtype=np.float64)
    aa = max(style.edge_softness, 1e-6)
    for p, c in topo.bones:
        part = model.part_class[c]
        radius = style.thickness.get(part, _PART_THICKNESS["body"]) * scale / 2.0
        fg = style.foreground.get(part, _PART_FOREGROUND["body"])
        a, b = px[p], px[c]
        ab = b - a
        denom = float(ab @ ab)
        if denom < 1e-12:
            d = np.hypot(gx - a[0], gy - a[1])
        else:
            t = np.clip(((gx - a[0]) * ab[0] + (gy - a[1]) * ab[1]) / denom, 0.0, 1.0)
            d = np.hypot(gx - (a[0] + t * ab[0]), gy - (a[1] + t * ab[1]))
        alpha = np.clip((radius - d) / aa + 1.0, 0.0, 1.0)
        img = np.maximum(img, style.background + alpha * (fg - style.background))

    return np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
