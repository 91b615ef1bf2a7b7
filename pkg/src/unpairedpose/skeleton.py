"""Articulation structures and pose value types.

A :class:`SkeletonTopology` names the joints of an animal and the bone tree
connecting them.  Poses come in two flavours: :class:`Pose2D` (normalized
image-plane coordinates, the representation exchanged between networks,
rasterizer and evaluation) and :class:`Pose3D` (model-space joint positions
produced by the procedural animation that builds the pose prior).

Topologies are data, not code: they are described by a small YAML config
(``name``, ``joints``, ``bones``, plus optional kinematic payload) so that a
new species is a config change.  ``mouse18`` and ``horse`` ship as built-ins.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import yaml


class TopologyError(ValueError):
    """Raised when a topology description does not form a valid bone tree."""


class PoseError(ValueError):
    """Raised when pose coordinates violate their invariants."""


# ---------------------------------------------------------------------------
# Topology
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SkeletonTopology:
    """Joint names plus a rooted bone tree.

    ``bones`` are (parent_id, child_id) pairs oriented away from ``root_id``,
    in the order they were declared.  Each non-root joint appears exactly once
    as a child, so per-bone quantities can be keyed by child joint id.
    """

    name: str
    joints: tuple[str, ...]
    bones: tuple[tuple[int, int], ...]
    root_id: int

    def __post_init__(self):
        object.__setattr__(self, "_joint_index", {n: i for i, n in enumerate(self.joints)})
        parent = {c: p for p, c in self.bones}
        object.__setattr__(self, "_parent", parent)

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    @property
    def n_bones(self) -> int:
        return len(self.bones)

    def joint_id(self, name: str) -> int:
        try:
            return self._joint_index[name]
        except KeyError:
            raise TopologyError(f"unknown joint {name!r} in topology {self.name!r}") from None

    def parent_of(self, joint_id: int) -> int | None:
        """Parent joint id, or None for the root."""
        return self._parent.get(joint_id)

    def bone_name(self, bone_id: int) -> str:
        p, c = self.bones[bone_id]
        return f"{self.joints[p]}-{self.joints[c]}"

    def child_of_bone(self, bone_id: int) -> int:
        return self.bones[bone_id][1]

    def topological_order(self) -> list[int]:
        """Bone ids ordered so that every parent bone precedes its children."""
        by_parent: dict[int, list[int]] = {}
        for b, (p, _c) in enumerate(self.bones):
            by_parent.setdefault(p, []).append(b)
        order: list[int] = []
        stack = [self.root_id]
        while stack:
            j = stack.pop(0)
            for b in by_parent.get(j, []):
                order.append(b)
                stack.append(self.bones[b][1])
        return order


@dataclass(frozen=True)
class TopologyConfig:
    """Parsed topology config file.

    Beyond the structural fields consumed by :func:`build_topology`, a config
    may carry the kinematic payload used by the procedural prior generator:
    world-frame rest directions, per-joint angle limits, nominal bone lengths
    and body-part groups (all keyed by the bone's child joint name).
    """

    name: str
    joints: tuple[str, ...]
    bones: tuple[tuple[str, str], ...]
    root: str | None = None
    rest_directions: Mapping[str, tuple[float, float, float]] = field(default_factory=dict)
    limits: Mapping[str, tuple[float, float, float, float]] = field(default_factory=dict)
    bone_lengths: Mapping[str, float] = field(default_factory=dict)
    groups: Mapping[str, object] = field(default_factory=dict)
    camera: str = "ventral"


def build_topology(config: TopologyConfig) -> SkeletonTopology:
    """Validate a config record and orient its bones into a rooted tree.

    The bone list may be written in either orientation; edges are oriented
    away from the root.  Raises :class:`TopologyError` for cyclic or
    disconnected bone sets, naming an offending edge.
    """
    joints = tuple(config.joints)
    if len(joints) < 2:
        raise TopologyError(f"topology {config.name!r} needs at least 2 joints")
    if len(set(joints)) != len(joints):
        dupes = sorted({j for j in joints if list(joints).count(j) > 1})
        raise TopologyError(f"duplicate joint names {dupes} in topology {config.name!r}")
    index = {n: i for i, n in enumerate(joints)}

    edges: list[tuple[int, int]] = []
    for a, b in config.bones:
        for end in (a, b):
            if end not in index:
                raise TopologyError(f"bone ({a}, {b}) references unknown joint {end!r}")
        if a == b:
            raise TopologyError(f"bone ({a}, {b}) is a self-loop")
        edges.append((index[a], index[b]))

    if len(edges) != len(joints) - 1:
        raise TopologyError(
            f"topology {config.name!r} has {len(edges)} bones for {len(joints)} joints; "
            f"a tree needs exactly {len(joints) - 1}"
        )

    root_name = config.root if config.root is not None else joints[0]
    if root_name not in index:
        raise TopologyError(f"root joint {root_name!r} is not in the joint list")
    root_id = index[root_name]

    # Orient edges away from the root by BFS; an edge that closes back onto a
    # visited joint is part of a cycle, and unreached joints mean the set is
    # disconnected.
    adjacency: dict[int, list[tuple[int, int]]] = {i: [] for i in range(len(joints))}
    for e, (a, b) in enumerate(edges):
        adjacency[a].append((b, e))
        adjacency[b].append((a, e))

    oriented: dict[int, tuple[int, int]] = {}
    visited = {root_id}
    frontier = [root_id]
    used_edges: set[int] = set()
    while frontier:
        j = frontier.pop(0)
        for other, e in adjacency[j]:
            if e in used_edges:
                continue
            used_edges.add(e)
            if other in visited:
                a, b = config.bones[e]
                raise TopologyError(f"bone ({a}, {b}) closes a cycle in topology {config.name!r}")
            visited.add(other)
            oriented[e] = (j, other)
            frontier.append(other)

    if len(visited) != len(joints):
        missing = [joints[i] for i in range(len(joints)) if i not in visited]
        a, b = config.bones[next(iter(set(range(len(edges))) - set(oriented)))]
        raise TopologyError(
            f"joints {missing} are unreachable from root {root_name!r}; "
            f"bone ({a}, {b}) is disconnected from the tree"
        )

    bones = tuple(oriented[e] for e in range(len(edges)))
    return SkeletonTopology(name=config.name, joints=joints, bones=bones, root_id=root_id)


# ---------------------------------------------------------------------------
# Joint limits
# ---------------------------------------------------------------------------

_DEFAULT_AZIMUTH_HALF_RANGE = 0.30
_DEFAULT_ELEVATION_HALF_RANGE = 0.25


@dataclass(frozen=True)
class JointLimits:
    """Angular ranges for the two rotational DoF of each non-root joint.

    Angles are azimuth/elevation offsets of a bone's direction relative to the
    frame anchored on its parent bone.  Rows are indexed by child joint id;
    the root row is unused and fixed at (0, 0).
    """

    azimuth: np.ndarray  # (J, 2) [lo, hi], radians
    elevation: np.ndarray  # (J, 2)

    def __post_init__(self):
        for name, arr in (("azimuth", self.azimuth), ("elevation", self.elevation)):
            if arr.ndim != 2 or arr.shape[1] != 2:
                raise ValueError(f"{name} limits must have shape (J, 2)")
            if np.any(arr[:, 0] > arr[:, 1]):
                raise ValueError(f"{name} limits have min > max")
            if np.any(arr <= -math.pi - 1e-12) or np.any(arr > math.pi + 1e-12):
                raise ValueError(f"{name} limits must lie within (-pi, pi]")
        self.azimuth.flags.writeable = False
        self.elevation.flags.writeable = False

    @property
    def midpoints(self) -> np.ndarray:
        """(J, 2) array of [azimuth, elevation] range midpoints."""
        return np.stack([self.azimuth.mean(axis=1), self.elevation.mean(axis=1)], axis=1)

    def clamp(self, angles: np.ndarray) -> np.ndarray:
        """Clamp (..., J, 2) azimuth/elevation angles into the limit box."""
        lo = np.stack([self.azimuth[:, 0], self.elevation[:, 0]], axis=1)
        hi = np.stack([self.azimuth[:, 1], self.elevation[:, 1]], axis=1)
        return np.clip(angles, lo, hi)

    def contains(self, angles: np.ndarray, atol: float = 1e-12) -> bool:
        lo = np.stack([self.azimuth[:, 0], self.elevation[:, 0]], axis=1)
        hi = np.stack([self.azimuth[:, 1], self.elevation[:, 1]], axis=1)
        return bool(np.all(angles >= lo - atol) and np.all(angles <= hi + atol))


def joint_limits(config: TopologyConfig, topology: SkeletonTopology) -> JointLimits:
    """Limits from the config, with moderate symmetric defaults for joints
    the config does not mention."""
    J = topology.n_joints
    az = np.tile([-_DEFAULT_AZIMUTH_HALF_RANGE, _DEFAULT_AZIMUTH_HALF_RANGE], (J, 1))
    el = np.tile([-_DEFAULT_ELEVATION_HALF_RANGE, _DEFAULT_ELEVATION_HALF_RANGE], (J, 1))
    az[topology.root_id] = 0.0
    el[topology.root_id] = 0.0
    for joint, entry in config.limits.items():
        j = topology.joint_id(joint)
        if j == topology.root_id:
            raise TopologyError(f"limits given for root joint {joint!r}")
        vals = [float(v) for v in entry]
        if len(vals) != 4:
            raise TopologyError(f"limits for {joint!r} must be [az_lo, az_hi, el_lo, el_hi]")
        az[j] = vals[0:2]
        el[j] = vals[2:4]
    return JointLimits(azimuth=az, elevation=el)


# ---------------------------------------------------------------------------
# Poses
# ---------------------------------------------------------------------------


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Pose2D:
    """Per-joint (u, v) in normalized image coordinates.

    Both coordinates live in [-1, 1]; (-1, -1) is the top-left image corner.
    Normalized coordinates are the canonical pose representation everywhere;
    pixel space appears only at I/O and evaluation boundaries.
    """

    coords: np.ndarray  # (J, 2) float64
    topology_ref: str

    def __post_init__(self):
        coords = _freeze(self.coords)
        if coords.ndim != 2 or coords.shape[1] != 2 or coords.shape[0] < 1:
            raise PoseError(f"Pose2D coords must be (J, 2), got {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise PoseError("Pose2D coords must be finite")
        if np.any(np.abs(coords) > 1.0 + 1e-9):
            worst = float(np.max(np.abs(coords)))
            raise PoseError(f"Pose2D coords must lie in [-1, 1]; max |coord| = {worst:.6g}")
        object.__setattr__(self, "coords", coords)

    @property
    def n_joints(self) -> int:
        return self.coords.shape[0]


@dataclass(frozen=True)
class Pose3D:
    """Per-joint (x, y, z) in model units (bone lengths are O(1)).

    World axes: +x is the body heading, +y the animal's left, +z up.
    """

    coords: np.ndarray  # (J, 3) float64
    topology_ref: str

    def __post_init__(self):
        coords = _freeze(self.coords)
        if coords.ndim != 2 or coords.shape[1] != 3 or coords.shape[0] < 1:
            raise PoseError(f"Pose3D coords must be (J, 3), got {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise PoseError("Pose3D coords must be finite")
        object.__setattr__(self, "coords", coords)

    @property
    def n_joints(self) -> int:
        return self.coords.shape[0]

    def bone_lengths(self, topology: SkeletonTopology) -> np.ndarray:
        """Euclidean length of every bone, in declaration order."""
        p = np.array([b[0] for b in topology.bones])
        c = np.array([b[1] for b in topology.bones])
        return np.linalg.norm(self.coords[c] - self.coords[p], axis=1)


def check_pose_matches(pose: Pose2D | Pose3D, topology: SkeletonTopology) -> None:
    if pose.n_joints != topology.n_joints:
        raise PoseError(
            f"pose has {pose.n_joints} joints but topology {topology.name!r} "
            f"has {topology.n_joints}"
        )


# ---------------------------------------------------------------------------
# Normalized <-> pixel coordinate transforms
# ---------------------------------------------------------------------------


def normalized_to_pixels(coords: np.ndarray, width: int, height: int) -> np.ndarray:
    """Affine map u in [-1, 1] -> x in [0, width] (v/height likewise)."""
    if width < 1 or height < 1:
        raise ValueError("image dimensions must be >= 1")
    c = np.asarray(coords, dtype=np.float64)
    out = np.empty_like(c)
    out[..., 0] = (c[..., 0] + 1.0) * 0.5 * width
    out[..., 1] = (c[..., 1] + 1.0) * 0.5 * height
    return out


def pixels_to_normalized(xy: np.ndarray, width: int, height: int) -> np.ndarray:
    """Inverse of :func:`normalized_to_pixels`; round-trips within 1e-9."""
    if width < 1 or height < 1:
        raise ValueError("image dimensions must be >= 1")
    c = np.asarray(xy, dtype=np.float64)
    out = np.empty_like(c)
    out[..., 0] = c[..., 0] * 2.0 / width - 1.0
    out[..., 1] = c[..., 1] * 2.0 / height - 1.0
    return out


def pose2d_to_pixels(pose: Pose2D, width: int, height: int) -> np.ndarray:
    """Joint positions in pixel units, (J, 2) with columns (x_px, y_px)."""
    return normalized_to_pixels(pose.coords, width, height)


def pixels_to_pose2d(xy: np.ndarray, width: int, height: int, topology_ref: str) -> Pose2D:
    return Pose2D(coords=pixels_to_normalized(xy, width, height), topology_ref=topology_ref)


# ---------------------------------------------------------------------------
# Config loading
# ---------------------------------------------------------------------------

BUILTIN_TOPOLOGIES = ("mouse18", "horse")


def _parse_topology_mapping(raw: Mapping, source: str) -> TopologyConfig:
    try:
        name = str(raw["name"])
        joints = tuple(str(j) for j in raw["joints"])
        bones = tuple((str(a), str(b)) for a, b in raw["bones"])
    except (KeyError, TypeError, ValueError) as exc:
        raise TopologyError(f"malformed topology config {source}: {exc}") from exc
    rest = {str(k): tuple(float(x) for x in v) for k, v in (raw.get("rest_directions") or {}).items()}
    for k, v in rest.items():
        if len(v) != 3:
            raise TopologyError(f"rest direction for {k!r} must be a 3-vector")
    limits = {str(k): tuple(float(x) for x in v) for k, v in (raw.get("limits") or {}).items()}
    lengths = {str(k): float(v) for k, v in (raw.get("bone_lengths") or {}).items()}
    return TopologyConfig(
        name=name,
        joints=joints,
        bones=bones,
        root=raw.get("root"),
        rest_directions=rest,
        limits=limits,
        bone_lengths=lengths,
        groups=dict(raw.get("groups") or {}),
        camera=str(raw.get("camera", "ventral")),
    )


def load_topology_config(name_or_path: str | Path) -> TopologyConfig:
    """Load a topology config by built-in name ("mouse18", "horse") or path."""
    path = Path(name_or_path)
    if path.suffix in (".yaml", ".yml") or path.exists():
        with open(path) as fh:
            raw = yaml.safe_load(fh)
        return _parse_topology_mapping(raw, str(path))
    name = str(name_or_path)
    if name in BUILTIN_TOPOLOGIES:
        text = resources.files("unpairedpose.configs").joinpath(f"{name}.yaml").read_text()
        return _parse_topology_mapping(yaml.safe_load(text), f"builtin:{name}")
    raise TopologyError(
        f"unknown topology {name!r}: not a file and not one of {list(BUILTIN_TOPOLOGIES)}"
    )


def load_topology(name_or_path: str | Path) -> SkeletonTopology:
    return build_topology(load_topology_config(name_or_path))


def bone_lengths_array(config: TopologyConfig, topology: SkeletonTopology) -> np.ndarray:
    """(J,) nominal length of the bone ending at each joint; root entry is 0.

    Joints absent from the config default to length 1.
    """
    out = np.ones(topology.n_joints, dtype=np.float64)
    out[topology.root_id] = 0.0
    for joint, length in config.bone_lengths.items():
        j = topology.joint_id(joint)
        if length <= 0:
            raise TopologyError(f"bone length for {joint!r} must be positive")
        out[j] = float(length)
    return out


def limb_groups(config: TopologyConfig) -> dict[str, list[str]]:
    """Named limb groups (joint-name lists), empty if the config has none."""
    limbs = config.groups.get("limbs") if config.groups else None
    if not limbs:
        return {}
    return {str(k): [str(j) for j in v] for k, v in limbs.items()}


def body_part_of(config: TopologyConfig, joint: str) -> str:
    """Coarse body-part class of the bone ending at `joint`:
    one of "head", "spine", "tail", "limb", or "body" when unclassified."""
    groups = config.groups or {}
    for part in ("head", "spine", "tail"):
        if joint in (groups.get(part) or []):
            return part
    for members in limb_groups(config).values():
        if joint in members:
            return "limb"
    return "body"
