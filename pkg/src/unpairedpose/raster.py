"""Differentiable skeleton-image rasterization.

A 2D pose becomes an image by painting every bone as a Gaussian-falloff
stroke: the value at a pixel is ``exp(-d^2 / (2 sigma^2))`` where ``d`` is the
Euclidean distance (in pixels) from the pixel centre to the bone segment,
composed across bones by a per-channel max.  The max keeps values in [0, 1]
regardless of bone count, and the whole map is piecewise smooth in the joint
coordinates, so gradients flow from image space back into the pose.

The fast path runs on torch tensors (autograd supplies the exact gradients);
:func:`reference_rasterize` is a deliberately independent dense numpy
implementation kept as a test oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from .skeleton import Pose2D, SkeletonTopology, TopologyConfig, body_part_of, check_pose_matches

_EPS = 1e-12


@dataclass(frozen=True)
class SkeletonImage:
    """Rasterized bone map: H x W x C float pixels in [0, 1]."""

    pixels: np.ndarray
    resolution: tuple[int, int]  # (H, W)
    channel_mode: str  # "mono" | "per-bone-group"

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 3 or px.shape[:2] != tuple(self.resolution):
            raise ValueError(f"pixels shape {px.shape} does not match resolution {self.resolution}")
        if not np.all(np.isfinite(px)):
            raise ValueError("skeleton image has non-finite pixels")
        if px.min() < -1e-9 or px.max() > 1.0 + 1e-9:
            raise ValueError("skeleton image pixels must lie in [0, 1]")
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def n_channels(self) -> int:
        return self.pixels.shape[2]


@dataclass(frozen=True)
class RasterParams:
    """Rendering knobs of the pose -> skeleton-image map.

    ``sigma`` is the Gaussian falloff width in pixels at ``resolution``.
    In "per-bone-group" mode each bone is drawn into the channels its group
    maps to (a group may share a channel with another, mixing their colors);
    ``bone_channels`` is a (n_bones, n_channels) 0/1 matrix.  "mono" mode
    draws everything into a single channel.
    """

    sigma: float = 1.5
    resolution: tuple[int, int] = (128, 128)
    channel_mode: str = "per-bone-group"
    bone_channels: np.ndarray | None = None

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        H, W = self.resolution
        if H < 8 or W < 8:
            raise ValueError("resolution must be at least 8x8")
        if self.channel_mode not in ("mono", "per-bone-group"):
            raise ValueError(f"unknown channel mode {self.channel_mode!r}")
        if self.bone_channels is not None:
            bc = np.asarray(self.bone_channels, dtype=np.float64)
            if bc.ndim != 2:
                raise ValueError("bone_channels must be (n_bones, n_channels)")
            bc.flags.writeable = False
            object.__setattr__(self, "bone_channels", bc)

    def n_channels(self, topology: SkeletonTopology) -> int:
        return self.channel_matrix(topology).shape[1]

    def channel_matrix(self, topology: SkeletonTopology) -> np.ndarray:
        """(n_bones, n_channels) assignment actually used for ``topology``."""
        if self.channel_mode == "mono":
            return np.ones((topology.n_bones, 1))
        if self.bone_channels is not None:
            bc = self.bone_channels
            if bc.shape[0] != topology.n_bones:
                raise ValueError(
                    f"bone_channels has {bc.shape[0]} rows but topology "
                    f"{topology.name!r} has {topology.n_bones} bones"
                )
            return bc
        return np.ones((topology.n_bones, 1))


# Default 3-channel grouping: spine+tail, fore limbs, hind limbs get a channel
# each; head bones draw into the first two (color mixing).
_GROUP_CHANNELS = {
    "spine": (0,),
    "tail": (0,),
    "body": (0,),
    "fore": (1,),
    "hind": (2,),
    "head": (0, 1),
}


def bone_group_channels(config: TopologyConfig, topology: SkeletonTopology) -> np.ndarray:
    """Build the default (n_bones, 3) channel matrix from a topology config's
    body-part groups."""
    from .skeleton import limb_groups

    limbs = limb_groups(config)
    mat = np.zeros((topology.n_bones, 3))
    for b, (_p, c) in enumerate(topology.bones):
        joint = topology.joints[c]
        part = body_part_of(config, joint)
        if part == "limb":
            gname = next(g for g, members in limbs.items() if joint in members)
            part = "fore" if "fore" in gname or "front" in gname else "hind"
        for ch in _GROUP_CHANNELS[part]:
            mat[b, ch] = 1.0
    return mat


def default_raster_params(config: TopologyConfig, topology: SkeletonTopology,
                          sigma: float = 1.5,
                          resolution: tuple[int, int] = (128, 128),
                          channel_mode: str = "per-bone-group") -> RasterParams:
    bone_channels = None
    if channel_mode == "per-bone-group":
        bone_channels = bone_group_channels(config, topology)
    return RasterParams(sigma=sigma, resolution=resolution,
                        channel_mode=channel_mode, bone_channels=bone_channels)


class SkeletonRasterizer:
    """The fixed, non-learnable, differentiable pose -> skeleton-image map.

    Instances precompute bone indexing for a topology and are stateless
    afterwards; calling one on a (N, J, 2) coordinate tensor returns an
    (N, C, H, W) tensor of skeleton images and participates in autograd.
    """

    def __init__(self, topology: SkeletonTopology, params: RasterParams):
        self.topology = topology
        self.params = params
        self._parents = torch.tensor([b[0] for b in topology.bones], dtype=torch.long)
        self._children = torch.tensor([b[1] for b in topology.bones], dtype=torch.long)
        self._channels = torch.from_numpy(params.channel_matrix(topology).copy())

    @property
    def n_channels(self) -> int:
        return self._channels.shape[1]

    def __call__(self, coords: torch.Tensor) -> torch.Tensor:
        if coords.ndim != 3 or coords.shape[1] != self.topology.n_joints or coords.shape[2] != 2:
            raise ValueError(
                f"expected coordinates (N, {self.topology.n_joints}, 2), got {tuple(coords.shape)}"
            )
        H, W = self.params.resolution
        dtype = coords.dtype if coords.is_floating_point() else torch.float32
        device = coords.device
        sigma = self.params.sigma

        px = (coords[..., 0] + 1.0) * (0.5 * W)  # (N, J)
        py = (coords[..., 1] + 1.0) * (0.5 * H)
        ax, ay = px[:, self._parents], py[:, self._parents]  # (N, B)
        bx, by = px[:, self._children], py[:, self._children]

        xs = torch.arange(W, dtype=dtype, device=device) + 0.5
        ys = torch.arange(H, dtype=dtype, device=device) + 0.5

        abx = (bx - ax)[:, :, None, None]
        aby = (by - ay)[:, :, None, None]
        apx = xs[None, None, None, :] - ax[:, :, None, None]  # (N, B, 1, W)
        apy = ys[None, None, :, None] - ay[:, :, None, None]  # (N, B, H, 1)
        denom = (abx * abx + aby * aby).clamp_min(_EPS)
        t = ((apx * abx + apy * aby) / denom).clamp(0.0, 1.0)  # (N, B, H, W)
        dx = apx - t * abx
        dy = apy - t * aby
        g = torch.exp((dx * dx + dy * dy) / (-2.0 * sigma * sigma))  # (N, B, H, W)

        weights = self._channels.to(dtype=dtype, device=device)  # (B, C)
        per_channel = g[:, :, None, :, :] * weights[None, :, :, None, None]
        return per_channel.amax(dim=1)  # (N, C, H, W)

    # -- value-type front ends ------------------------------------------------

    def rasterize(self, pose: Pose2D) -> SkeletonImage:
        check_pose_matches(pose, self.topology)
        coords = torch.from_numpy(pose.coords[None, :, :].copy())
        with torch.no_grad():
            out = self(coords)[0]
        return SkeletonImage(
            pixels=out.permute(1, 2, 0).numpy(),
            resolution=self.params.resolution,
            channel_mode=self.params.channel_mode,
        )

    def rasterize_batch(self, poses: Sequence[Pose2D]) -> list[SkeletonImage]:
        if len(poses) == 0:
            return []
        for pose in poses:
            check_pose_matches(pose, self.topology)
        coords = torch.from_numpy(np.stack([p.coords for p in poses]))
        with torch.no_grad():
            out = self(coords)
        return [
            SkeletonImage(
                pixels=img.permute(1, 2, 0).numpy(),
                resolution=self.params.resolution,
                channel_mode=self.params.channel_mode,
            )
            for img in out
        ]


def rasterize(pose: Pose2D, topology: SkeletonTopology, params: RasterParams) -> SkeletonImage:
    return SkeletonRasterizer(topology, params).rasterize(pose)


def rasterize_batch(poses: Sequence[Pose2D], topology: SkeletonTopology,
                    params: RasterParams) -> list[SkeletonImage]:
    return SkeletonRasterizer(topology, params).rasterize_batch(poses)


def beta_gradient(pose: Pose2D, topology: SkeletonTopology, params: RasterParams,
                  upstream: np.ndarray) -> np.ndarray:
    """Gradient of <rasterize(pose), upstream> w.r.t. the joint coordinates.

    ``upstream`` is (H, W, C); the result is (J, 2) in normalized units.
    """
    raster = SkeletonRasterizer(topology, params)
    up = np.asarray(upstream, dtype=np.float64)
    H, W = params.resolution
    if up.shape != (H, W, raster.n_channels):
        raise ValueError(
            f"upstream must be (H, W, C) = ({H}, {W}, {raster.n_channels}), got {up.shape}"
        )
    coords = torch.from_numpy(pose.coords.copy())[None, :, :].requires_grad_(True)
    img = raster(coords)  # (1, C, H, W)
    weight = torch.from_numpy(up).permute(2, 0, 1)[None]
    (img * weight).sum().backward()
    return coords.grad[0].numpy().copy()


def reference_rasterize(pose: Pose2D, topology: SkeletonTopology,
                        params: RasterParams) -> np.ndarray:
    """Dense per-pixel, per-bone reference rasterizer (test oracle).

    Written against the geometric definition with explicit endpoint /
    interior-projection cases, independently of the fast torch path.
    Returns (H, W, C) float64 pixels.
    """
    check_pose_matches(pose, topology)
    H, W = params.resolution
    channels = params.channel_matrix(topology)
    C = channels.shape[1]
    pts = np.empty_like(pose.coords)
    pts[:, 0] = (pose.coords[:, 0] + 1.0) * 0.5 * W
    pts[:, 1] = (pose.coords[:, 1] + 1.0) * 0.5 * H

    out = np.zeros((H, W, C))
    two_sigma_sq = 2.0 * params.sigma**2
    for b, (p, c) in enumerate(topology.bones):
        a_pt, b_pt = pts[p], pts[c]
        seg = b_pt - a_pt
        seg_len_sq = float(seg @ seg)
        gauss = np.empty((H, W))
        for row in range(H):
            yc = row + 0.5
            for col in range(W):
                xc = col + 0.5
                if seg_len_sq == 0.0:
                    d_sq = (xc - a_pt[0]) ** 2 + (yc - a_pt[1]) ** 2
                else:
                    proj = ((xc - a_pt[0]) * seg[0] + (yc - a_pt[1]) * seg[1]) / seg_len_sq
                    if proj <= 0.0:
                        d_sq = (xc - a_pt[0]) ** 2 + (yc - a_pt[1]) ** 2
                    elif proj >= 1.0:
                        d_sq = (xc - b_pt[0]) ** 2 + (yc - b_pt[1]) ** 2
                    else:
                        nx = a_pt[0] + proj * seg[0]
                        ny = a_pt[1] + proj * seg[1]
                        d_sq = (xc - nx) ** 2 + (yc - ny) ** 2
                gauss[row, col] = math.exp(-d_sq / two_sigma_sq)
        for ch in range(C):
            if channels[b, ch] > 0:
                np.maximum(out[:, :, ch], channels[b, ch] * gauss, out=out[:, :, ch])
    return out
