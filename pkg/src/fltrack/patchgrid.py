"""Dense patch extraction on a regular grid plus per-patch contrast normalization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .seqio import BoundingBox, GrayFrame

CONTRAST_EPS = 10.0
SMALL_TARGET_SIDE = 30


@dataclass(frozen=True)
class PatchGridSpec:
    patch_size: int = 8
    stride: int = 4

    def __post_init__(self):
        if self.patch_size < 2:
            raise ValueError("patch_size must be >= 2")
        if not 1 <= self.stride <= self.patch_size:
            raise ValueError("stride must lie in [1, patch_size]")

    @property
    def dim(self) -> int:
        return self.patch_size * self.patch_size

    @classmethod
    def for_target(cls, box: BoundingBox) -> "PatchGridSpec":
        """8x8 patches at stride 4, or 6x6 at stride 2 for targets under 30 px."""
        if min(box.w, box.h) < SMALL_TARGET_SIDE:
            return cls(6, 2)
        return cls(8, 4)


@dataclass
class PatchMatrix:
    """``data`` is m x N (one patch per column); ``positions`` is N x 2 (row, col)
    top-left offsets relative to the region origin."""

    data: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.int64).reshape(-1, 2)
        if self.data.ndim != 2 or self.data.shape[1] != len(self.positions):
            raise ValueError(
                f"data has {self.data.shape[1] if self.data.ndim == 2 else '?'} columns "
                f"but {len(self.positions)} positions"
            )

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def n_patches(self) -> int:
        return self.data.shape[1]


def grid_counts(width: int, height: int, spec: PatchGridSpec) -> tuple[int, int]:
    """Patches per axis (columns, rows) for a region of the given size."""
    p, q = spec.patch_size, spec.stride
    return ((width - p) // q + 1, (height - p) // q + 1)


def grid_offsets(width: int, height: int, spec: PatchGridSpec) -> np.ndarray:
    """Row-major (row, col) top-left offsets of every grid patch in a region."""
    nx, ny = grid_counts(width, height, spec)
    rows, cols = np.meshgrid(np.arange(ny) * spec.stride, np.arange(nx) * spec.stride, indexing="ij")
    return np.stack([rows.ravel(), cols.ravel()], axis=1)


def clip_region(frame: GrayFrame, region: BoundingBox, spec: PatchGridSpec) -> BoundingBox:
    clipped = region.clip(frame.width, frame.height)
    if clipped is None or clipped.w < spec.patch_size or clipped.h < spec.patch_size:
        raise ValueError(
            f"region {region.as_tuple()} clipped to the {frame.width}x{frame.height} frame "
            f"is smaller than the {spec.patch_size}px patch"
        )
    return clipped


def patches_at(pixels: np.ndarray, rows: np.ndarray, cols: np.ndarray, p: int) -> np.ndarray:
    """Stack the p x p patches with absolute top-left (rows, cols) as m x N columns."""
    windows = sliding_window_view(pixels, (p, p))
    return windows[rows, cols].reshape(len(rows), p * p).T.astype(np.float64)


def extract_patches(frame: GrayFrame, region: BoundingBox, spec: PatchGridSpec) -> PatchMatrix:
    """Raw (un-normalized) grid patches of ``region`` after clipping to the frame.

    Positions are relative to the clipped region's top-left corner.
    """
    clipped = clip_region(frame, region, spec)
    offsets = grid_offsets(clipped.w, clipped.h, spec)
    data = patches_at(frame.pixels, offsets[:, 0] + clipped.y, offsets[:, 1] + clipped.x, spec.patch_size)
    return PatchMatrix(data, offsets)


def normalize_columns(data: np.ndarray, eps: float = CONTRAST_EPS) -> np.ndarray:
    centered = data - data.mean(axis=0, keepdims=True)
    return centered / np.sqrt(centered.var(axis=0, keepdims=True) + eps)


def contrast_normalize(patches: PatchMatrix, eps: float = CONTRAST_EPS) -> PatchMatrix:
    """Subtract each column's mean and divide by sqrt(var + eps); no unit-length step."""
    return PatchMatrix(normalize_columns(patches.data, eps), patches.positions.copy())
