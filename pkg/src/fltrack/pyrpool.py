"""Spatial pyramid max pooling of patch codes into one feature vector."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PyramidSpec:
    levels: tuple[int, ...] = (1, 2, 3)

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(int(s) for s in self.levels))
        if not self.levels or min(self.levels) < 1:
            raise ValueError("pyramid levels must be a non-empty list of sides >= 1")

    @property
    def n_cells(self) -> int:
        return sum(s * s for s in self.levels)

    def feature_dim(self, n: int) -> int:
        return n * self.n_cells


def cell_assignment(positions: np.ndarray, region_w: int, region_h: int, patch_size: int, spec: PyramidSpec) -> np.ndarray:
    """N x L global cell index of every patch at every level.

    A patch belongs to the cell containing its centre; the last row/column of
    cells absorbs centres on the right/bottom edge.
    """
    positions = np.asarray(positions).reshape(-1, 2)
    if len(positions) and (
        positions.min() < 0
        or np.any(positions[:, 0] + patch_size > region_h)
        or np.any(positions[:, 1] + patch_size > region_w)
    ):
        raise ValueError("patch position outside the pooling region")
    cy = positions[:, 0] + patch_size / 2.0
    cx = positions[:, 1] + patch_size / 2.0
    cols = []
    offset = 0
    for side in spec.levels:
        r = np.minimum(np.floor(cy * side / region_h).astype(np.int64), side - 1)
        c = np.minimum(np.floor(cx * side / region_w).astype(np.int64), side - 1)
        cols.append(offset + r * side + c)
        offset += side * side
    return np.stack(cols, axis=1) if cols else np.zeros((len(positions), 0), dtype=np.int64)


def pool_cells(codes: np.ndarray, cells: np.ndarray, n_cells: int) -> np.ndarray:
    """Max-pool codes (..., N, n) into (..., n_cells, n) given N x L cell indices.

    Leading axes are a batch of regions sharing one patch layout. Empty cells
    stay 0.
    """
    out = np.zeros(codes.shape[:-2] + (n_cells, codes.shape[-1]))
    for cell in range(n_cells):
        members = np.flatnonzero(np.any(cells == cell, axis=1))
        if len(members):
            out[..., cell, :] = codes[..., members, :].max(axis=-2)
    return out


def pool_grid(codes: np.ndarray, rows: np.ndarray, cols: np.ndarray, region_w: int, region_h: int, patch_size: int, spec: PyramidSpec) -> np.ndarray:
    """Same result as ``pool_cells`` for patches laid out on a full grid.

    ``codes`` is (..., ny, nx, n) with patch top-left rows ``rows`` (ny) and
    columns ``cols`` (nx); returns (..., n_cells, n). Cells are contiguous
    row/column ranges of the grid, so pooling is done with slices.
    """
    lead = codes.shape[:-3]
    n = codes.shape[-1]
    out = np.zeros(lead + (spec.n_cells, n))
    cy = np.asarray(rows) + patch_size / 2.0
    cx = np.asarray(cols) + patch_size / 2.0
    offset = 0
    for side in spec.levels:
        rbin = np.minimum(np.floor(cy * side / region_h).astype(np.int64), side - 1)
        cbin = np.minimum(np.floor(cx * side / region_w).astype(np.int64), side - 1)
        for r in range(side):
            rsel = np.flatnonzero(rbin == r)
            if not len(rsel):
                continue
            band = codes[..., rsel[0] : rsel[-1] + 1, :, :].max(axis=-3)
            for c in range(side):
                csel = np.flatnonzero(cbin == c)
                if len(csel):
                    out[..., offset + r * side + c, :] = band[..., csel[0] : csel[-1] + 1, :].max(axis=-2)
        offset += side * side
    return out


def pyramid_max_pool(codes, region_w: int, region_h: int, patch_size: int, spec: PyramidSpec = PyramidSpec()) -> np.ndarray:
    """Feature vector ordered level, then cell row-major, then basis."""
    cells = cell_assignment(codes.positions, region_w, region_h, patch_size, spec)
    return pool_cells(codes.data.T, cells, spec.n_cells).reshape(-1)
