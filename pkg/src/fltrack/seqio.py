"""Image sequences, ground truth files and the synthetic sequence generator.

Frames are stored as ``img0001.pgm``, ``img0002.pgm``, ... (binary P5) and
the ground truth as one ``x,y,w,h`` line per frame with 0-based top-left
coordinates.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence as Seq

import numpy as np

LUMA_WEIGHTS = (0.299, 0.587, 0.114)
FRAME_PATTERN = re.compile(r"^img(\d{4,})\.(pgm|ppm|pnm)$", re.IGNORECASE)
TRUTH_FILENAME = "groundtruth.txt"


class SequenceError(ValueError):
    """Malformed sequence directory, frame file or ground-truth file."""


@dataclass(frozen=True)
class BoundingBox:
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box width and height must be positive, got w={self.w} h={self.h}")

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def shifted(self, dx: int, dy: int) -> "BoundingBox":
        return BoundingBox(self.x + dx, self.y + dy, self.w, self.h)

    def clip(self, width: int, height: int) -> Optional["BoundingBox"]:
        """Intersection with the frame ``[0, width) x [0, height)``; None if empty."""
        x0, y0 = max(self.x, 0), max(self.y, 0)
        x1, y1 = min(self.x + self.w, width), min(self.y + self.h, height)
        if x1 <= x0 or y1 <= y0:
            return None
        return BoundingBox(x0, y0, x1 - x0, y1 - y0)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x, self.y, self.w, self.h)


@dataclass
class GrayFrame:
    """8-bit grayscale frame; ``pixels`` is a (height, width) uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        self.pixels = np.ascontiguousarray(self.pixels, dtype=np.uint8)
        if self.pixels.ndim != 2:
            raise ValueError(f"frame must be 2-D, got shape {self.pixels.shape}")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass
class Sequence:
    frames: list[GrayFrame]
    truth: Optional[list[BoundingBox]] = None
    name: str = ""

    def __post_init__(self):
        if self.truth is not None and len(self.truth) != len(self.frames):
            raise SequenceError(f"truth length {len(self.truth)} != {len(self.frames)} frames")

    def __len__(self):
        return len(self.frames)


# ---------------------------------------------------------------------------
# PNM reading / writing


def _pnm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens = []
    i = 0
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i : i + 1] == b"#":
            while i < n and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        start = i
        while i < n and not data[i : i + 1].isspace() and data[i : i + 1] != b"#":
            i += 1
        if start == i:
            raise SequenceError("truncated PNM header")
        tokens.append(data[start:i])
    # exactly one whitespace byte separates the header from the raster
    return tokens, i + 1


def to_gray(rgb: np.ndarray) -> np.ndarray:
    """Luma conversion (0.299, 0.587, 0.114) rounded to the nearest integer."""
    r, g, b = (rgb[..., k].astype(np.float64) for k in range(3))
    gray = LUMA_WEIGHTS[0] * r + LUMA_WEIGHTS[1] * g + LUMA_WEIGHTS[2] * b
    return np.clip(np.floor(gray + 0.5), 0, 255).astype(np.uint8)


def read_pnm(path) -> GrayFrame:
    """Read a binary PGM (P5) or PPM (P6) file as a grayscale frame."""
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise SequenceError(f"{path}: unsupported PNM type {magic!r}")
    tokens, offset = _pnm_tokens(data[2:], 3)
    offset += 2
    width, height, maxval = (int(t) for t in tokens)
    channels = 1 if magic == b"P5" else 3
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    count = width * height * channels
    raw = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
    arr = raw.astype(np.float64)
    if maxval != 255:
        arr = arr * (255.0 / maxval)
    if channels == 3:
        return GrayFrame(to_gray(np.floor(arr + 0.5).reshape(height, width, 3)))
    return GrayFrame(np.clip(np.floor(arr + 0.5), 0, 255).astype(np.uint8).reshape(height, width))


def write_pgm(path, frame: GrayFrame) -> None:
    header = f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(frame.pixels.tobytes())


# ---------------------------------------------------------------------------
# Ground truth


def parse_truth_line(line: str) -> BoundingBox:
    tokens = [t for t in re.split(r"[,\s]+", line.strip()) if t]
    if len(tokens) != 4:
        raise SequenceError(f"expected 4 fields, got {len(tokens)}: {line!r}")
    try:
        x, y, w, h = (int(t) for t in tokens)
    except ValueError:
        raise SequenceError(f"non-integer field in {line!r}") from None
    if w <= 0 or h <= 0:
        raise SequenceError(f"non-positive box size in {line!r}")
    return BoundingBox(x, y, w, h)


def read_truth(path, one_based: bool = False) -> list[BoundingBox]:
    boxes = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                box = parse_truth_line(line)
            except SequenceError as exc:
                raise SequenceError(f"{path}:{lineno}: {exc}") from None
            if one_based:
                box = box.shifted(-1, -1)
            boxes.append(box)
    return boxes


def write_truth(path, boxes: Seq[BoundingBox]) -> None:
    with open(path, "w", newline="\n") as fh:
        for b in boxes:
            fh.write(f"{b.x},{b.y},{b.w},{b.h}\n")


# ---------------------------------------------------------------------------
# Sequence directories


def load_sequence(frame_dir, truth_path=None, one_based: bool = False) -> Sequence:
    frame_dir = Path(frame_dir)
    if not frame_dir.is_dir():
        raise SequenceError(f"missing frame directory: {frame_dir}")
    indexed = {}
    for entry in os.listdir(frame_dir):
        m = FRAME_PATTERN.match(entry)
        if m:
            idx = int(m.group(1))
            if idx in indexed:
                raise SequenceError(f"duplicate frame index {idx} in {frame_dir}")
            indexed[idx] = frame_dir / entry
    if not indexed:
        raise SequenceError(f"no img%04d frames in {frame_dir}")
    for expected in range(1, len(indexed) + 1):
        if expected not in indexed:
            raise SequenceError(f"gap at index {expected} in {frame_dir}")
    frames = [read_pnm(indexed[i]) for i in range(1, len(indexed) + 1)]
    truth = None
    if truth_path is not None:
        truth = read_truth(truth_path, one_based=one_based)
        if len(truth) != len(frames):
            raise SequenceError(
                f"truth length {len(truth)} ≠ {len(frames)} frames ({truth_path})"
            )
    return Sequence(frames, truth, name=frame_dir.name)


def save_sequence(seq: Sequence, out_dir) -> Path:
    """Write frames as img%04d.pgm and, if present, groundtruth.txt."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(seq.frames, 1):
        write_pgm(out_dir / f"img{i:04d}.pgm", frame)
    if seq.truth is not None:
        write_truth(out_dir / TRUTH_FILENAME, seq.truth)
    return out_dir


# ---------------------------------------------------------------------------
# Synthetic sequences


def _texture(rng: np.random.Generator, size: int, block: int = 4) -> np.ndarray:
    cells = -(-size // block)
    coarse = rng.uniform(30.0, 225.0, size=(cells, cells))
    return np.kron(coarse, np.ones((block, block)))[:size, :size]


def synth_sequence(
    frame_w: int,
    frame_h: int,
    n_frames: int,
    target_size: int,
    velocity: tuple[float, float] = (0.0, 0.0),
    jitter_sigma: float = 0.0,
    noise_sigma: float = 0.0,
    seed: int = 0,
    start: Optional[tuple[int, int]] = None,
) -> Sequence:
    """Square random-texture target moving at constant velocity over noise.

    The target path is ``start + t * velocity`` plus Gaussian jitter clipped to
    3 sigma, rounded to integer pixels. Without ``start`` the path is centred
    in the frame. Background is mid-gray plus fresh i.i.d. noise per frame; the
    target texture is fixed and receives the same per-frame noise.
    """
    if n_frames < 1 or target_size < 1:
        raise ValueError("n_frames and target_size must be positive")
    dx, dy = velocity
    if start is None:
        start = (
            int(round(frame_w / 2 - target_size / 2 - dx * (n_frames - 1) / 2)),
            int(round(frame_h / 2 - target_size / 2 - dy * (n_frames - 1) / 2)),
        )
    x0, y0 = start
    margin = 3.0 * jitter_sigma
    ts = np.arange(n_frames)
    nominal_x = x0 + dx * ts
    nominal_y = y0 + dy * ts
    if (
        np.floor(nominal_x.min() - margin + 0.5) < 0
        or np.floor(nominal_y.min() - margin + 0.5) < 0
        or np.floor(nominal_x.max() + margin + 0.5) + target_size > frame_w
        or np.floor(nominal_y.max() + margin + 0.5) + target_size > frame_h
    ):
        raise ValueError("target would exit the frame")

    rng = np.random.default_rng(seed)
    texture = _texture(rng, target_size)
    frames, truth = [], []
    for t in range(n_frames):
        jx, jy = (0.0, 0.0)
        if jitter_sigma > 0:
            jx, jy = np.clip(rng.normal(0.0, jitter_sigma, size=2), -margin, margin)
        x = int(np.floor(nominal_x[t] + jx + 0.5))
        y = int(np.floor(nominal_y[t] + jy + 0.5))
        img = np.full((frame_h, frame_w), 128.0)
        img[y : y + target_size, x : x + target_size] = texture
        if noise_sigma > 0:
            img += rng.normal(0.0, noise_sigma, size=img.shape)
        frames.append(GrayFrame(np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)))
        truth.append(BoundingBox(x, y, target_size, target_size))
    return Sequence(frames, truth, name=f"synth-{seed}")
