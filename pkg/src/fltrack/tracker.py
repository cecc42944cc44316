"""Tracking-by-detection with online-learned patch features.

Per frame: sample candidate boxes around the previous estimate, encode their
grid patches against the current dictionary, max-pool over the spatial
pyramid, score with the linear LS-SVM and keep the best box. Labelled samples
around each estimate feed a first-10/recent-20 frame reservoir from which the
classifier is retrained; the dictionary is refreshed by online dictionary
learning when the dominant bases of the target region change.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dictlearn import (
    Dictionary,
    OdlState,
    UpdatePolicy,
    basis_weights,
    init_dictionary,
    odl_epoch,
    should_update,
)
from .encode import EncoderSpec, encode_matrix, st_threshold
from .lasso import default_lambda
from .lssvm import DEFAULT_GAMMA, LinearModel, Reservoir, predict, train
from .patchgrid import PatchGridSpec, grid_counts, grid_offsets, normalize_columns, patches_at
from .pyrpool import PyramidSpec, pool_grid
from .seqio import BoundingBox, GrayFrame, Sequence

log = logging.getLogger(__name__)

UPDATE_MODES = ("off", "triggered", "always")


class TrackingError(RuntimeError):
    pass


@dataclass
class TrackerConfig:
    search_radius_track: int = 30
    search_radius_train: int = 60
    candidate_stride: int = 2
    retrain_every: int = 4
    negatives_per_frame: int = 40
    neg_vor_max: float = 0.3
    jitter_positives: int = 4
    dict_update_mode: str = "off"
    dict_method: str = "odl"
    dict_size: int = 100
    init_epochs: int = 2
    odl_lambda: Optional[float] = None
    odl_batch: int = 256
    overlap_threshold: float = 0.9
    grid: Optional[PatchGridSpec] = None
    encoder: EncoderSpec = field(default_factory=EncoderSpec)
    pyramid: PyramidSpec = field(default_factory=PyramidSpec)
    gamma: float = DEFAULT_GAMMA
    bias: str = "corrected"
    gt_frame2: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.search_radius_track <= 0 or self.search_radius_train <= 0:
            raise ValueError("search radii must be positive")
        if self.candidate_stride < 1 or self.retrain_every < 1:
            raise ValueError("candidate_stride and retrain_every must be >= 1")
        if not 0 <= self.neg_vor_max < 1:
            raise ValueError("neg_vor_max must lie in [0, 1)")
        if self.dict_update_mode not in UPDATE_MODES:
            raise ValueError(f"dict_update_mode must be one of {UPDATE_MODES}")


@dataclass
class TrackState:
    current_box: BoundingBox
    dictionary: Dictionary
    odl: OdlState
    policy: UpdatePolicy
    model: Optional[LinearModel]
    reservoir: Reservoir
    frame_index: int
    grid: PatchGridSpec
    n_updates: int = 0


@dataclass
class FrameResult:
    box: BoundingBox
    score: float
    dict_updated: bool = False


def disc_offsets(radius: float, stride: int = 1) -> np.ndarray:
    """(dx, dy) rows on the stride grid with dx^2 + dy^2 <= radius^2, row-major by dy."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    r = int(np.floor(radius / stride)) * stride
    steps = np.arange(-r, r + 1, stride)
    dy, dx = np.meshgrid(steps, steps, indexing="ij")
    keep = dx * dx + dy * dy <= radius * radius
    return np.stack([dx[keep], dy[keep]], axis=1)


def sample_candidates(center_box: BoundingBox, radius: float, stride: int = 1) -> list[BoundingBox]:
    """Same-size boxes whose offset lies on the stride grid inside the disc.

    Ordered row-major by (dy, dx); the unshifted box is always included.
    """
    return [center_box.shifted(int(dx), int(dy)) for dx, dy in disc_offsets(radius, stride)]


def dilate(box: BoundingBox, radius: int) -> BoundingBox:
    return BoundingBox(box.x - radius, box.y - radius, box.w + 2 * radius, box.h + 2 * radius)


def window_patches(frame: GrayFrame, window: BoundingBox, grid: PatchGridSpec) -> Optional[np.ndarray]:
    """Contrast-normalized grid patches of ``window`` clipped to the frame, or None."""
    win = window.clip(frame.width, frame.height)
    if win is None or win.w < grid.patch_size or win.h < grid.patch_size:
        return None
    off = grid_offsets(win.w, win.h, grid)
    raw = patches_at(frame.pixels, off[:, 0] + win.y, off[:, 1] + win.x, grid.patch_size)
    return normalize_columns(raw)


class FrameContext:
    """Encodes grid patches of one frame against a fixed dictionary.

    Patch codes are cached by absolute position, so overlapping candidate
    boxes share work. The ST threshold is fixed once from the grid patches of
    ``window`` and reused for every box of this frame.
    """

    def __init__(self, frame: GrayFrame, dictionary: Dictionary, grid: PatchGridSpec, encoder: EncoderSpec, pyramid: PyramidSpec, window: BoundingBox):
        self.frame = frame
        self.D = dictionary.basis
        self.grid = grid
        self.encoder = encoder
        self.pyramid = pyramid
        self.threshold = None
        if encoder.method == "st":
            X = window_patches(frame, window, grid)
            if X is not None:
                self.threshold = st_threshold(self.D, X, encoder.st_fraction)
        self._cache: dict[int, np.ndarray] = {}

    def _codes_at(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Codes (len x n) for patches at absolute (row, col) positions."""
        keys = rows.astype(np.int64) * self.frame.width + cols
        uniq, inverse = np.unique(keys, return_inverse=True)
        missing = [k for k in uniq.tolist() if k not in self._cache]
        if missing:
            mk = np.array(missing, dtype=np.int64)
            X = normalize_columns(patches_at(self.frame.pixels, mk // self.frame.width, mk % self.frame.width, self.grid.patch_size))
            C = encode_matrix(self.D, X, self.encoder, self.threshold).T
            for k, c in zip(missing, C):
                self._cache[k] = c
        table = np.stack([self._cache[k] for k in uniq.tolist()])
        return table[inverse.reshape(-1)]

    def usable(self, box: BoundingBox) -> Optional[BoundingBox]:
        c = box.clip(self.frame.width, self.frame.height)
        if c is None or c.w < self.grid.patch_size or c.h < self.grid.patch_size:
            return None
        return c

    def region_codes(self, box: BoundingBox) -> np.ndarray:
        """n x N code matrix of the grid patches of one box."""
        c = self.usable(box)
        if c is None:
            raise TrackingError(f"box {box.as_tuple()} admits no patch grid")
        off = grid_offsets(c.w, c.h, self.grid)
        return self._codes_at(off[:, 0] + c.y, off[:, 1] + c.x).T

    def features(self, boxes: list[BoundingBox]) -> tuple[np.ndarray, np.ndarray]:
        """Pooled features (len(boxes) x dim) and a validity mask; invalid rows are 0."""
        n = self.D.shape[1]
        dim = self.pyramid.feature_dim(n)
        out = np.zeros((len(boxes), dim))
        valid = np.zeros(len(boxes), dtype=bool)
        groups: dict[tuple[int, int], list[tuple[int, BoundingBox]]] = {}
        for i, box in enumerate(boxes):
            c = self.usable(box)
            if c is not None:
                valid[i] = True
                groups.setdefault((c.w, c.h), []).append((i, c))
        p = self.grid.patch_size
        for (w, h), members in groups.items():
            off = grid_offsets(w, h, self.grid)
            nx, ny = grid_counts(w, h, self.grid)
            ys = np.array([c.y for _, c in members])
            xs = np.array([c.x for _, c in members])
            rows = (ys[:, None] + off[None, :, 0]).ravel()
            cols = (xs[:, None] + off[None, :, 1]).ravel()
            codes = self._codes_at(rows, cols).reshape(len(members), ny, nx, n)
            grid_rows = off[::nx, 0]
            grid_cols = off[:nx, 1]
            pooled = pool_grid(codes, grid_rows, grid_cols, w, h, p, self.pyramid).reshape(len(members), dim)
            out[[i for i, _ in members]] = pooled
        return out, valid


def _jitter_offsets(count: int) -> list[tuple[int, int]]:
    """The ``count`` nearest non-zero integer offsets, 4-neighbours first."""
    ring = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, 1), (1, -1), (-1, -1)]
    out = []
    r = 1
    while len(out) < count:
        for off in ring:
            if len(out) < count:
                out.append((off[0] * r, off[1] * r))
        r += 1
    return out


def training_boxes(ctx: FrameContext, est_box: BoundingBox, cfg: TrackerConfig, rng: np.random.Generator):
    """Positive boxes (estimate plus 1-px jitters) and sampled negative boxes."""
    if ctx.usable(est_box) is None:
        raise TrackingError(f"estimate {est_box.as_tuple()} admits no patch grid")
    positives = [est_box] + [est_box.shifted(dx, dy) for dx, dy in _jitter_offsets(cfg.jitter_positives)]
    positives = [b for b in positives if ctx.usable(b) is not None]
    off = disc_offsets(cfg.search_radius_train, cfg.candidate_stride)
    w, h, p = est_box.w, est_box.h, ctx.grid.patch_size
    # overlap of a same-size box shifted by (dx, dy)
    iw = np.clip(w - np.abs(off[:, 0]), 0, None)
    ih = np.clip(h - np.abs(off[:, 1]), 0, None)
    inter = (iw * ih).astype(np.float64)
    overlap = inter / (2.0 * w * h - inter)
    x0, y0 = est_box.x + off[:, 0], est_box.y + off[:, 1]
    cw = np.minimum(x0 + w, ctx.frame.width) - np.maximum(x0, 0)
    ch = np.minimum(y0 + h, ctx.frame.height) - np.maximum(y0, 0)
    pool = np.flatnonzero((overlap < cfg.neg_vor_max) & (cw >= p) & (ch >= p))
    if not len(pool):
        raise TrackingError("no valid negative sample inside the training radius")
    k = min(cfg.negatives_per_frame, len(pool))
    chosen = np.sort(rng.choice(pool, size=k, replace=False))
    negatives = [est_box.shifted(int(off[i, 0]), int(off[i, 1])) for i in chosen]
    return positives, negatives


def gather_training_samples(ctx: FrameContext, est_box: BoundingBox, cfg: TrackerConfig, rng: np.random.Generator):
    """Labelled pooled features: list of (feature, +1/-1)."""
    positives, negatives = training_boxes(ctx, est_box, cfg, rng)
    boxes = positives + negatives
    labels = [1] * len(positives) + [-1] * len(negatives)
    feats, _ = ctx.features(boxes)
    return list(zip(feats, labels))


def detect(ctx: FrameContext, prev_box: BoundingBox, model: LinearModel, cfg: TrackerConfig) -> tuple[BoundingBox, float]:
    """Best-scoring candidate; ties go to the smallest displacement, then sampling order."""
    cands = sample_candidates(prev_box, cfg.search_radius_track, cfg.candidate_stride)
    feats, valid = ctx.features(cands)
    if not valid.any():
        raise TrackingError(f"no candidate around {prev_box.as_tuple()} admits a patch grid")
    scores = np.where(valid, predict(model, feats), -np.inf)
    best = scores.max()
    tied = np.flatnonzero(scores == best)
    disp = [(cands[i].x - prev_box.x) ** 2 + (cands[i].y - prev_box.y) ** 2 for i in tied]
    pick = int(tied[int(np.argmin(disp))])
    return cands[pick], float(scores[pick])


class Tracker:
    """Stateful tracker; ``init`` on the first frame, then ``step`` per frame."""

    def __init__(self, cfg: TrackerConfig = TrackerConfig(), dictionary: Optional[Dictionary] = None):
        self.cfg = cfg
        self._given_dictionary = dictionary
        self.rng = np.random.default_rng(cfg.seed)
        self.state: Optional[TrackState] = None
        # frame index -> (frame, window, boxes, labels) for re-encoding after dictionary updates
        self._kept: dict[int, tuple] = {}

    # -- helpers ---------------------------------------------------------
    def context(self, frame: GrayFrame, around: BoundingBox) -> FrameContext:
        s = self.state
        return FrameContext(frame, s.dictionary, s.grid, self.cfg.encoder, self.cfg.pyramid, dilate(around, self.cfg.search_radius_train))

    def _lambda(self) -> float:
        return self.cfg.odl_lambda if self.cfg.odl_lambda is not None else default_lambda(self.state.grid.dim)

    def _store(self, t: int, frame: GrayFrame, ctx: FrameContext, est_box: BoundingBox):
        positives, negatives = training_boxes(ctx, est_box, self.cfg, self.rng)
        boxes = positives + negatives
        labels = [1] * len(positives) + [-1] * len(negatives)
        feats, _ = ctx.features(boxes)
        self.state.reservoir.push(t, list(zip(feats, labels)))
        self._kept[t] = (frame, est_box, boxes, labels)
        self._kept = {k: v for k, v in self._kept.items() if k in self.state.reservoir.entries}

    def _retrain(self):
        feats, labels = self.state.reservoir.training_set()
        self.state.model = train(np.asarray(feats), labels, self.cfg.gamma, self.cfg.bias)

    def _reencode_reservoir(self):
        for t, (frame, est_box, boxes, labels) in self._kept.items():
            ctx = self.context(frame, est_box)
            feats, _ = ctx.features(boxes)
            self.state.reservoir.replace(t, list(zip(feats, labels)))

    def _update_dictionary(self, frame: GrayFrame, est_box: BoundingBox):
        s = self.state
        X = window_patches(frame, dilate(est_box, self.cfg.search_radius_train), s.grid)
        if X is None:
            return
        s.dictionary, s.odl = odl_epoch(s.dictionary, s.odl, X, self._lambda(), self.rng, self.cfg.odl_batch)
        s.n_updates += 1
        self._reencode_reservoir()
        self._retrain()

    # -- protocol --------------------------------------------------------
    def init(self, frame: GrayFrame, box: BoundingBox) -> FrameResult:
        cfg = self.cfg
        grid = cfg.grid or PatchGridSpec.for_target(box)
        X = window_patches(frame, dilate(box, cfg.search_radius_train), grid)
        if X is None:
            raise TrackingError(f"initial box {box.as_tuple()} admits no patch grid")
        if self._given_dictionary is not None:
            D = self._given_dictionary
            if D.m != grid.dim:
                raise TrackingError(f"dictionary has {D.m} rows but {grid.patch_size}px patches need {grid.dim}")
            odl = OdlState.zeros(D.m, D.n, cfg.odl_batch)
        else:
            lam = cfg.odl_lambda if cfg.odl_lambda is not None else default_lambda(grid.dim)
            D, odl = init_dictionary(cfg.dict_method, X, cfg.dict_size, cfg.init_epochs, lam, cfg.seed, cfg.odl_batch)
        self.state = TrackState(
            box, D, odl, UpdatePolicy(cfg.overlap_threshold), None, Reservoir(), 1, grid
        )
        ctx = self.context(frame, box)
        self._store(1, frame, ctx, box)
        self._retrain()
        feats, _ = ctx.features([box])
        return FrameResult(box, float(predict(self.state.model, feats[0])))

    def step(self, frame: GrayFrame, truth_box: Optional[BoundingBox] = None) -> FrameResult:
        s = self.state
        cfg = self.cfg
        t = s.frame_index + 1
        ctx = self.context(frame, s.current_box)
        box, score = detect(ctx, s.current_box, s.model, cfg)
        if truth_box is not None:
            box = truth_box
            feats, _ = ctx.features([box])
            score = float(predict(s.model, feats[0]))
        s.current_box = box
        s.frame_index = t
        self._store(t, frame, ctx, box)
        if t == 2 or (t - 2) % cfg.retrain_every == 0:
            self._retrain()

        updated = False
        if cfg.dict_update_mode == "triggered":
            fire, s.policy = should_update(s.policy, basis_weights(ctx.region_codes(box)))
            updated = fire and t > 2
        elif cfg.dict_update_mode == "always":
            updated = True
        if updated:
            log.debug("frame %d: dictionary update", t)
            self._update_dictionary(frame, box)
        return FrameResult(box, score, updated)


def track_sequence(seq: Sequence, init_box: BoundingBox, cfg: TrackerConfig = TrackerConfig(), dictionary: Optional[Dictionary] = None, return_tracker: bool = False):
    """Run the tracker over a sequence; returns a list of (box, score) per frame."""
    if len(seq) == 0:
        raise ValueError("empty sequence")
    tracker = Tracker(cfg, dictionary)
    out = []
    for t, frame in enumerate(seq.frames, 1):
        try:
            if t == 1:
                res = tracker.init(frame, init_box)
            else:
                gt = seq.truth[1] if (t == 2 and cfg.gt_frame2 and seq.truth is not None) else None
                res = tracker.step(frame, gt)
        except (TrackingError, ValueError, np.linalg.LinAlgError) as exc:
            raise TrackingError(f"frame {t}: {exc}") from exc
        out.append((res.box, res.score))
    return (out, tracker) if return_tracker else out
