"""How often the top-half basis overlap trigger fires, static vs moving targets.

For each sequence, runs the tracker in ``off`` mode and records the overlap
that the trigger would have seen on every frame, plus the firing count.

    python3 scripts/trigger_rate.py
"""

import numpy as np

from fltrack import TrackerConfig, synth_sequence
from fltrack.dictlearn import basis_weights, top_overlap, top_set
from fltrack.tracker import Tracker

CASES = {
    "static, noise 1": dict(velocity=(0, 0), noise_sigma=1.0),
    "static, noise 8": dict(velocity=(0, 0), noise_sigma=8.0),
    "moving (2,1), noise 1": dict(velocity=(2, 1), noise_sigma=1.0),
    "moving (2,1), noise 8": dict(velocity=(2, 1), noise_sigma=8.0),
}


def overlaps(seq, cfg):
    tracker = Tracker(cfg)
    tracker.init(seq.frames[0], seq.truth[0])
    prev, out = None, []
    for frame in seq.frames[1:]:
        res = tracker.step(frame)
        codes = tracker.context(frame, res.box).region_codes(res.box)
        curr = top_set(basis_weights(codes))
        if prev is not None:
            out.append(top_overlap(prev, curr))
        prev = curr
    return np.array(out)


def main():
    cfg = TrackerConfig()
    for name, kw in CASES.items():
        seq = synth_sequence(320, 240, 20, 40, seed=5, **kw)
        ov = overlaps(seq, cfg)
        fires = int((ov < cfg.overlap_threshold).sum())
        print(f"{name:24s} overlap mean {ov.mean():.3f} min {ov.min():.3f}  would fire {fires}/{len(ov)} frames")


if __name__ == "__main__":
    main()
