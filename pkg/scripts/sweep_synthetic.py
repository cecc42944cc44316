"""Parameter sweep over a small family of synthetic sequences.

Mirrors ``fltrack sweep`` but generates its own sequences, so it runs without
any data on disk. Writes one CSV row per (sequence, value).

    python3 scripts/sweep_synthetic.py --param encoder --out sweep.csv
"""

import argparse
import csv
import dataclasses
import time

from fltrack import EncoderSpec, PyramidSpec, TrackerConfig, evaluate, synth_sequence, track_sequence

SEQUENCES = {
    "slow": dict(velocity=(1, 0), jitter_sigma=0.3, noise_sigma=6.0, seed=1),
    "diagonal": dict(velocity=(2, 1), jitter_sigma=0.5, noise_sigma=8.0, seed=7),
    "noisy": dict(velocity=(1, 1), jitter_sigma=0.5, noise_sigma=16.0, seed=3),
}

VALUES = {
    "dict-size": [25, 50, 100, 200],
    "levels": [(1,), (1, 2), (1, 2, 3), (1, 2, 3, 4)],
    "encoder": ["st", "tk", "sa", "lsa", "sc"],
    "dict-method": ["odl", "kmeans", "random_sample"],
}


def configure(param, value):
    cfg = TrackerConfig()
    if param == "dict-size":
        return dataclasses.replace(cfg, dict_size=value)
    if param == "levels":
        return dataclasses.replace(cfg, pyramid=PyramidSpec(value))
    if param == "encoder":
        return dataclasses.replace(cfg, encoder=EncoderSpec(value))
    return dataclasses.replace(cfg, dict_method=value)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--param", choices=sorted(VALUES), required=True)
    ap.add_argument("--frames", type=int, default=40)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    rows = []
    for name, kw in SEQUENCES.items():
        seq = synth_sequence(320, 240, args.frames, 40, **kw)
        for value in VALUES[args.param]:
            start = time.perf_counter()
            out = track_sequence(seq, seq.truth[0], configure(args.param, value))
            fps = len(seq) / (time.perf_counter() - start)
            rep = evaluate([b for b, _ in out], seq.truth)
            label = ",".join(map(str, value)) if isinstance(value, tuple) else str(value)
            rows.append([name, args.param, label, f"{rep.mean_vor:.6f}", f"{rep.mean_cle:.6f}", f"{fps:.6f}"])
            print(f"{name:9s} {args.param}={label:10s} VOR {rep.mean_vor:.4f} CLE {rep.mean_cle:7.3f} {fps:5.2f} fps")
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sequence", "param", "value", "mean_vor", "mean_cle", "fps"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
