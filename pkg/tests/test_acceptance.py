"""Acceptance criteria, one function each.

Every ``criterion_*`` returns ``(ok, detail)``. The pytest wrappers time it,
print a single PASS/FAIL line and assert both the outcome and the runtime
bound. ``python3 tests/test_acceptance.py`` runs the same checks without
pytest.
"""

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import (  # noqa: E402
    kkt_ok,
    lasso_by_bounded_qp,
    lasso_by_support_enumeration,
    lssvm_normal_equations,
    pool_brute,
    raster_iou,
)

from fltrack.dictlearn import (  # noqa: E402
    Dictionary,
    OdlState,
    UpdatePolicy,
    init_dictionary,
    odl_step,
    should_update,
    surrogate,
    update_columns,
)
from fltrack.encode import CodeMatrix, EncoderSpec, encode, encode_matrix  # noqa: E402
from fltrack.lasso import LassoProblem, lasso_solve, lasso_solve_batch, objective  # noqa: E402
from fltrack.lssvm import train  # noqa: E402
from fltrack.metrics import cle, evaluate, vor  # noqa: E402
from fltrack.patchgrid import PatchGridSpec, contrast_normalize, extract_patches  # noqa: E402
from fltrack.pyrpool import PyramidSpec, pyramid_max_pool  # noqa: E402
from fltrack.seqio import BoundingBox, synth_sequence  # noqa: E402
from fltrack.tracker import TrackerConfig, track_sequence  # noqa: E402


def _unit(rng, m, n):
    D = rng.normal(size=(m, n))
    return D / np.linalg.norm(D, axis=0)


def criterion_1():
    seq = synth_sequence(96, 96, 1, 40, seed=0)
    box = seq.truth[0]
    grid = PatchGridSpec(8, 4)
    whole = contrast_normalize(extract_patches(seq.frames[0], BoundingBox(0, 0, 96, 96), grid))
    D, _ = init_dictionary("random_sample", whole.data, 100, seed=0)
    pm = contrast_normalize(extract_patches(seq.frames[0], box, grid))
    feat = pyramid_max_pool(encode(D, pm, EncoderSpec("st")), box.w, box.h, 8, PyramidSpec((1, 2, 3)))
    return len(feat) == 1400, f"n=100, levels 1,2,3 -> length {len(feat)}"


def criterion_2():
    rng = np.random.default_rng(2024)
    worst_enum = worst_qp = 0.0
    small = kkt_fail = 0
    for i in range(200):
        lam = (0.1, 0.3, 1.0)[i % 3]
        D = _unit(rng, 8, 12)
        x = rng.normal(size=8)
        a = lasso_solve(LassoProblem(D, x, lam))
        val = objective(D, x, a, lam)
        enum_val, _ = lasso_by_support_enumeration(D, x, lam, max_support=3)
        qp_val, _ = lasso_by_bounded_qp(D, x, lam)
        if np.count_nonzero(a) <= 3:
            # the enumeration covers the optimum: two-sided comparison
            small += 1
            worst_enum = max(worst_enum, abs(val - enum_val))
        else:
            # the enumeration is only an upper bound here
            worst_enum = max(worst_enum, val - enum_val)
        worst_qp = max(worst_qp, val - qp_val)
        kkt_fail += not kkt_ok(D, x, a, lam, 1e-6)
    ok = worst_enum <= 1e-6 and worst_qp <= 1e-6 and kkt_fail == 0
    return ok, (
        f"200 problems ({small} with support <= 3): max gap vs enumeration {worst_enum:.1e}, "
        f"vs bounded QP {worst_qp:.1e}, KKT failures {kkt_fail}"
    )


def criterion_3():
    rng = np.random.default_rng(3)
    worst_w = worst_b = 0.0
    verbatim_exact = True
    for i in range(100):
        gamma = (1e-3, 1e-1, 1.0)[i % 3]
        y = np.where(rng.random(30) < 0.5, -1, 1)
        y[:2] = (1, -1)
        X = rng.normal(size=(30, 14)) + rng.normal(size=14) * y[:, None]
        model = train(X, y, gamma)
        w, b = lssvm_normal_equations(X, y, gamma)
        worst_w = max(worst_w, np.linalg.norm(model.w - w) / np.linalg.norm(w))
        worst_b = max(worst_b, abs(model.b - b))
        vm = train(X, y, gamma, bias="verbatim")
        n_pos, n_neg = int((y > 0).sum()), int((y < 0).sum())
        verbatim_exact &= vm.b == n_pos * n_neg / 30 - X.mean(axis=0) @ vm.w
    ok = worst_w <= 1e-8 and worst_b <= 1e-8 and verbatim_exact
    return ok, f"max rel err w {worst_w:.1e}, max abs err b {worst_b:.1e}, verbatim bias exact {verbatim_exact}"


def criterion_4():
    rng = np.random.default_rng(4)
    worst_rise = -np.inf
    worst_norm = 0.0
    for _ in range(500):
        m, n = int(rng.integers(2, 17)), int(rng.integers(2, 25))
        D = _unit(rng, m, n) * rng.uniform(0.1, 1.0, size=n)
        codes = rng.normal(size=(n, 30)) * (rng.random((n, 30)) < 0.3)
        X = rng.normal(size=(m, 30))
        A, B = codes @ codes.T / 30, X @ codes.T / 30
        new = update_columns(D, A, B)
        worst_rise = max(worst_rise, surrogate(new, A, B) - surrogate(D, A, B))
        worst_norm = max(worst_norm, np.linalg.norm(new, axis=0).max())
    # the same bound through full online steps
    d, s = Dictionary(_unit(rng, 16, 24)), OdlState.zeros(16, 24)
    for _ in range(20):
        d, s = odl_step(d, s, rng.normal(size=(16, int(rng.integers(1, 40)))), 0.15)
        worst_norm = max(worst_norm, np.linalg.norm(d.basis, axis=0).max())
    ok = worst_rise <= 1e-9 and worst_norm <= 1 + 1e-9
    return ok, f"500 passes: max surrogate change {worst_rise:+.1e}, max column norm {worst_norm:.12f}"


def criterion_5():
    rng = np.random.default_rng(5)
    fails = []
    for trial in range(100):
        n = int(rng.integers(5, 40))
        D = _unit(rng, 16, n)
        X = rng.normal(size=(16, 8))
        beta = float(rng.choice([0.1, 1.0, 10.0]))
        k = int(rng.integers(1, n + 1))
        sa = encode_matrix(D, X, EncoderSpec("sa", beta=beta))
        lsa = encode_matrix(D, X, EncoderSpec("lsa", beta=beta, k=k))
        lsa_full = encode_matrix(D, X, EncoderSpec("lsa", beta=beta, k=n))
        sc = encode_matrix(D, X, EncoderSpec("sc"))
        if np.max(np.abs(sa.sum(axis=0) - 1)) > 1e-9:
            fails.append(f"{trial}: SA sum")
        if np.any((lsa != 0).sum(axis=0) > k):
            fails.append(f"{trial}: LSA support")
        if np.max(np.abs(lsa_full - sa)) > 1e-12:
            fails.append(f"{trial}: LSA(k=n) != SA")
        for name in ("st", "tk"):
            if np.any(encode_matrix(D, X, EncoderSpec(name)) < 0):
                fails.append(f"{trial}: {name} negative")
        if np.any(sc < 0) or not np.array_equal(sc, np.maximum(lasso_solve_batch(D, X, 0.25), 0)):
            fails.append(f"{trial}: SC")
    return not fails, "100 pairs, all invariants hold" if not fails else "; ".join(fails[:5])


def criterion_6():
    rng = np.random.default_rng(6)
    fails = []
    for trial in range(200):
        W, H = int(rng.integers(8, 48)), int(rng.integers(8, 48))
        p, q = [(4, 2), (6, 2), (8, 4)][trial % 3]
        if p > min(W, H):
            continue
        levels = tuple(int(v) for v in rng.integers(1, 5, size=int(rng.integers(1, 4))))
        spec = PyramidSpec(levels)
        pos = np.array([(r, c) for r in range(0, H - p + 1, q) for c in range(0, W - p + 1, q)])
        n = int(rng.integers(1, 8))
        codes = rng.random((n, len(pos)))
        out = pyramid_max_pool(CodeMatrix(codes, pos), W, H, p, spec)
        if len(out) != n * sum(s * s for s in levels):
            fails.append(f"{trial}: length")
        if not np.array_equal(out, pool_brute(codes, pos, W, H, p, levels)):
            fails.append(f"{trial}: brute force")
        perm = rng.permutation(len(pos))
        if not np.array_equal(out, pyramid_max_pool(CodeMatrix(codes[:, perm], pos[perm]), W, H, p, spec)):
            fails.append(f"{trial}: permutation")
        raised = codes.copy()
        raised[rng.integers(n), rng.integers(len(pos))] += rng.random()
        if np.any(pyramid_max_pool(CodeMatrix(raised, pos), W, H, p, spec) < out):
            fails.append(f"{trial}: monotone")
        one = int(rng.integers(len(pos)))
        single = pyramid_max_pool(CodeMatrix(codes[:, [one]], pos[[one]]), W, H, p, PyramidSpec()).reshape(14, n)
        hit = [c for c in range(14) if single[c].any()]
        if len(hit) != 3 or not all(np.array_equal(single[c], codes[:, one]) for c in hit):
            fails.append(f"{trial}: single patch")
    return not fails, "randomized permutation/monotone/single-patch/length checks exact" if not fails else "; ".join(fails[:5])


def criterion_7():
    a = BoundingBox(0, 0, 10, 10)
    examples = [
        vor(a, a) == 1.0,
        vor(a, BoundingBox(30, 30, 10, 10)) == 0.0,
        abs(vor(a, BoundingBox(5, 0, 10, 10)) - 1 / 3) < 1e-15,
        cle(a, a) == 0.0,
        cle(a, BoundingBox(3, 4, 10, 10)) == 5.0,
        cle(a, BoundingBox(3, 4, 6, 2)) == cle(BoundingBox(3, 4, 6, 2), a),
    ]
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        b1 = BoundingBox(*map(int, rng.integers(-20, 20, 2)), *map(int, rng.integers(1, 30, 2)))
        b2 = BoundingBox(*map(int, rng.integers(-20, 20, 2)), *map(int, rng.integers(1, 30, 2)))
        worst = max(worst, abs(vor(b1, b2) - raster_iou(b1.as_tuple(), b2.as_tuple())))
    ok = all(examples) and worst <= 1e-9
    return ok, f"{sum(examples)}/{len(examples)} examples, max |vor - raster| over 1000 pairs {worst:.1e}"


def criterion_8():
    def weights(top):
        w = np.ones(100)
        w[list(top)] = 2.0
        return w / w.sum()

    prev = range(50)
    results = {}
    for shared in (46, 44):
        _, policy = should_update(UpdatePolicy(0.9), weights(prev))
        fire, _ = should_update(policy, weights(list(range(shared)) + list(range(50, 100 - shared))))
        results[shared] = fire
    ok = results[46] is False and results[44] is True
    return ok, f"46/50 -> update={results[46]}, 44/50 -> update={results[44]}"


def _gate_sequence():
    return synth_sequence(320, 240, 50, 40, (2, 1), 0.5, 8.0, seed=7)


def criterion_9():
    seq = _gate_sequence()
    cfg = TrackerConfig(encoder=EncoderSpec("st"), dict_size=100)
    start = time.perf_counter()
    out = track_sequence(seq, seq.truth[0], cfg)
    fps = len(seq) / (time.perf_counter() - start)
    again = track_sequence(seq, seq.truth[0], cfg)
    rep = evaluate([b for b, _ in out], seq.truth)
    ok = rep.mean_vor >= 0.6 and rep.mean_cle <= 8 and fps >= 2 and out == again
    return ok, f"mean VOR {rep.mean_vor:.4f}, mean CLE {rep.mean_cle:.3f} px, {fps:.2f} fps, repeat identical {out == again}"


def criterion_10():
    seq = synth_sequence(320, 240, 12, 40, (0, 0), 0.0, 1.0, seed=10)
    off = track_sequence(seq, seq.truth[0], TrackerConfig(dict_update_mode="off"))
    trig, tracker = track_sequence(seq, seq.truth[0], TrackerConfig(dict_update_mode="triggered"), return_tracker=True)
    ok = tracker.state.n_updates == 0 and off == trig
    return ok, f"triggered updates {tracker.state.n_updates}, trajectories identical {off == trig}"


CRITERIA = [
    (1, "feature dimension", criterion_1, 1.0),
    (2, "lasso optimality", criterion_2, 30.0),
    (3, "LS-SVM oracle", criterion_3, 10.0),
    (4, "ODL surrogate monotonicity", criterion_4, 30.0),
    (5, "encoder invariants", criterion_5, 30.0),
    (6, "pooling properties", criterion_6, 10.0),
    (7, "metric oracles", criterion_7, 10.0),
    (8, "update-trigger arithmetic", criterion_8, 1.0),
    (9, "end-to-end synthetic gate", criterion_9, 60.0),
    (10, "update-mode equivalence", criterion_10, 60.0),
]


def run_criterion(number, name, fn, bound):
    start = time.perf_counter()
    ok, detail = fn()
    elapsed = time.perf_counter() - start
    ok_time = elapsed < bound
    tag = "PASS" if ok and ok_time else "FAIL"
    line = f"[{tag}] AC{number} {name}: {detail} ({elapsed:.2f}s, bound {bound:g}s)"
    return ok, ok_time, line


@pytest.mark.parametrize("number,name,fn,bound", CRITERIA, ids=[f"AC{c[0]}" for c in CRITERIA])
def test_acceptance(number, name, fn, bound, capsys):
    ok, ok_time, line = run_criterion(number, name, fn, bound)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line
    assert ok_time, line


if __name__ == "__main__":
    results = [run_criterion(*c) for c in CRITERIA]
    for _, _, line in results:
        print(line)
    sys.exit(0 if all(a and b for a, b, _ in results) else 1)
