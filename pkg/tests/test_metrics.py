import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fltrack.metrics import (
    cle,
    evaluate,
    read_report,
    read_trajectory,
    vor,
    write_report,
    write_trajectory,
)
from fltrack.seqio import BoundingBox

from oracles import raster_iou

boxes = st.builds(BoundingBox, st.integers(-20, 20), st.integers(-20, 20), st.integers(1, 25), st.integers(1, 25))


def test_vor_examples():
    a = BoundingBox(0, 0, 10, 10)
    assert vor(a, a) == 1.0
    assert vor(a, BoundingBox(20, 0, 10, 10)) == 0.0
    assert vor(a, BoundingBox(10, 0, 10, 10)) == 0.0
    assert vor(a, BoundingBox(5, 0, 10, 10)) == pytest.approx(1 / 3)


def test_cle_examples():
    a = BoundingBox(0, 0, 10, 10)
    assert cle(a, a) == 0.0
    assert cle(a, BoundingBox(3, 4, 10, 10)) == 5.0
    # centres at x + w/2, so width changes move the centre
    assert cle(BoundingBox(0, 0, 2, 2), BoundingBox(0, 0, 4, 2)) == 1.0


@settings(max_examples=300, deadline=None)
@given(boxes, boxes)
def test_vor_against_raster(a, b):
    assert abs(vor(a, b) - raster_iou(a.as_tuple(), b.as_tuple())) <= 1e-9


@settings(max_examples=200, deadline=None)
@given(boxes, boxes, st.integers(-50, 50), st.integers(-50, 50), st.integers(1, 5))
def test_vor_symmetries(a, b, dx, dy, c):
    v = vor(a, b)
    assert 0.0 <= v <= 1.0
    assert v == vor(b, a)
    assert v == vor(a.shifted(dx, dy), b.shifted(dx, dy))
    scale = lambda z: BoundingBox(c * z.x, c * z.y, c * z.w, c * z.h)
    assert vor(scale(a), scale(b)) == pytest.approx(v, abs=1e-15)
    assert cle(a, b) == cle(b, a) >= 0


def test_evaluate_perfect():
    truth = [BoundingBox(i, i, 5, 5) for i in range(4)]
    rep = evaluate(truth, truth)
    assert rep.mean_vor == 1.0 and rep.mean_cle == 0.0
    assert [r[0] for r in rep.per_frame] == [1, 2, 3, 4]


def test_evaluate_mean():
    truth = [BoundingBox(0, 0, 10, 10), BoundingBox(0, 0, 10, 10)]
    traj = [BoundingBox(0, 0, 10, 10), BoundingBox(0, 0, 10, 5)]
    assert evaluate(traj, truth).mean_vor == 0.75


def test_evaluate_length_mismatch():
    with pytest.raises(ValueError):
        evaluate([BoundingBox(0, 0, 1, 1)], [])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(boxes, boxes), min_size=1, max_size=20))
def test_means_are_arithmetic(pairs):
    rep = evaluate([p[0] for p in pairs], [p[1] for p in pairs])
    assert len(rep.per_frame) == len(pairs)
    assert abs(rep.mean_vor - sum(r[1] for r in rep.per_frame) / len(pairs)) <= 1e-12
    assert abs(rep.mean_cle - sum(r[2] for r in rep.per_frame) / len(pairs)) <= 1e-12


def test_report_round_trip(tmp_path):
    truth = [BoundingBox(i, 0, 10, 10) for i in range(6)]
    traj = [BoundingBox(2 * i, 1, 10, 10) for i in range(6)]
    rep = evaluate(traj, truth)
    write_report(tmp_path / "r.csv", rep)
    rows = read_report(tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == "frame,vor,cle"
    assert math.fsum(r[1] for r in rows) / 6 == pytest.approx(rep.mean_vor, abs=1e-6)
    assert math.fsum(r[2] for r in rows) / 6 == pytest.approx(rep.mean_cle, abs=1e-6)


def test_trajectory_round_trip(tmp_path):
    bx = [BoundingBox(1, 2, 3, 4), BoundingBox(5, 6, 3, 4)]
    write_trajectory(tmp_path / "t.csv", bx, [0.0, -1.25])
    text = (tmp_path / "t.csv").read_text().splitlines()
    assert text == ["frame,x,y,w,h,score", "1,1,2,3,4,0.000000", "2,5,6,3,4,-1.250000"]
    assert read_trajectory(tmp_path / "t.csv") == (bx, [0.0, -1.25])


def test_trajectory_bad_header(tmp_path):
    (tmp_path / "t.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_trajectory(tmp_path / "t.csv")
