import csv
import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from modelock import (
    EvalReport,
    InvalidArgumentError,
    MissingPredictionError,
    ShapeMismatchError,
    batch_eval,
    default_tolerance,
    f_measure,
    gen_dataset,
    load_manifest,
    miou,
)
from modelock.formats import write_binary_pgm
from modelock.skeleton_metrics import aggregate, match_pixels

masks = st.integers(1, 10).flatmap(
    lambda h: st.integers(1, 10).flatmap(
        lambda w: st.tuples(arrays(bool, (h, w)), arrays(bool, (h, w)))))


def optimal_matches(pred, gt, tol):
    p = np.argwhere(pred)
    g = np.argwhere(gt)
    if len(p) == 0 or len(g) == 0:
        return 0
    d = np.sqrt(((p[:, None, :] - g[None, :, :]) ** 2).sum(-1))
    adj = csr_matrix((d <= tol).astype(np.int8))
    return int((maximum_bipartite_matching(adj, perm_type="column") >= 0).sum())


def test_identity():
    m = np.eye(5, dtype=bool)
    r = f_measure(m, m)
    assert (r.precision, r.recall, r.f_measure) == (1.0, 1.0, 1.0)


def test_p075_r05():
    gt = np.zeros((4, 8), bool)
    gt[0, :6] = True
    pred = np.zeros_like(gt)
    pred[0, :3] = True
    pred[3, 7] = True
    r = f_measure(pred, gt)
    assert (r.precision, r.recall) == (0.75, 0.5)
    assert r.f_measure == pytest.approx(0.6)
    assert r.counts == (3, 1, 3)


def test_empty_conventions():
    z = np.zeros((3, 3), bool)
    one = z.copy()
    one[1, 1] = True
    assert f_measure(z, z).f_measure == 1.0
    r = f_measure(z, one)
    assert (r.precision, r.recall, r.f_measure) == (0.0, 0.0, 0.0)
    far = z.copy()
    far[0, 0] = True
    assert f_measure(far, one, 0).f_measure == 0.0


def test_errors():
    with pytest.raises(ShapeMismatchError):
        f_measure(np.zeros((2, 2)), np.zeros((2, 3)))
    with pytest.raises(ShapeMismatchError):
        miou(np.zeros((2, 2)), np.zeros((3, 2)))
    with pytest.raises(InvalidArgumentError):
        f_measure(np.zeros((2, 2)), np.zeros((2, 2)), -1)


def test_tolerance_matching():
    gt = np.zeros((10, 10), bool)
    gt[:, 5] = True
    pred = np.zeros_like(gt)
    pred[:, 7] = True
    assert f_measure(pred, gt, 1.5).f_measure == 0.0
    assert f_measure(pred, gt, 2).f_measure == 1.0


def test_greedy_is_nearest_first():
    # p0 could take g0 or g1; nearest-first gives p1 its only partner
    pred = np.zeros((1, 8), bool)
    gt = np.zeros((1, 8), bool)
    pred[0, [2, 4]] = True
    gt[0, [3, 5]] = True
    assert match_pixels(pred, gt, 1) == 2


def test_exhaustive_3x3_sample():
    # full 512 x 512 sweep runs in the acceptance suite
    codes = range(0, 512, 7)
    for a, b in itertools.product(codes, codes):
        p = np.array([(a >> k) & 1 for k in range(9)], bool).reshape(3, 3)
        g = np.array([(b >> k) & 1 for k in range(9)], bool).reshape(3, 3)
        assert match_pixels(p, g, 0) == optimal_matches(p, g, 0)


@settings(max_examples=150, deadline=None)
@given(pair=masks, tol=st.sampled_from([0, 1, 1.5, 2, 3]))
def test_greedy_vs_optimal(pair, tol):
    pred, gt = pair
    greedy = match_pixels(pred, gt, tol)
    best = optimal_matches(pred, gt, tol)
    assert greedy <= best
    assert 2 * greedy >= best  # maximal matching bound


@settings(max_examples=150, deadline=None)
@given(pair=masks, tol=st.sampled_from([0, 1, 1.5, 2, 3]))
def test_swap_symmetry_and_range(pair, tol):
    pred, gt = pair
    a, b = f_measure(pred, gt, tol), f_measure(gt, pred, tol)
    assert (a.precision, a.recall, a.tp) == (b.recall, b.precision, b.tp)
    assert a.f_measure == b.f_measure
    for v in (a.precision, a.recall, a.f_measure):
        assert 0 <= v <= 1
    if a.precision + a.recall > 0:
        assert a.f_measure == pytest.approx(2 * a.precision * a.recall / (a.precision + a.recall))


@settings(max_examples=150, deadline=None)
@given(pair=masks, tol=st.sampled_from([0, 1, 2]), data=st.data())
def test_adding_true_positive_never_lowers_f(pair, tol, data):
    pred, gt = pair
    free = np.argwhere(~pred & ~gt)
    if len(free) == 0:
        return
    r, c = free[data.draw(st.integers(0, len(free) - 1))]
    p2, g2 = pred.copy(), gt.copy()
    p2[r, c] = g2[r, c] = True
    assert f_measure(p2, g2, tol).f_measure >= f_measure(pred, gt, tol).f_measure - 1e-12


def brute_miou(p, g):
    ious = []
    for cls in (True, False):
        inter = union = 0
        for a, b in zip(p.ravel(), g.ravel()):
            inter += (a == cls) and (b == cls)
            union += (a == cls) or (b == cls)
        ious.append(1.0 if union == 0 else inter / union)
    return sum(ious) / 2


def test_miou_examples():
    m = np.zeros((4, 4), bool)
    m[:, :2] = True
    assert miou(m, m) == 1.0
    assert miou(m, ~m) == 0.0
    g = np.zeros((4, 4), bool)
    g[:, :3] = True
    # fg 8/12, bg 4/8
    assert miou(m, g) == pytest.approx((8 / 12 + 4 / 8) / 2)
    assert miou(np.zeros((2, 2)), np.zeros((2, 2))) == 1.0


def test_miou_brute_force_seeded():
    rng = np.random.default_rng(0)
    for _ in range(200):
        p, g = rng.random((8, 8)) < 0.4, rng.random((8, 8)) < 0.4
        assert miou(p, g) == brute_miou(p, g)


def test_default_tolerance():
    assert default_tolerance((256, 256)) == pytest.approx(0.0075 * math.hypot(256, 256))
    assert default_tolerance((32, 32)) == 2.0


def test_aggregate_hand_counts():
    res = aggregate({0: EvalReport.from_counts(3, 1, 2), 1: EvalReport.from_counts(5, 0, 5)}, 2.0)
    assert res.micro.counts == (8, 1, 7)
    assert res.micro.precision == pytest.approx(8 / 9)
    assert res.micro.recall == pytest.approx(8 / 15)
    assert res.macro["f"] == pytest.approx((EvalReport.from_counts(3, 1, 2).f_measure + 2 * 0.5 * 1 / 1.5) / 2)


@pytest.fixture(scope="module")
def small_ds(tmp_path_factory):
    root = tmp_path_factory.mktemp("ds")
    gen_dataset(seed=4, count=12, train_count=8, canvas=(48, 48), out_dir=root, workers=1)
    return load_manifest(root)


def test_batch_perfect_predictions(small_ds, tmp_path):
    for i in small_ds.ids("test"):
        write_binary_pgm(tmp_path / f"{i:05d}.pgm", small_ds.load_label(i))
    res = batch_eval(small_ds, tmp_path, with_miou=True)
    assert res.micro.f_measure == res.macro["f"] == 1.0
    assert res.macro["miou"] == 1.0
    res.write(tmp_path / "r.json")
    rows = list(csv.reader(open(tmp_path / "r.csv")))
    assert rows[0] == ["id", "precision", "recall", "f", "tp", "fp", "fn"]
    assert [int(r[0]) for r in rows[1:]] == sorted(small_ds.ids("test"))
    summary = json.loads((tmp_path / "r.json").read_text())
    assert summary["micro"]["f_measure"] == 1.0 and summary["macro"]["f"] == 1.0


def test_batch_missing(small_ds, tmp_path):
    ids = small_ds.ids("test")
    for i in ids[1:]:
        write_binary_pgm(tmp_path / f"{i:05d}.pgm", small_ds.load_label(i))
    with pytest.raises(MissingPredictionError) as e:
        batch_eval(small_ds, tmp_path)
    assert e.value.ids == [ids[0]]
    assert str(ids[0]) in str(e.value)


def test_batch_pooled_counts(small_ds, tmp_path):
    ids = small_ds.ids("test")
    expected = [0, 0, 0]
    for k, i in enumerate(ids):
        gt = small_ds.load_label(i)
        pred = np.zeros_like(gt)
        if k % 2:
            pred[np.nonzero(gt)[0][:3], np.nonzero(gt)[1][:3]] = True
        pred[0, 0] = True
        r = f_measure(pred, gt, 2)
        expected = [a + b for a, b in zip(expected, r.counts)]
        write_binary_pgm(tmp_path / f"{i:05d}.pgm", pred)
    res = batch_eval(small_ds, tmp_path, tolerance=2)
    assert list(res.micro.counts) == expected
