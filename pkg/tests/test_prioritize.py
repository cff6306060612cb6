import json

import numpy as np
import pytest

from boxmon.bdd import BddManager
from boxmon.boxes import Box
from boxmon.encoding import encode
from boxmon.errors import ConfigError, NotACornerError, OutOfBoxError, ParseError
from boxmon.monitor import BoxMonitor
from boxmon.prioritize import (
    CornerReport,
    all_corners_set,
    cross_box_filter,
    encode_training_set,
    hamming_expand,
    prioritize_box,
    prioritize_monitor,
    read_corners_jsonl,
    write_corners_jsonl,
)

from conftest import bdd_from_strings
from oracles import (
    hamming,
    oracle_corner_strings,
    oracle_hamming_ball,
    oracle_prioritize,
)

# Reference single-box setup: phi=3, two dimensions, four feature vectors
# whose encodings are 000000, 111111, 011111 and 011000.
DEMO_BOX = Box(np.array([0.0, 2.0]), np.array([1.0, 3.0]))
DEMO_DELTA = np.array([0.15, 0.15])
DEMO_FEATURES = np.array(
    [[0.1, 2.1], [0.9, 2.95], [0.6, 2.9], [0.6, 2.1]]
)


def demo_encodings():
    return [encode(DEMO_BOX, DEMO_DELTA, 3, f) for f in DEMO_FEATURES]


def test_demo_encodings_are_the_worked_example():
    assert demo_encodings() == ["000000", "111111", "011111", "011000"]


def test_encode_training_set_members():
    mgr = BddManager(6)
    s = encode_training_set(DEMO_FEATURES, DEMO_BOX, DEMO_DELTA, 3, mgr)
    assert mgr.sat_count(s) == 4
    assert mgr.contains_string(s, "011111")
    assert mgr.contains_string(s, "011000")
    assert not mgr.contains_string(s, "000111")


def test_encode_training_set_empty_and_duplicates():
    mgr = BddManager(6)
    assert encode_training_set([], DEMO_BOX, DEMO_DELTA, 3, mgr) == mgr.mk_false()
    dup = np.array([[0.1, 2.1], [0.05, 2.05], [0.1, 2.1]])  # all encode to 000000
    s = encode_training_set(dup, DEMO_BOX, DEMO_DELTA, 3, mgr)
    assert mgr.sat_count(s) == 1


def test_encode_training_set_distinct_count_random(rng):
    for _ in range(10):
        dim = int(rng.integers(1, 4))
        phi = int(rng.integers(2, 4))
        lower = rng.uniform(-3, 3, dim)
        upper = lower + rng.uniform(0.5, 3.0, dim)
        box = Box(lower, upper)
        delta = 0.2 * box.width
        X = rng.uniform(lower, upper, size=(50, dim))
        mgr = BddManager(phi * dim)
        s = encode_training_set(X, box, delta, phi, mgr)
        distinct = {encode(box, delta, phi, f) for f in X}
        assert mgr.sat_count(s) == len(distinct)
        for e in distinct:
            assert mgr.contains_string(s, e)


def test_encode_training_set_out_of_box_names_index():
    mgr = BddManager(6)
    bad = np.array([[0.1, 2.1], [5.0, 2.1]])
    with pytest.raises(OutOfBoxError, match="feature 1"):
        encode_training_set(bad, DEMO_BOX, DEMO_DELTA, 3, mgr)


def test_all_corners_examples():
    mgr = BddManager(6)
    s = all_corners_set(3, 2, mgr)
    assert mgr.enumerate_sat(s, 10) == ["000000", "000111", "111000", "111111"]
    mgr1 = BddManager(4)
    s1 = all_corners_set(4, 1, mgr1)
    assert mgr1.sat_count(s1) == 2
    assert mgr1.enumerate_sat(s1, 10) == ["0000", "1111"]
    mgr10 = BddManager(20)
    s10 = all_corners_set(2, 10, mgr10)
    assert mgr10.sat_count(s10) == 1024
    assert mgr10.enumerate_sat(s10, 2000) == oracle_corner_strings(2, 10)


def test_all_corners_rejects_bad_params():
    mgr = BddManager(6)
    with pytest.raises(ConfigError):
        all_corners_set(1, 2, mgr)
    with pytest.raises(ConfigError):
        all_corners_set(3, 0, mgr)


def test_hamming_expand_zero_is_identity():
    mgr = BddManager(6)
    s = bdd_from_strings(mgr, ["011000", "111111"])
    assert hamming_expand(s, 0) == s  # same handle, not merely same set


def test_hamming_expand_single_string():
    mgr = BddManager(6)
    s = bdd_from_strings(mgr, ["011000"])
    ball = hamming_expand(s, 1)
    assert mgr.sat_count(ball) == 7
    assert mgr.contains_string(ball, "111000")
    assert not mgr.contains_string(ball, "000111")


def test_hamming_expand_matches_oracle(rng):
    for _ in range(30):
        n = int(rng.integers(1, 11))
        mgr = BddManager(n)
        words = {
            "".join(rng.choice(["0", "1"], n)) for _ in range(int(rng.integers(1, 8)))
        }
        s = bdd_from_strings(mgr, sorted(words))
        for radius in range(4):
            ball = hamming_expand(s, radius)
            expect = sorted(oracle_hamming_ball(words, radius, n))
            assert mgr.enumerate_sat(ball, 1 << n) == expect


def test_hamming_expand_rejects_negative():
    mgr = BddManager(4)
    with pytest.raises(ConfigError):
        hamming_expand(mgr.mk_true(), -1)


# -- prioritize_box -----------------------------------------------------

def test_demo_regression_delta_1():
    res = prioritize_box(DEMO_FEATURES, DEMO_BOX, DEMO_DELTA, 3, delta_h=1)
    assert [c.bits for c in res.extracted] == ["000111"]
    report = res.extracted[0]
    assert report.min_hamming == 2
    np.testing.assert_allclose(report.vertex, [0.0, 3.0])
    np.testing.assert_allclose(report.region.lower, [0.0, 2.85])
    np.testing.assert_allclose(report.region.upper, [0.15, 3.0])
    assert res.delta_used == 1
    assert res.stats["sat_corners"] == 4
    assert res.stats["sat_train"] == 4
    assert res.stats["sat_unsupported"] == 2
    assert res.stats["sat_result"] == 1


def test_demo_regression_delta_0_and_2():
    res0 = prioritize_box(DEMO_FEATURES, DEMO_BOX, DEMO_DELTA, 3, delta_h=0)
    assert [c.bits for c in res0.extracted] == ["000111", "111000"]
    assert [c.min_hamming for c in res0.extracted] == [2, 1]
    res2 = prioritize_box(DEMO_FEATURES, DEMO_BOX, DEMO_DELTA, 3, delta_h=2)
    assert res2.extracted == []
    assert res2.stats["sat_result"] == 0


def test_all_corners_supported_yields_empty(rng):
    box = Box(np.array([0.0, 0.0]), np.array([1.0, 1.0]))
    delta = np.array([0.2, 0.2])
    feats = np.array([[0.1, 0.1], [0.1, 0.9], [0.9, 0.1], [0.9, 0.9]])
    for delta_h in range(4):
        res = prioritize_box(feats, box, delta, 3, delta_h)
        assert res.extracted == []


def test_no_features_yields_every_corner():
    res = prioritize_box(
        np.zeros((0, 2)), DEMO_BOX, DEMO_DELTA, 3, delta_h=3
    )
    assert [c.bits for c in res.extracted] == [
        "000000",
        "000111",
        "111000",
        "111111",
    ]
    assert all(c.min_hamming is None for c in res.extracted)


def random_instance(rng):
    dim = int(rng.integers(1, 5))
    phi = int(rng.integers(2, 4))
    lower = rng.uniform(-5, 5, dim)
    width = rng.uniform(0.5, 4.0, dim)
    box = Box(lower, lower + width)
    delta = rng.uniform(0.05, 0.4) * width
    n = int(rng.integers(1, 31))
    X = rng.uniform(box.lower, box.upper, size=(n, dim))
    return X, box, delta, phi


def test_prioritize_box_matches_bruteforce(rng):
    for _ in range(40):
        X, box, delta, phi = random_instance(rng)
        delta_h = int(rng.integers(0, 4))
        res = prioritize_box(X, box, delta, phi, delta_h, cap_m=10_000)
        encodings = [encode(box, delta, phi, f) for f in X]
        expect = oracle_prioritize(
            X, box.lower, box.upper, delta, phi, delta_h, encodings
        )
        assert [c.bits for c in res.extracted] == expect
        for c in res.extracted:
            assert c.min_hamming == min(hamming(c.bits, e) for e in encodings)
            assert c.min_hamming >= delta_h + 1


def test_prioritize_box_symbolic_soundness(rng):
    for _ in range(10):
        X, box, delta, phi = random_instance(rng)
        res = prioritize_box(X, box, delta, phi, delta_h=1)
        mgr = res.result_set.manager
        s_train = bdd_from_strings(mgr, [encode(box, delta, phi, f) for f in X])
        assert mgr.and_(res.result_set, s_train) == mgr.mk_false()
        corners = all_corners_set(phi, box.dim, mgr)
        assert mgr.setminus(res.result_set, corners) == mgr.mk_false()
        for c in res.extracted:
            assert mgr.contains_string(res.result_set, c.bits)


def test_prioritize_box_monotone_in_delta(rng):
    for _ in range(10):
        X, box, delta, phi = random_instance(rng)
        previous = None
        for delta_h in range(4):
            bits = {c.bits for c in prioritize_box(X, box, delta, phi, delta_h).extracted}
            if previous is not None:
                assert bits <= previous
            previous = bits


def test_prioritize_box_cap(rng):
    res = prioritize_box(np.zeros((0, 3)), Box(np.zeros(3), np.ones(3)), 0.1 * np.ones(3), 2, 0, cap_m=3)
    assert len(res.extracted) == 3
    assert res.stats["sat_result"] == 8
    with pytest.raises(ConfigError):
        prioritize_box(DEMO_FEATURES, DEMO_BOX, DEMO_DELTA, 3, 0, cap_m=0)


# -- cross-box filter ----------------------------------------------------

def overlap_monitor(second_lower=1.0):
    obj = {
        "layer": 1,
        "phi": 3,
        "delta_fraction": 0.05,
        "boxes": [
            {"lower": [0.0, 0.0], "upper": [2.0, 2.0], "delta": [0.1, 0.1]},
            {
                "lower": [second_lower, second_lower],
                "upper": [3.0, 3.0],
                "delta": [0.1, 0.1],
            },
        ],
    }
    return BoxMonitor.from_json_dict(obj)


def test_cross_box_filter_discards_hidden_vertex():
    mon = overlap_monitor()
    # all-ones corner of box 0 has vertex (2,2), strictly inside
    # [1.1, 2.9] x [1.1, 2.9], the shrunken interior of box 1
    assert cross_box_filter(mon, 0, "111111") == 1
    # vertex (0,0) is far outside box 1
    assert cross_box_filter(mon, 0, "000000") is None
    # and symmetrically box 1's all-zeros corner hides inside box 0
    assert cross_box_filter(mon, 1, "000000") == 0
    assert cross_box_filter(mon, 1, "111111") is None


def test_cross_box_filter_boundary_is_kept():
    # box 1 lower bound at 1.9: shrunken interior starts at exactly 2.0,
    # the vertex coordinate, and the strict inequality fails
    mon = overlap_monitor(second_lower=1.9)
    assert cross_box_filter(mon, 0, "111111") is None


def test_cross_box_filter_single_box_keeps():
    mon = BoxMonitor.from_json_dict(
        {
            "layer": 1,
            "phi": 2,
            "delta_fraction": 0.1,
            "boxes": [{"lower": [0.0], "upper": [1.0], "delta": [0.1]}],
        }
    )
    assert cross_box_filter(mon, 0, "00") is None
    assert cross_box_filter(mon, 0, "11") is None


def test_cross_box_filter_rejects_non_corner():
    mon = overlap_monitor()
    with pytest.raises(NotACornerError):
        cross_box_filter(mon, 0, "010101")


def test_cross_box_filter_matches_geometric_oracle(rng):
    for trial in range(15):
        X = rng.uniform(-2, 2, size=(40, 2))
        mon = BoxMonitor(k=3, delta_fraction=0.1, random_state=trial).fit(X)
        for i, box in enumerate(mon.boxes_):
            for bits in oracle_corner_strings(mon.phi, 2):
                got = cross_box_filter(mon, i, bits)
                # oracle: build the vertex by hand, test strict interior
                v = [
                    box.lower[j] if bits[mon.phi * j] == "0" else box.upper[j]
                    for j in range(2)
                ]
                expect = None
                for i2, other in enumerate(mon.boxes_):
                    if i2 == i:
                        continue
                    d = mon.deltas_[i2]
                    if all(
                        other.lower[j] + d[j] < v[j] < other.upper[j] - d[j]
                        for j in range(2)
                    ):
                        expect = i2
                        break
                assert got == expect


# -- monitor-level orchestration ------------------------------------------

def test_prioritize_monitor_merges_in_box_order(rng):
    X = np.vstack(
        [
            rng.uniform(0, 1, size=(20, 2)),
            rng.uniform(4, 5, size=(20, 2)),
        ]
    )
    mon = BoxMonitor(k=2, delta_fraction=0.2, phi=2, random_state=0).fit(X)
    results = prioritize_monitor(mon, X, delta_h=0, cap_m=100)
    assert [r.box_index for r in results] == [0, 1]
    for i, res in enumerate(results):
        # every reported corner belongs to its box
        for c in res.extracted:
            assert c.box_index == i
            assert c.discarded_by is None  # boxes are far apart


def test_prioritize_monitor_marks_cross_box_discards():
    mon = overlap_monitor()
    # no features: every corner of both boxes is a candidate
    results = prioritize_monitor(mon, np.zeros((0, 2)), delta_h=0)
    by_box = {r.box_index: {c.bits: c.discarded_by for c in r.extracted} for r in results}
    assert by_box[0]["111111"] == 1
    assert by_box[0]["000000"] is None
    assert by_box[1]["000000"] == 0
    assert by_box[1]["111111"] is None
    kept = [c.bits for r in results for c in r.kept]
    assert "111111" in kept and "000000" in kept  # each survives in one box
    no_filter = prioritize_monitor(mon, np.zeros((0, 2)), delta_h=0, cross_box=False)
    assert all(c.discarded_by is None for r in no_filter for c in r.extracted)


def test_prioritize_monitor_overlap_features_count_for_both():
    mon = overlap_monitor()
    # both features lie in the overlap region, so each is encoded for both
    # boxes; one supports box 0's upper corner, the other box 1's lower one
    X = np.array([[1.95, 1.95], [1.05, 1.05]])
    results = prioritize_monitor(mon, X, delta_h=0, cross_box=False)
    assert "111111" not in [c.bits for c in results[0].extracted]
    assert "000000" not in [c.bits for c in results[1].extracted]


# -- jsonl -----------------------------------------------------------------

def test_corners_jsonl_round_trip(tmp_path):
    res = prioritize_box(DEMO_FEATURES, DEMO_BOX, DEMO_DELTA, 3, delta_h=0)
    path = tmp_path / "corners.jsonl"
    write_corners_jsonl([res], path)
    lines = path.read_text().strip().split("\n")
    assert len(lines) == 2
    first = json.loads(lines[0])
    assert first == {
        "bits": "000111",
        "box": 0,
        "discarded_by": None,
        "min_hamming": 2,
        "region_lower": [0.0, 2.85],
        "region_upper": [0.15, 3.0],
        "vertex": [0.0, 3.0],
    }
    back = read_corners_jsonl(path)
    assert [r["bits"] for r in back] == ["000111", "111000"]


def test_corners_jsonl_rejects_garbage(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"box": 0}\n')
    with pytest.raises(ParseError, match="line 1"):
        read_corners_jsonl(path)
    path.write_text('{"box": 0, "bits": "00", "vertex": [0], "region_lower": [0], '
                    '"region_upper": [0], "min_hamming": 1, "discarded_by": null}\nnot json\n')
    with pytest.raises(ParseError, match="line 2"):
        read_corners_jsonl(path)
