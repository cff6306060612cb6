import json

import numpy as np
import pytest
from sklearn.base import clone

from boxmon.boxes import Box
from boxmon.encoding import is_corner_string
from boxmon.errors import (
    ConfigError,
    ConstructionError,
    EmptyDataError,
    EnumerationCapError,
    InputShapeError,
    ParseError,
)
from boxmon.monitor import BoxMonitor, read_features_csv, write_features_csv

# Two well-separated blobs whose bounding boxes are known exactly.
BLOB_A = [(0.1, 2.1), (0.9, 2.9), (0.5, 2.5), (0.3, 2.8), (0.7, 2.2)]
BLOB_B = [(2.1, 0.1), (2.9, 0.9), (2.5, 0.5), (2.2, 0.7), (2.8, 0.3), (2.4, 0.6)]


def two_blob_monitor(**kw):
    kw.setdefault("k", 2)
    kw.setdefault("delta_fraction", 0.1)
    return BoxMonitor(**kw).fit(np.array(BLOB_A + BLOB_B))


def hand_monitor(boxes, deltas, phi=3, layer=1):
    obj = {
        "layer": layer,
        "phi": phi,
        "delta_fraction": 0.0,
        "boxes": [
            {"lower": list(lo), "upper": list(hi), "delta": list(d)}
            for (lo, hi), d in zip(boxes, deltas)
        ],
    }
    return BoxMonitor.from_json_dict(obj)


def test_fit_two_clusters_exact_boxes():
    mon = two_blob_monitor()
    assert len(mon.boxes_) == 2
    np.testing.assert_allclose(mon.boxes_[0].lower, [0.1, 2.1])
    np.testing.assert_allclose(mon.boxes_[0].upper, [0.9, 2.9])
    np.testing.assert_allclose(mon.boxes_[1].lower, [2.1, 0.1])
    np.testing.assert_allclose(mon.boxes_[1].upper, [2.9, 0.9])
    np.testing.assert_allclose(mon.deltas_[0], [0.08, 0.08])
    np.testing.assert_allclose(mon.deltas_[1], [0.08, 0.08])
    assert mon.n_features_in_ == 2


def test_contains_and_predict():
    mon = two_blob_monitor()
    assert mon.contains([0.5, 2.5]) == (True, 0)
    assert mon.contains([2.5, 0.5]) == (True, 1)
    assert mon.contains([1.5, 1.5]) == (False, None)
    # boundary counts as inside
    assert mon.contains([0.9, 2.9]) == (True, 0)
    pred = mon.predict([[0.5, 2.5], [1.5, 1.5], [2.2, 0.15]])
    np.testing.assert_array_equal(pred, [1, -1, 1])
    np.testing.assert_array_equal(
        mon.box_indices([[0.5, 2.5], [1.5, 1.5], [2.2, 0.15]]), [0, -1, 1]
    )


def test_training_data_always_accepted(rng):
    for trial in range(10):
        d = int(rng.integers(1, 5))
        n = int(rng.integers(6, 40))
        X = rng.normal(size=(n, d)) * rng.uniform(0.5, 3.0)
        k = int(rng.integers(1, 4))
        mon = BoxMonitor(k=k, delta_fraction=0.2, random_state=trial).fit(X)
        assert np.all(mon.predict(X) == 1)


def test_contains_matches_bruteforce(rng):
    X = rng.uniform(-2, 2, size=(60, 3))
    mon = BoxMonitor(k=3, delta_fraction=0.1, random_state=7).fit(X)
    probes = rng.uniform(-3, 3, size=(1000, 3))
    for p in probes:
        expect = None
        for i, b in enumerate(mon.boxes_):
            if np.all(p >= b.lower) and np.all(p <= b.upper):
                expect = i
                break
        assert mon.contains(p) == (expect is not None, expect)


def test_overlapping_boxes_lowest_index_wins():
    mon = hand_monitor(
        boxes=[([0.0, 0.0], [2.0, 2.0]), ([1.0, 1.0], [3.0, 3.0])],
        deltas=[[0.1, 0.1], [0.1, 0.1]],
    )
    assert mon.contains([1.5, 1.5]) == (True, 0)
    assert mon.contains([2.5, 2.5]) == (True, 1)


def test_corner_enumeration_counts(rng):
    for trial in range(10):
        d = int(rng.integers(1, 6))
        X = rng.uniform(0, 10, size=(30, d))
        mon = BoxMonitor(k=2, delta_fraction=0.15, random_state=trial).fit(X)
        for i in range(2):
            regions = list(mon.corners(i))
            assert len(regions) == mon.corner_count(i) == 2 ** d
            bits = [r.bits for r in regions]
            assert len(set(bits)) == len(bits)
            assert bits == sorted(bits)
            for r in regions:
                assert len(r.bits) == mon.phi * d
                assert is_corner_string(r.bits, mon.phi)
                assert np.all(r.lower >= mon.boxes_[i].lower - 1e-12)
                assert np.all(r.upper <= mon.boxes_[i].upper + 1e-12)


def test_corner_enumeration_degenerate_dim():
    mon = hand_monitor(
        boxes=[([0.0, 5.0], [1.0, 5.0])],
        deltas=[[0.1, 0.0]],
    )
    regions = list(mon.corners(0))
    # the flat dimension only contributes its zeros block
    assert [r.bits for r in regions] == ["000000", "111000"]
    assert mon.corner_count(0) == 2


def test_corner_enumeration_cap():
    d = 21
    mon = hand_monitor(boxes=[([0.0] * d, [1.0] * d)], deltas=[[0.1] * d])
    with pytest.raises(EnumerationCapError):
        next(mon.corners(0))


def test_corner_support_classification():
    mon = hand_monitor(boxes=[([0.0, 2.0], [1.0, 3.0])], deltas=[[0.15, 0.15]])
    X = np.array([[0.1, 2.1], [0.9, 2.95], [0.6, 2.9], [0.6, 2.1]])
    support = {r.bits: mon.is_supported(r, X) for r in mon.corners(0)}
    assert support == {
        "000000": True,
        "000111": False,
        "111000": False,
        "111111": True,
    }


def test_encode_via_monitor():
    mon = hand_monitor(boxes=[([0.0, 2.0], [1.0, 3.0])], deltas=[[0.15, 0.15]])
    assert mon.encode(0, [0.6, 2.9]) == "011111"


def test_validation_clean_fit(rng):
    X = rng.uniform(-1, 1, size=(50, 3))
    mon = BoxMonitor(k=2, delta_fraction=0.1, random_state=3).fit(X)
    report = mon.validate(X)
    assert report.ok
    assert report.malformed_box is None
    assert report.uncovered_row is None
    assert report.loose_bound is None


def test_validation_uncovered_row():
    mon = two_blob_monitor()
    X = np.vstack([BLOB_A + BLOB_B, [[9.0, 9.0]]])
    report = mon.validate(X)
    assert not report.data_covered
    assert report.uncovered_row == 11
    assert not report.ok


def test_validation_loose_bound():
    # upper bound in dim 1 sits 1.0 above any data, delta is only 0.15
    mon = hand_monitor(boxes=[([0.0, 0.0], [1.0, 2.0])], deltas=[[0.15, 0.15]])
    X = np.array([[0.0, 0.0], [1.0, 1.0], [0.5, 0.4]])
    report = mon.validate(X)
    assert report.data_covered
    assert not report.bounds_tight
    assert report.loose_bound == (0, 1, "upper")


def test_validation_malformed_box():
    mon = two_blob_monitor()
    mon.boxes_[0].lower[0] = 99.0  # corrupt in place, bypassing Box checks
    report = mon.validate(np.array(BLOB_A + BLOB_B))
    assert not report.boxes_well_formed
    assert report.malformed_box == 0


def test_json_round_trip():
    mon = two_blob_monitor(phi=4, layer=2)
    blob = json.dumps(mon.to_json_dict(), sort_keys=True)
    back = BoxMonitor.from_json_dict(json.loads(blob))
    assert back.phi == 4 and back.layer == 2
    assert len(back.boxes_) == 2
    for b1, b2, d1, d2 in zip(mon.boxes_, back.boxes_, mon.deltas_, back.deltas_):
        np.testing.assert_array_equal(b1.lower, b2.lower)
        np.testing.assert_array_equal(b1.upper, b2.upper)
        np.testing.assert_array_equal(d1, d2)
    assert json.dumps(back.to_json_dict(), sort_keys=True) == blob


def test_from_json_rejects_garbage():
    with pytest.raises(ParseError):
        BoxMonitor.from_json_dict({"layer": 1, "phi": 3})
    with pytest.raises(ParseError):
        BoxMonitor.from_json_dict(
            {
                "layer": 1,
                "phi": 3,
                "delta_fraction": 0.1,
                "boxes": [
                    {"lower": [0.0], "upper": [1.0], "delta": [0.1]},
                    {"lower": [0.0, 0.0], "upper": [1.0, 1.0], "delta": [0.1, 0.1]},
                ],
            }
        )


def test_features_csv_round_trip(tmp_path, rng):
    X = rng.normal(size=(17, 4))
    path = tmp_path / "feat.csv"
    write_features_csv(X, path)
    back = read_features_csv(path)
    np.testing.assert_array_equal(X, back)


def test_features_csv_reports_bad_row(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("f0,f1\n1.0,2.0\n3.0\n")
    with pytest.raises(ParseError, match="row 3"):
        read_features_csv(path)
    path.write_text("f0,f1\n1.0,oops\n")
    with pytest.raises(ParseError, match="row 2"):
        read_features_csv(path)
    path.write_text("a,b\n1.0,2.0\n")
    with pytest.raises(ParseError, match="row 1"):
        read_features_csv(path)


def test_estimator_api():
    mon = BoxMonitor(k=2, delta_fraction=0.2, phi=4, layer=3, random_state=9)
    params = mon.get_params()
    assert params == {
        "k": 2,
        "delta_fraction": 0.2,
        "phi": 4,
        "layer": 3,
        "random_state": 9,
    }
    dup = clone(mon)
    assert dup.get_params() == params
    mon.set_params(k=1)
    assert mon.get_params()["k"] == 1


def test_parameter_validation():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    with pytest.raises(ConfigError):
        BoxMonitor(k=0).fit(X)
    with pytest.raises(ConfigError):
        BoxMonitor(delta_fraction=0.5).fit(X)
    with pytest.raises(ConfigError):
        BoxMonitor(phi=1).fit(X)
    with pytest.raises(ConstructionError):
        BoxMonitor(k=4).fit(X)
    with pytest.raises(ConstructionError):
        BoxMonitor(k=2).fit(np.zeros((5, 2)))  # 1 distinct row < k


def test_input_validation():
    mon = BoxMonitor(k=1)
    with pytest.raises(ConstructionError):
        mon.predict([[0.0, 0.0]])
    mon.fit(np.array([[0.0, 0.0], [1.0, 1.0]]))
    with pytest.raises(InputShapeError):
        mon.contains([0.0, 0.0, 0.0])
    with pytest.raises(InputShapeError):
        mon.predict([0.0, 1.0])  # 1-d
    with pytest.raises(EmptyDataError):
        mon.fit(np.zeros((0, 2)))
    with pytest.raises(InputShapeError):
        mon.fit(np.array([[np.nan, 0.0]]))
