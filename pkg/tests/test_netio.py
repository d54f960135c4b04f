import json
import math

import numpy as np
import pytest

from zonodual.netio import (
    FormatError, LayerSpec, NetworkSpec, ProblemSpec, ReportSpec, fold_objective, load_network,
    load_problem, make_input_box, network_from_dict, network_to_dict, read_report, save_network,
    write_report,
)


def two_layer():
    return NetworkSpec((LayerSpec(np.ones((3, 2)), np.zeros(3)), LayerSpec(np.ones((1, 3)), np.ones(1))), 2)


def test_round_trip(tmp_path):
    net = two_layer()
    path = tmp_path / "net.json"
    save_network(net, path)
    back = load_network(path)
    assert len(back.layers) == 2
    assert np.array_equal(back.layers[0].weight, net.layers[0].weight)


def test_dimension_mismatch():
    data = network_to_dict(two_layer())
    data["layers"][1]["weight"] = [[1.0, 1.0]]
    with pytest.raises(FormatError, match="layer 1"):
        network_from_dict(data)


def test_feature_shape_accepted():
    data = {"input_dim": 2, "layers": [
        {"weight": np.ones((8, 2)).tolist(), "bias": [0] * 8, "feature_shape": [2, 2, 2]},
        {"weight": np.ones((1, 8)).tolist(), "bias": [0]},
    ]}
    assert network_from_dict(data).layers[0].feature_shape == (2, 2, 2)
    data["layers"][0]["feature_shape"] = [2, 2, 3]
    with pytest.raises(FormatError):
        network_from_dict(data)


def test_missing_layer_fields():
    with pytest.raises(FormatError):
        network_from_dict({"input_dim": 2, "layers": [{"weight": [[1, 1]]}]})


def test_bad_json_location(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"input_dim": 2,\n  "layers": [}')
    with pytest.raises(FormatError, match="line 2"):
        load_network(path)


def test_input_box_clipping():
    box = make_input_box(ProblemSpec(np.array([0.5]), 0.1, np.ones(1), np.zeros(1), np.ones(1)))
    assert box.lo[0] == pytest.approx(0.4) and box.hi[0] == pytest.approx(0.6)
    box = make_input_box(ProblemSpec(np.array([0.05]), 0.1, np.ones(1), np.zeros(1), np.ones(1)))
    assert box.lo[0] == 0 and box.hi[0] == pytest.approx(0.15)
    box = make_input_box(ProblemSpec(np.array([0.3]), 0.0, np.ones(1)))
    assert box.lo[0] == box.hi[0]


def test_problem_validation(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"input_center": [0, 0], "epsilon": -1, "objective": [1]}))
    with pytest.raises(FormatError):
        load_problem(path)
    path.write_text(json.dumps({"input_center": [0, 0, 0], "epsilon": 1, "objective": [1]}))
    with pytest.raises(FormatError):
        load_problem(path, two_layer())


def test_fold_objective():
    W = np.arange(30.0).reshape(10, 3)
    net = NetworkSpec((LayerSpec(np.ones((3, 2)), np.zeros(3)), LayerSpec(W, np.arange(10.0))), 2)
    e1 = np.eye(10)[1]
    folded = fold_objective(net, e1)
    assert np.array_equal(folded.layers[-1].weight[0], W[1])
    diff = fold_objective(net, e1 - np.eye(10)[2])
    x = np.array([0.3, -0.2])
    assert diff(x)[0] == pytest.approx(net(x)[1] - net(x)[2])
    zero = fold_objective(net, np.zeros(10))
    assert zero(x)[0] == 0


def test_report_round_trip_and_nan(tmp_path):
    rep = ReportSpec(-1.0, -0.5, -0.25, [0.1, 0.2, 0.3], {"a": 1}, True)
    write_report(rep, tmp_path / "r.json")
    assert read_report(tmp_path / "r.json") == rep
    with pytest.raises(ValueError):
        write_report(ReportSpec(math.nan, 0, 0, [0, 0, 0]), tmp_path / "n.json")
    with pytest.raises(OSError):
        write_report(rep, tmp_path / "missing" / "r.json")
