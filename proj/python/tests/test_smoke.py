import math

import pytest

import atmgad


def test_catalog_sizes():
    assert len(atmgad.catalog("unrooted")) == 32
    assert len(atmgad.catalog("focal_rooted")) == 96
    assert atmgad.catalog("unrooted")[0].count("-") == 2


def test_star_instance():
    g = atmgad.Graph(3, [(0, 1, 1), (0, 2, 2), (1, 2, 3)])
    found = atmgad.enumerate_instances(g, 0, 10.0, "unrooted")
    assert len(found) == 1
    assert atmgad.catalog("unrooted")[found[0]["type"]] == "01-02-12"
    assert atmgad.enumerate_instances(g, 0, 1.5) == []


def test_sparsemax_and_metrics():
    p = atmgad.sparsemax([1.1, 1.0, 0.5])
    assert p == pytest.approx([0.55, 0.45, 0.0])
    assert atmgad.auc([0.9, 0.1], [1, 0]) == 1.0
    assert atmgad.auprc([0.9, 0.8, 0.3, 0.1], [1, 0, 1, 0]) == pytest.approx(5 / 6)
    with pytest.raises(ValueError):
        atmgad.auc([0.9, 0.1], [1, 1])


def test_errors_map_to_python():
    with pytest.raises(ValueError):
        atmgad.Graph(2, [(0, 0, 1)])
    with pytest.raises(OSError):
        atmgad.load_edge_list("/no/such/file.csv")


def test_train_predict_roundtrip(tmp_path):
    g = atmgad.synth_burst_graph(100, 0.1, 20, 3)
    assert sum(1 for y in g.labels() if y == 1) == 10
    train_ids, test_ids = atmgad.make_splits(g, 1, 0.7, 3)[0]
    model, report = atmgad.train(g, train_ids, test_ids, epochs=5, learning_rate=0.01, seed=1)
    assert len(report["loss_curve"]) == 5
    assert all(0.0 < d < model.tau_max for d in model.deltas)
    scores = model.predict(g, test_ids)
    assert all(0.0 <= s <= 1.0 for s in scores)
    path = tmp_path / "m.ckpt"
    model.save(path)
    again = atmgad.load_model(path)
    assert again.predict(g, test_ids) == scores
    assert math.isclose(again.evaluate(g, test_ids)["auc"], report["test"]["auc"])
