import numpy as np
import pytest

import cpf_distill as cd


@pytest.fixture(scope="module")
def setup():
    g = cd.make_synthetic_graph(num_nodes=150, num_classes=3, feature_dim=20, seed=1)
    split = cd.make_split(g, labeled_per_class=6, val_count=8, seed=1)
    teacher = cd.train_teacher(g, split, kind="gcn", seed=1, max_epochs=40)
    return g, split, teacher


def test_graph_from_edges():
    x = np.eye(3)
    g = cd.Graph(3, [(0, 1), (1, 0), (1, 2)], x, [0, 1, 1])
    assert g.num_nodes == 3
    assert g.num_edges == 2
    assert g.num_classes == 2
    assert g.neighbors(1) == [0, 2]
    assert g.is_connected()
    with pytest.raises(Exception):
        cd.Graph(3, [(0, 5)], x, [0, 1, 1])


def test_split_and_label_propagation(setup):
    g, split, _ = setup
    assert len(split.train) == 18
    assert not set(split.train) & set(split.test)
    f = cd.label_propagation(g, split, smoothness=0.5, iterations=5)
    assert f.shape == (g.num_nodes, g.num_classes)
    np.testing.assert_allclose(f.sum(axis=1), 1.0, atol=1e-12)


def test_teacher_soft_labels(setup):
    g, split, teacher = setup
    probs = teacher["soft_labels"]
    assert teacher["source"] == "builtin:gcn"
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
    labels = np.asarray(g.labels)
    train = np.asarray(split.train)
    assert (probs[train, labels[train]] == 1.0).all()
    assert cd.accuracy(probs, g, split.test) == pytest.approx(teacher["test_acc"])


@pytest.mark.parametrize("variant", ["plp", "ft", "cpf-ind", "cpf-tra"])
def test_student_round_trip(setup, tmp_path, variant):
    g, split, teacher = setup
    r = cd.train_student(g, split, teacher["soft_labels"], variant=variant, layers=2, hidden=8, max_epochs=20, seed=3)
    params = r["params"]
    assert params.variant == variant
    probs, layers = cd.student_forward(g, split, params, keep_layers=True)
    np.testing.assert_allclose(probs, r["probs"], atol=1e-12)
    assert len(layers) == 3
    path = tmp_path / "student.tsv"
    params.save(str(path))
    loaded = cd.StudentParams.load(str(path))
    np.testing.assert_array_equal(cd.student_forward(g, split, loaded)[0], probs)
    cases = cd.rank_interpretability(g, params, probs, top_k=2)
    if variant == "ft":
        assert cases == []
    for c in cases:
        assert c["ego_nodes"][0] == c["node"]


def test_bundle_round_trip(setup, tmp_path):
    g, split, _ = setup
    cd.write_bundle(str(tmp_path), g, split)
    g2, split2, meta = cd.load_bundle(str(tmp_path))
    assert g2.num_nodes == g.num_nodes
    assert list(split2.test) == list(split.test)
    np.testing.assert_array_equal(g2.features, g.features)
    (tmp_path / "labels.tsv").write_text("garbage\n")
    with pytest.raises(ValueError):
        cd.load_bundle(str(tmp_path))


def test_relative_improvement():
    assert cd.relative_improvement(0.9, 0.8) == pytest.approx(0.125)
    assert cd.__version__
