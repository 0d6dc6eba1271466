#include <doctest.h>

#include <cmath>

#include "cpf/metrics.hpp"
#include "cpf/synthetic.hpp"
#include "cpf/teacher.hpp"

using namespace cpf;
using namespace cpf::teacher;

TEST_CASE("normalized adjacency of a 2-node path") {
  const Graph g = build_graph(2, std::vector<Edge>{{0, 1}}, Matrix::Identity(2, 2), {0, 1}, 2);
  const Matrix a = normalized_adjacency(g);
  // Both degrees are 2 with self-loops, so every entry is 1/2.
  CHECK(a.isApprox(Matrix::Constant(2, 2, 0.5), 1e-15));
}

TEST_CASE("GCN on a 2-node path averages the features under the normalized adjacency") {
  const Graph g = build_graph(2, std::vector<Edge>{{0, 1}}, Matrix::Identity(2, 2), {0, 1}, 2);
  GcnParams p{Matrix::Identity(2, 2), Matrix::Identity(2, 2), 0.0};
  const Matrix probs = gcn_forward(g, p);
  // Hidden = A X = all 1/2; logits = A hidden = all 1/2; softmax uniform.
  CHECK(probs.isApprox(Matrix::Constant(2, 2, 0.5), 1e-15));

  const Graph lone = build_graph(1, std::vector<Edge>{}, Matrix::Ones(1, 3), {0}, 4);
  GcnParams z{Matrix::Ones(3, 2), Matrix::Zero(2, 4), 0.0};
  CHECK(gcn_forward(lone, z).isApprox(Matrix::Constant(1, 4, 0.25), 1e-15));
}

TEST_CASE("SGC forward") {
  const Graph lone = build_graph(1, std::vector<Edge>{}, Matrix::Ones(1, 2), {0}, 2);
  Matrix w(2, 2);
  w << 1, 0, 0, 0;
  // One isolated node: A = [1], so logits = X W = (1, 0).
  const Matrix p = sgc_forward(lone, w, 1);
  CHECK(p(0, 0) == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 1.0)));
  CHECK(sgc_forward(lone, Matrix::Zero(2, 2), 2).isApprox(Matrix::Constant(1, 2, 0.5)));
  CHECK_THROWS_AS(sgc_forward(lone, w, 0), std::invalid_argument);
}

TEST_CASE("teachers train, clamp and are deterministic") {
  SyntheticSpec spec;
  spec.num_nodes = 300;
  spec.num_classes = 3;
  spec.feature_dim = 40;
  spec.seed = 5;
  const Graph g = make_synthetic_graph(spec);
  SplitRequest request;
  request.seed = 2;
  const Split split = make_split(g, request);

  for (TeacherKind kind : {TeacherKind::gcn, TeacherKind::sgc}) {
    CAPTURE(to_string(kind));
    TeacherConfig config = default_teacher_config(kind);
    config.max_epochs = 200;
    const TeacherResult a = train_teacher(g, split, config, 7);
    const TeacherResult b = train_teacher(g, split, config, 7);
    CHECK(a.soft_labels.probs == b.soft_labels.probs);
    CHECK(a.soft_labels.source == "builtin:" + to_string(kind));
    CHECK(a.test_acc > 0.7);
    CHECK_NOTHROW(check_row_stochastic(a.soft_labels.probs, 1e-9));
    for (Index v : split.train) CHECK(a.soft_labels.probs(v, g.labels[v]) == 1.0);
    CHECK(a.best_epoch >= 1);
    double best_val = 0.0;
    for (const auto& h : a.history) best_val = std::max(best_val, h.val_acc);
    CHECK(a.val_acc == best_val);
    CHECK(a.history[a.best_epoch - 1].val_acc == best_val);
  }
}

TEST_CASE("GCN fits a linearly separable toy graph") {
  // Two cliques with one-hot class features.
  std::vector<Edge> edges;
  for (Index u = 0; u < 5; ++u)
    for (Index v = u + 1; v < 5; ++v) {
      edges.emplace_back(u, v);
      edges.emplace_back(u + 5, v + 5);
    }
  edges.emplace_back(4, 5);
  Matrix x = Matrix::Zero(10, 2);
  std::vector<int> labels(10);
  for (Index v = 0; v < 10; ++v) {
    labels[v] = v < 5 ? 0 : 1;
    x(v, labels[v]) = 1.0;
  }
  const Graph g = build_graph(10, edges, x, labels, 2);
  Split split;
  split.train = {0, 1, 8, 9};
  split.val = {2, 3, 4, 5, 6, 7};
  TeacherConfig config = default_teacher_config(TeacherKind::gcn);
  config.dropout = 0.0;
  config.max_epochs = 200;
  const TeacherResult r = train_teacher(g, split, config, 1);
  const auto& gcn = std::get<GcnParams>(r.params);
  CHECK(accuracy(gcn_forward(g, gcn, config.normalize_features), g, split.train) == 1.0);
}

TEST_CASE("teacher configuration defaults") {
  const auto gcn = default_teacher_config(TeacherKind::gcn);
  CHECK(gcn.hidden == 64);
  CHECK(gcn.lr == 0.01);
  CHECK(gcn.dropout == 0.8);
  CHECK(gcn.weight_decay == 0.001);
  const auto sgc = default_teacher_config(TeacherKind::sgc);
  CHECK(sgc.lr == 0.1);
  CHECK(sgc.sgc_power == 2);
  CHECK(teacher_kind_from_string("sgc") == TeacherKind::sgc);
  CHECK_THROWS_AS(teacher_kind_from_string("gat"), std::invalid_argument);
}
