#include <doctest.h>

#include <algorithm>
#include <set>

#include "cpf/graph.hpp"
#include "cpf/rng.hpp"
#include "cpf/synthetic.hpp"

using namespace cpf;

namespace {

Graph path3() { return build_graph(3, std::vector<Edge>{{0, 1}, {1, 2}}, Matrix::Zero(3, 2), {0, 1, 0}, 2); }

}  // namespace

TEST_CASE("path graph has the expected CSR layout") {
  const Graph g = path3();
  CHECK(g.offsets == std::vector<Index>{0, 1, 3, 4});
  CHECK(g.neighbors == std::vector<Index>{1, 0, 2, 1});
  CHECK(g.num_edges() == 2);
  CHECK(g.degree(1) == 2);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(1, 0));
  CHECK_FALSE(g.has_edge(0, 2));
}

TEST_CASE("build_graph symmetrizes, deduplicates and drops self-loops") {
  const std::vector<Edge> edges = {{1, 0}, {0, 1}, {0, 1}, {2, 2}, {2, 1}};
  const Graph g = build_graph(3, edges, Matrix::Zero(3, 1), {0, 0, 1}, 2);
  CHECK(g.num_edges() == 2);
  CHECK(g.edge_list() == std::vector<Edge>{{0, 1}, {1, 2}});
  CHECK_FALSE(g.has_edge(2, 2));
}

TEST_CASE("build_graph rejects malformed input") {
  CHECK_THROWS_AS(build_graph(2, std::vector<Edge>{{0, 5}}, Matrix::Zero(2, 1), {0, 1}, 2), std::invalid_argument);
  CHECK_THROWS_AS(build_graph(2, std::vector<Edge>{}, Matrix::Zero(3, 1), {0, 1}, 2), std::invalid_argument);
  CHECK_THROWS_AS(build_graph(2, std::vector<Edge>{}, Matrix::Zero(2, 1), {0, 3}, 2), std::invalid_argument);
  CHECK_THROWS_AS(build_graph(2, std::vector<Edge>{}, Matrix::Zero(2, 1), {0}, 2), std::invalid_argument);
}

TEST_CASE("num_classes is inferred from labels when not given") {
  const Graph g = build_graph(3, std::vector<Edge>{{0, 1}}, Matrix::Zero(3, 1), {0, 4, 2});
  CHECK(g.num_classes == 5);
}

TEST_CASE("connected components and the largest component") {
  // Components {0,1}, {2,3,4}, {5}.
  const std::vector<Edge> edges = {{0, 1}, {2, 3}, {3, 4}};
  Matrix x(6, 1);
  x << 0, 1, 2, 3, 4, 5;
  const Graph g = build_graph(6, edges, x, {0, 1, 0, 1, 0, 1}, 2);
  const auto comp = connected_components(g);
  CHECK(comp == std::vector<Index>{0, 0, 1, 1, 1, 2});
  CHECK_FALSE(g.is_connected());

  const Graph lcc = largest_connected_component(g);
  CHECK(lcc.num_nodes == 3);
  CHECK(lcc.num_edges() == 2);
  CHECK(lcc.original_ids == std::vector<Index>{2, 3, 4});
  CHECK(lcc.features(0, 0) == 2.0);
  CHECK(lcc.labels == std::vector<int>{0, 1, 0});
  CHECK(lcc.num_classes == 2);
  CHECK(lcc.is_connected());
}

TEST_CASE("largest component ties go to the component with the smallest node") {
  const Graph g = build_graph(4, std::vector<Edge>{{2, 3}, {0, 1}}, Matrix::Zero(4, 1), {0, 0, 1, 1}, 2);
  CHECK(largest_connected_component(g).original_ids == std::vector<Index>{0, 1});
}

TEST_CASE("make_split draws per-class train and validation nodes") {
  SyntheticSpec spec;
  spec.num_nodes = 400;
  spec.num_classes = 4;
  spec.seed = 9;
  const Graph g = make_synthetic_graph(spec);
  SplitRequest request;
  request.labeled_per_class = 5;
  request.val_count = 7;
  request.seed = 3;
  const Split split = make_split(g, request);
  CHECK(split.train.size() == 20);
  CHECK(split.val.size() == 28);
  CHECK(split.test.size() == 400 - 48);
  CHECK_NOTHROW(split.validate(g.num_nodes));
  std::vector<int> per_class(4, 0);
  for (Index v : split.train) ++per_class[g.labels[v]];
  CHECK(per_class == std::vector<int>{5, 5, 5, 5});
  CHECK(std::is_sorted(split.train.begin(), split.train.end()));

  SUBCASE("deterministic per seed") {
    const Split again = make_split(g, request);
    CHECK(again.train == split.train);
    CHECK(again.val == split.val);
    request.seed = 4;
    CHECK(make_split(g, request).train != split.train);
  }
  SUBCASE("total validation mode") {
    request.val_mode = ValidationMode::total;
    request.val_count = 30;
    const Split total = make_split(g, request);
    CHECK(total.val.size() == 30);
    CHECK_NOTHROW(total.validate(g.num_nodes));
  }
  SUBCASE("unlabeled is everything outside train") {
    const auto u = split.unlabeled();
    CHECK(u.size() == split.val.size() + split.test.size());
    std::set<Index> train(split.train.begin(), split.train.end());
    for (Index v : u) CHECK_FALSE(train.contains(v));
  }
}

TEST_CASE("make_split refuses classes that are too small") {
  const Graph g = build_graph(6, std::vector<Edge>{{0, 1}}, Matrix::Zero(6, 1), {0, 0, 0, 1, 1, 1}, 2);
  SplitRequest request;
  request.labeled_per_class = 2;
  request.val_count = 2;
  CHECK_THROWS_AS(make_split(g, request), std::invalid_argument);
  request.val_count = 1;
  CHECK_NOTHROW(make_split(g, request));
  request.labeled_per_class = 0;
  CHECK_THROWS_AS(make_split(g, request), std::invalid_argument);
}

TEST_CASE("Split::validate catches overlap and gaps") {
  Split s;
  s.train = {0};
  s.val = {0};
  s.test = {1, 2};
  CHECK_THROWS_AS(s.validate(3), std::invalid_argument);
  s.val = {};
  s.test = {1};
  CHECK_THROWS_AS(s.validate(3), std::invalid_argument);
  s.test = {1, 2};
  CHECK_NOTHROW(s.validate(3));
  s.test = {1, 7};
  CHECK_THROWS_AS(s.validate(3), std::invalid_argument);
}

TEST_CASE("synthetic graphs are connected, deterministic and homophilous") {
  SyntheticSpec spec;
  spec.num_nodes = 500;
  spec.avg_degree = 6.0;
  spec.homophily = 0.9;
  spec.seed = 4;
  const Graph a = make_synthetic_graph(spec);
  const Graph b = make_synthetic_graph(spec);
  CHECK(a.is_connected());
  CHECK(a.neighbors == b.neighbors);
  CHECK(a.features == b.features);
  CHECK(a.num_edges() == doctest::Approx(1500).epsilon(0.05));
  Index same = 0;
  for (const auto& [u, v] : a.edge_list()) same += a.labels[u] == a.labels[v] ? 1 : 0;
  CHECK(static_cast<double>(same) / static_cast<double>(a.num_edges()) > 0.75);
}

TEST_CASE("rng streams are deterministic and label-separated") {
  Rng a = Rng::stream(7, "split");
  Rng b = Rng::stream(7, "split");
  Rng c = Rng::stream(7, "dropout");
  const auto x = a.next_u64();
  CHECK(x == b.next_u64());
  CHECK(x != c.next_u64());
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.below(3) < 3);
  }
}
