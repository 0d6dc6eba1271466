#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cpf/bundle.hpp"
#include "cpf/teacher.hpp"

using namespace cpf;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("cpf_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

void write_small_bundle(const fs::path& dir) {
  write(dir / "edges.tsv", "0\t1\n1\t2\n3\t4\n");
  write(dir / "features.tsv", "1\t0\n0\t1\n1\t1\n0.5\t0\n0\t0.5\n");
  write(dir / "labels.tsv", "0\n1\n0\n1\n0\n");
}

}  // namespace

TEST_CASE("load_bundle keeps the largest component and remaps the split") {
  TempDir tmp("bundle_lcc");
  write_small_bundle(tmp.path);
  write(tmp.path / "split.tsv", "0\ttrain\n1\tval\n2\ttest\n3\ttrain\n4\ttest\n");
  write(tmp.path / "meta.tsv", "name\ttiny\n");
  const Bundle b = load_bundle(tmp.path);
  CHECK(b.raw_num_nodes == 5);
  CHECK(b.raw_num_edges == 3);
  CHECK(b.graph.num_nodes == 3);
  CHECK(b.graph.num_edges() == 2);
  CHECK(b.graph.original_ids == std::vector<Index>{0, 1, 2});
  REQUIRE(b.split.has_value());
  CHECK(b.split->train == std::vector<Index>{0});
  CHECK(b.split->val == std::vector<Index>{1});
  CHECK(b.split->test == std::vector<Index>{2});
  CHECK(meta_value(b.meta, "name") == "tiny");
}

TEST_CASE("write_bundle then load_bundle round-trips") {
  TempDir tmp("bundle_roundtrip");
  Matrix x(3, 2);
  x << 0.125, 1, 0, 2.5, 1e-3, 0;
  const Graph g = build_graph(3, std::vector<Edge>{{1, 0}, {2, 1}}, x, {2, 0, 1}, 3);
  Split split;
  split.train = {0};
  split.val = {2};
  split.test = {1};
  write_bundle(tmp.path, g, &split, {{"name", "rt"}});
  const Bundle b = load_bundle(tmp.path);
  CHECK(b.graph.neighbors == g.neighbors);
  CHECK(b.graph.features == g.features);
  CHECK(b.graph.labels == g.labels);
  CHECK(b.graph.num_classes == 3);
  CHECK(b.split->train == split.train);
  CHECK(b.split->val == split.val);
}

TEST_CASE("load_bundle reports missing files and malformed lines") {
  TempDir tmp("bundle_errors");
  CHECK_THROWS_AS(load_bundle(tmp.path), ParseError);

  write_small_bundle(tmp.path);
  write(tmp.path / "edges.tsv", "0\t1\n1\tx\n");
  try {
    load_bundle(tmp.path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.file().find("edges.tsv") != std::string::npos);
  }

  write(tmp.path / "edges.tsv", "0\t9\n");
  CHECK_THROWS_AS(load_bundle(tmp.path), ParseError);

  write(tmp.path / "edges.tsv", "0\t1\n");
  write(tmp.path / "features.tsv", "1\t0\n0\n1\t1\n0.5\t0\n0\t0.5\n");
  try {
    load_bundle(tmp.path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("soft labels round-trip and validate") {
  TempDir tmp("soft_labels");
  const Graph g = build_graph(3, std::vector<Edge>{{0, 1}, {1, 2}}, Matrix::Zero(3, 1), {0, 1, 1}, 2);
  SoftLabelMatrix m;
  m.probs.resize(3, 2);
  m.probs << 1, 0, 0.25, 0.75, 0.4, 0.6;
  m.source = "builtin:gcn";
  write_soft_labels(m, tmp.path / "soft.tsv");
  const auto back = read_soft_labels(tmp.path / "soft.tsv", g);
  CHECK(back.source == "builtin:gcn");
  CHECK(back.probs.isApprox(m.probs, 1e-9));

  SUBCASE("foreign sources are tagged external") {
    write(tmp.path / "gat.tsv", "#source=GAT\t#classes=2\n1\t0\n0.5\t0.5\n0\t1\n");
    CHECK(read_soft_labels(tmp.path / "gat.tsv", g).source == "external:GAT");
  }
  SUBCASE("a row summing to 0.5 is rejected") {
    write(tmp.path / "bad.tsv", "#source=x\t#classes=2\n1\t0\n0.25\t0.25\n0\t1\n");
    CHECK_THROWS_AS(read_soft_labels(tmp.path / "bad.tsv", g), ParseError);
  }
  SUBCASE("class count must match the graph") {
    write(tmp.path / "bad.tsv", "#source=x\t#classes=3\n1\t0\t0\n0\t1\t0\n0\t0\t1\n");
    CHECK_THROWS_AS(read_soft_labels(tmp.path / "bad.tsv", g), ParseError);
  }
  SUBCASE("row count must match the graph") {
    write(tmp.path / "bad.tsv", "#source=x\t#classes=2\n1\t0\n");
    CHECK_THROWS_AS(read_soft_labels(tmp.path / "bad.tsv", g), ParseError);
  }
  SUBCASE("labeled rows are checked or clamped") {
    write(tmp.path / "soft2.tsv", "#source=x\t#classes=2\n0.9\t0.1\n0.5\t0.5\n0\t1\n");
    Split split;
    split.train = {0};
    split.test = {1, 2};
    CHECK_THROWS_AS(read_soft_labels(tmp.path / "soft2.tsv", g, {.split = &split}), ParseError);
    const auto clamped = read_soft_labels(tmp.path / "soft2.tsv", g, {.split = &split, .clamp = true});
    CHECK(clamped.probs(0, 0) == 1.0);
    CHECK(clamped.probs(0, 1) == 0.0);
  }
}

TEST_CASE("format_real keeps nine significant digits") {
  CHECK(format_real(0.5) == "0.5");
  CHECK(format_real(1.0 / 3.0) == "0.333333333");
  CHECK(format_real(0.0) == "0");
}
