#include "cpf/bundle.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_map>

#include "tsv.hpp"

namespace cpf {

ParseError::ParseError(std::string file, std::size_t line, const std::string& message)
    : std::runtime_error(line > 0 ? file + ":" + std::to_string(line) + ": " + message
                                  : file + ": " + message),
      file_(std::move(file)),
      line_(line) {}

std::string format_real(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

std::optional<std::string> meta_value(const MetaTable& meta, const std::string& key) {
  for (const auto& [k, v] : meta) {
    if (k == key) return v;
  }
  return std::nullopt;
}

namespace {

Matrix read_features(const std::filesystem::path& path) {
  const std::string content = tsv::read_file(path);
  const auto rows = tsv::lines(content);
  const std::string name = path.string();
  if (rows.empty()) throw ParseError(name, 0, "no feature rows");
  const auto dim = static_cast<Index>(tsv::fields(rows.front().text).size());
  Matrix x(static_cast<Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto cells = tsv::fields(rows[i].text);
    if (static_cast<Index>(cells.size()) != dim) {
      throw ParseError(name, rows[i].number,
                       "feature dimension mismatch: expected " + std::to_string(dim) + ", got " +
                           std::to_string(cells.size()));
    }
    for (Index j = 0; j < dim; ++j) {
      double value = 0.0;
      if (!tsv::parse_real(cells[j], value)) {
        throw ParseError(name, rows[i].number, "malformed number '" + std::string(cells[j]) + "'");
      }
      x(static_cast<Index>(i), j) = value;
    }
  }
  return x;
}

std::vector<int> read_labels(const std::filesystem::path& path) {
  const std::string content = tsv::read_file(path);
  std::vector<int> labels;
  for (const auto& line : tsv::lines(content)) {
    int label = 0;
    if (!tsv::parse_int(line.text, label) || label < 0) {
      throw ParseError(path.string(), line.number, "malformed label '" + std::string(line.text) + "'");
    }
    labels.push_back(label);
  }
  return labels;
}

std::vector<Edge> read_edges(const std::filesystem::path& path, Index num_nodes) {
  const std::string content = tsv::read_file(path);
  std::vector<Edge> edges;
  for (const auto& line : tsv::lines(content)) {
    const auto cells = tsv::fields(line.text);
    Index u = 0;
    Index v = 0;
    if (cells.size() != 2 || !tsv::parse_int(cells[0], u) || !tsv::parse_int(cells[1], v)) {
      throw ParseError(path.string(), line.number, "malformed edge line");
    }
    if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes) {
      throw ParseError(path.string(), line.number, "node index out of range");
    }
    edges.emplace_back(u, v);
  }
  return edges;
}

MetaTable read_meta(const std::filesystem::path& path) {
  MetaTable meta;
  const std::string content = tsv::read_file(path);
  for (const auto& line : tsv::lines(content)) {
    const auto cells = tsv::fields(line.text);
    if (cells.size() != 2) throw ParseError(path.string(), line.number, "expected key\\tvalue");
    meta.emplace_back(std::string(cells[0]), std::string(cells[1]));
  }
  return meta;
}

Split read_split(const std::filesystem::path& path, const Graph& g, Index raw_num_nodes) {
  std::vector<Index> to_compact(static_cast<std::size_t>(raw_num_nodes), -1);
  for (Index v = 0; v < g.num_nodes; ++v) to_compact[g.original_ids[v]] = v;

  Split split;
  const std::string content = tsv::read_file(path);
  for (const auto& line : tsv::lines(content)) {
    const auto cells = tsv::fields(line.text);
    Index node = 0;
    if (cells.size() != 2 || !tsv::parse_int(cells[0], node)) {
      throw ParseError(path.string(), line.number, "expected node_index\\t{train|val|test}");
    }
    if (node < 0 || node >= raw_num_nodes) throw ParseError(path.string(), line.number, "node index out of range");
    const Index v = to_compact[node];
    if (v < 0) continue;  // outside the kept component
    if (cells[1] == "train") {
      split.train.push_back(v);
    } else if (cells[1] == "val") {
      split.val.push_back(v);
    } else if (cells[1] == "test") {
      split.test.push_back(v);
    } else {
      throw ParseError(path.string(), line.number, "unknown split role '" + std::string(cells[1]) + "'");
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  try {
    split.validate(g.num_nodes);
  } catch (const std::invalid_argument& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  return split;
}

}  // namespace

Bundle load_bundle(const std::filesystem::path& dir) {
  for (const char* required : {"edges.tsv", "features.tsv", "labels.tsv"}) {
    if (!std::filesystem::exists(dir / required)) {
      throw ParseError((dir / required).string(), 0, "missing bundle file");
    }
  }
  Bundle bundle;
  if (std::filesystem::exists(dir / "meta.tsv")) bundle.meta = read_meta(dir / "meta.tsv");

  Matrix features = read_features(dir / "features.tsv");
  std::vector<int> labels = read_labels(dir / "labels.tsv");
  const Index n = features.rows();
  if (static_cast<Index>(labels.size()) != n) {
    throw ParseError((dir / "labels.tsv").string(), 0,
                     "label count " + std::to_string(labels.size()) + " does not match feature rows " +
                         std::to_string(n));
  }
  const auto edges = read_edges(dir / "edges.tsv", n);

  int num_classes = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  if (auto declared = meta_value(bundle.meta, "num_classes")) {
    int value = 0;
    if (!tsv::parse_int(std::string_view(*declared), value) || value < num_classes) {
      throw ParseError((dir / "meta.tsv").string(), 0, "num_classes inconsistent with labels");
    }
    num_classes = value;
  }

  Graph raw = build_graph(n, edges, std::move(features), std::move(labels), num_classes);
  bundle.raw_num_nodes = raw.num_nodes;
  bundle.raw_num_edges = raw.num_edges();
  bundle.graph = largest_connected_component(raw);
  if (std::filesystem::exists(dir / "split.tsv")) {
    bundle.split = read_split(dir / "split.tsv", bundle.graph, n);
  }
  return bundle;
}

void write_bundle(const std::filesystem::path& dir, const Graph& g, const Split* split, const MetaTable& meta) {
  std::filesystem::create_directories(dir);

  std::string edges;
  for (const auto& [u, v] : g.edge_list()) {
    edges += std::to_string(u);
    edges += '\t';
    edges += std::to_string(v);
    edges += '\n';
  }
  tsv::write_file(dir / "edges.tsv", edges);

  std::string features;
  for (Index v = 0; v < g.num_nodes; ++v) {
    for (Index j = 0; j < g.feature_dim(); ++j) {
      if (j > 0) features += '\t';
      features += format_real(g.features(v, j));
    }
    features += '\n';
  }
  tsv::write_file(dir / "features.tsv", features);

  std::string labels;
  for (int label : g.labels) {
    labels += std::to_string(label);
    labels += '\n';
  }
  tsv::write_file(dir / "labels.tsv", labels);

  if (split != nullptr) {
    std::vector<const char*> role(static_cast<std::size_t>(g.num_nodes), nullptr);
    for (Index v : split->train) role[v] = "train";
    for (Index v : split->val) role[v] = "val";
    for (Index v : split->test) role[v] = "test";
    std::string text;
    for (Index v = 0; v < g.num_nodes; ++v) {
      if (role[v] == nullptr) continue;
      text += std::to_string(v);
      text += '\t';
      text += role[v];
      text += '\n';
    }
    tsv::write_file(dir / "split.tsv", text);
  }

  std::string meta_text = "num_classes\t" + std::to_string(g.num_classes) + "\n";
  for (const auto& [key, value] : meta) {
    if (key == "num_classes") continue;
    meta_text += key + "\t" + value + "\n";
  }
  tsv::write_file(dir / "meta.tsv", meta_text);
}

}  // namespace cpf
