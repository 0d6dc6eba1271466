#include "cpf/graph.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <string>

#include "cpf/rng.hpp"

namespace cpf {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw std::invalid_argument(what); }

}  // namespace

bool Graph::has_edge(Index u, Index v) const {
  if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes) return false;
  auto row = neighbors_of(u);
  return std::binary_search(row.begin(), row.end(), v);
}

std::vector<Edge> Graph::edge_list() const {
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(num_edges()));
  for (Index u = 0; u < num_nodes; ++u) {
    for (Index v : neighbors_of(u)) {
      if (u < v) edges.emplace_back(u, v);
    }
  }
  return edges;
}

void Graph::validate() const {
  if (num_nodes < 0) invalid("negative node count");
  if (static_cast<Index>(offsets.size()) != num_nodes + 1) invalid("csr offsets have wrong length");
  if (offsets.front() != 0 || offsets.back() != static_cast<Index>(neighbors.size())) {
    invalid("csr offsets do not span the neighbor array");
  }
  if (neighbors.size() % 2 != 0) invalid("odd neighbor count: adjacency is not symmetric");
  for (Index v = 0; v < num_nodes; ++v) {
    if (offsets[v + 1] < offsets[v]) invalid("csr offsets are not monotone");
    auto row = neighbors_of(v);
    for (std::size_t i = 0; i < row.size(); ++i) {
      const Index u = row[i];
      if (u < 0 || u >= num_nodes) invalid("neighbor index out of range at node " + std::to_string(v));
      if (u == v) invalid("self-loop at node " + std::to_string(v));
      if (i > 0 && row[i - 1] >= u) invalid("unsorted or duplicate neighbors at node " + std::to_string(v));
      if (!has_edge(u, v)) invalid("asymmetric edge " + std::to_string(v) + "->" + std::to_string(u));
    }
  }
  if (features.rows() != num_nodes) invalid("feature row count does not match node count");
  if (static_cast<Index>(labels.size()) != num_nodes) invalid("label count does not match node count");
  for (Index v = 0; v < num_nodes; ++v) {
    if (labels[v] < 0 || labels[v] >= num_classes) {
      invalid("label of node " + std::to_string(v) + " outside [0, num_classes)");
    }
  }
  if (static_cast<Index>(original_ids.size()) != num_nodes) invalid("original id table has wrong length");
}

bool Graph::is_connected() const {
  if (num_nodes == 0) return true;
  const auto comp = connected_components(*this);
  return std::all_of(comp.begin(), comp.end(), [](Index c) { return c == 0; });
}

Graph build_graph(Index num_nodes, std::span<const Edge> edges, Matrix features,
                  std::vector<int> labels, int num_classes) {
  if (num_nodes < 0) invalid("negative node count");
  std::vector<Edge> directed;
  directed.reserve(edges.size() * 2);
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes) {
      invalid("edge (" + std::to_string(u) + ", " + std::to_string(v) + ") out of range");
    }
    if (u == v) continue;
    directed.emplace_back(u, v);
    directed.emplace_back(v, u);
  }
  std::sort(directed.begin(), directed.end());
  directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

  Graph g;
  g.num_nodes = num_nodes;
  g.offsets.assign(static_cast<std::size_t>(num_nodes) + 1, 0);
  g.neighbors.reserve(directed.size());
  for (const auto& [u, v] : directed) {
    ++g.offsets[u + 1];
    g.neighbors.push_back(v);
  }
  std::partial_sum(g.offsets.begin(), g.offsets.end(), g.offsets.begin());
  g.features = std::move(features);
  g.labels = std::move(labels);
  if (num_classes < 0) {
    num_classes = g.labels.empty() ? 0 : *std::max_element(g.labels.begin(), g.labels.end()) + 1;
  }
  g.num_classes = num_classes;
  g.original_ids.resize(static_cast<std::size_t>(num_nodes));
  std::iota(g.original_ids.begin(), g.original_ids.end(), Index{0});
  g.validate();
  return g;
}

std::vector<Index> connected_components(const Graph& g) {
  std::vector<Index> comp(static_cast<std::size_t>(g.num_nodes), -1);
  Index next = 0;
  std::vector<Index> stack;
  for (Index s = 0; s < g.num_nodes; ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const Index v = stack.back();
      stack.pop_back();
      for (Index u : g.neighbors_of(v)) {
        if (comp[u] < 0) {
          comp[u] = next;
          stack.push_back(u);
        }
      }
    }
    ++next;
  }
  return comp;
}

Graph induced_subgraph(const Graph& g, std::vector<Index> nodes) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  std::vector<Index> remap(static_cast<std::size_t>(g.num_nodes), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) remap[nodes[i]] = static_cast<Index>(i);

  const auto n = static_cast<Index>(nodes.size());
  Graph sub;
  sub.num_nodes = n;
  sub.num_classes = g.num_classes;
  sub.offsets.assign(static_cast<std::size_t>(n) + 1, 0);
  sub.features.resize(n, g.features.cols());
  sub.labels.resize(static_cast<std::size_t>(n));
  sub.original_ids.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const Index v = nodes[i];
    // Neighbors stay sorted: remap is monotone on the kept nodes.
    for (Index u : g.neighbors_of(v)) {
      if (remap[u] >= 0) sub.neighbors.push_back(remap[u]);
    }
    sub.offsets[i + 1] = static_cast<Index>(sub.neighbors.size());
    sub.features.row(i) = g.features.row(v);
    sub.labels[i] = g.labels[v];
    sub.original_ids[i] = g.original_ids[v];
  }
  return sub;
}

Graph largest_connected_component(const Graph& g) {
  if (g.num_nodes == 0) return g;
  const auto comp = connected_components(g);
  // Component ids follow the smallest member, so the first id reaching the
  // maximum size is the one with the smallest minimum index.
  const Index count = *std::max_element(comp.begin(), comp.end()) + 1;
  if (count == 1) return g;
  std::vector<Index> sizes(static_cast<std::size_t>(count), 0);
  for (Index c : comp) ++sizes[c];
  const Index best = std::max_element(sizes.begin(), sizes.end()) - sizes.begin();
  std::vector<Index> keep;
  keep.reserve(static_cast<std::size_t>(sizes[best]));
  for (Index v = 0; v < g.num_nodes; ++v) {
    if (comp[v] == best) keep.push_back(v);
  }
  return induced_subgraph(g, std::move(keep));
}

std::vector<Index> Split::unlabeled() const {
  std::vector<Index> out;
  out.reserve(val.size() + test.size());
  out.insert(out.end(), val.begin(), val.end());
  out.insert(out.end(), test.begin(), test.end());
  std::sort(out.begin(), out.end());
  return out;
}

void Split::validate(Index num_nodes) const {
  std::vector<char> seen(static_cast<std::size_t>(num_nodes), 0);
  auto mark = [&](const std::vector<Index>& set, const char* name) {
    for (Index v : set) {
      if (v < 0 || v >= num_nodes) invalid(std::string(name) + " node " + std::to_string(v) + " out of range");
      if (seen[v]) invalid("node " + std::to_string(v) + " appears in more than one split set");
      seen[v] = 1;
    }
  };
  mark(train, "train");
  mark(val, "val");
  mark(test, "test");
  for (Index v = 0; v < num_nodes; ++v) {
    if (!seen[v]) invalid("node " + std::to_string(v) + " is not assigned to any split set");
  }
}

std::vector<std::vector<Index>> nodes_by_class(const Graph& g) {
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(g.num_classes));
  for (Index v = 0; v < g.num_nodes; ++v) members[g.labels[v]].push_back(v);
  return members;
}

Split make_split(const Graph& g, const SplitRequest& request) {
  if (request.labeled_per_class < 1) invalid("labeled_per_class must be at least 1");
  if (request.val_count < 0) invalid("validation count must be nonnegative");
  const Index val_per_class = request.val_mode == ValidationMode::per_class ? request.val_count : 0;

  auto members = nodes_by_class(g);
  for (std::size_t c = 0; c < members.size(); ++c) {
    const auto have = static_cast<Index>(members[c].size());
    if (have < request.labeled_per_class + val_per_class) {
      invalid("class " + std::to_string(c) + " has " + std::to_string(have) + " nodes, need " +
              std::to_string(request.labeled_per_class + val_per_class));
    }
  }

  Rng rng(request.seed);
  Split split;
  split.seed = request.seed;
  std::vector<Index> rest;
  for (auto& pool : members) {
    rng.shuffle(pool);
    auto it = pool.begin();
    split.train.insert(split.train.end(), it, it + request.labeled_per_class);
    it += request.labeled_per_class;
    split.val.insert(split.val.end(), it, it + val_per_class);
    it += val_per_class;
    rest.insert(rest.end(), it, pool.end());
  }
  if (request.val_mode == ValidationMode::total) {
    if (static_cast<Index>(rest.size()) < request.val_count) invalid("not enough nodes for the validation set");
    std::sort(rest.begin(), rest.end());
    rng.shuffle(rest);
    split.val.assign(rest.begin(), rest.begin() + request.val_count);
    rest.erase(rest.begin(), rest.begin() + request.val_count);
  }
  split.test = std::move(rest);
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

}  // namespace cpf
