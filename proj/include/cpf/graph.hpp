#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cpf/types.hpp"

namespace cpf {

using Edge = std::pair<Index, Index>;

/// Undirected node-classification graph in CSR form.
///
/// Adjacency is symmetric, free of self-loops and duplicates. `original_ids`
/// maps every compacted node index back to the index it had in the input
/// (identity unless the graph came out of largest_connected_component).
/// Treat as immutable once built.
struct Graph {
  Index num_nodes = 0;
  std::vector<Index> offsets;    // num_nodes + 1
  std::vector<Index> neighbors;  // 2 * num_edges, sorted per node
  Matrix features;               // num_nodes x d, raw units
  std::vector<int> labels;
  int num_classes = 0;
  std::vector<Index> original_ids;

  Index num_edges() const { return static_cast<Index>(neighbors.size()) / 2; }
  Index feature_dim() const { return features.cols(); }
  Index degree(Index v) const { return offsets[v + 1] - offsets[v]; }

  std::span<const Index> neighbors_of(Index v) const {
    return {neighbors.data() + offsets[v], static_cast<std::size_t>(degree(v))};
  }

  bool has_edge(Index u, Index v) const;

  /// Sorted undirected edge list with u < v.
  std::vector<Edge> edge_list() const;

  /// Checks every structural invariant except connectivity; throws
  /// std::invalid_argument describing the first violation.
  void validate() const;

  bool is_connected() const;
};

/// Builds a graph from an arbitrary edge list: both directions are
/// materialized, self-loops and duplicates are dropped.
Graph build_graph(Index num_nodes, std::span<const Edge> edges, Matrix features,
                  std::vector<int> labels, int num_classes = -1);

/// Component id per node (ids assigned in order of smallest member).
std::vector<Index> connected_components(const Graph& g);

/// Induced subgraph on the largest component, indices compacted in the
/// original order. Ties go to the component with the smallest original index.
Graph largest_connected_component(const Graph& g);

/// Induced subgraph on `nodes` (need not be connected); ids are remapped to
/// positions in the sorted node list.
Graph induced_subgraph(const Graph& g, std::vector<Index> nodes);

/// Train / validation / test partition of the node set.
struct Split {
  std::vector<Index> train;  // labeled set V_L
  std::vector<Index> val;
  std::vector<Index> test;
  std::uint64_t seed = 0;

  /// V_U: every node not in train (val and test), sorted.
  std::vector<Index> unlabeled() const;

  /// Throws std::invalid_argument unless the three sets are disjoint, in
  /// range and cover all `num_nodes` nodes.
  void validate(Index num_nodes) const;
};

enum class ValidationMode {
  per_class,  // val_count nodes from every class
  total,      // val_count nodes overall, drawn from the non-train pool
};

struct SplitRequest {
  Index labeled_per_class = 20;
  Index val_count = 30;
  ValidationMode val_mode = ValidationMode::per_class;
  std::uint64_t seed = 0;
};

/// Class-stratified random split. Throws std::invalid_argument when a class
/// has too few members or labeled_per_class < 1.
Split make_split(const Graph& g, const SplitRequest& request);

/// Per-class member lists, each sorted.
std::vector<std::vector<Index>> nodes_by_class(const Graph& g);

}  // namespace cpf
