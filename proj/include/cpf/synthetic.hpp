#pragma once

#include <cstdint>

#include "cpf/graph.hpp"

namespace cpf {

/// Parameters of a contextual stochastic block model with bag-of-words
/// style binary features.
struct SyntheticSpec {
  Index num_nodes = 1000;
  int num_classes = 4;
  Index feature_dim = 64;
  double avg_degree = 4.0;
  double homophily = 0.8;        // probability an edge stays inside a class
  double feature_density = 0.05; // background probability of a feature being on
  double feature_signal = 0.25;  // extra on-probability for a class's own words
  std::uint64_t seed = 0;
};

/// Connected graph: a random spanning tree plus extra edges up to the
/// requested average degree.
Graph make_synthetic_graph(const SyntheticSpec& spec);

}  // namespace cpf
