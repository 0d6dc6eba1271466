#include "cpf/synthetic.hpp"

#include <stdexcept>

#include "cpf/rng.hpp"

namespace cpf {

Graph make_synthetic_graph(const SyntheticSpec& spec) {
  if (spec.num_nodes < 1 || spec.num_classes < 1 || spec.feature_dim < 1) {
    throw std::invalid_argument("synthetic graph needs positive sizes");
  }
  Rng label_rng = Rng::stream(spec.seed, "synthetic/labels");
  Rng edge_rng = Rng::stream(spec.seed, "synthetic/edges");
  Rng feature_rng = Rng::stream(spec.seed, "synthetic/features");

  const Index n = spec.num_nodes;
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Index v = 0; v < n; ++v) {
    labels[v] = static_cast<int>(v < spec.num_classes ? v : label_rng.below(spec.num_classes));
  }
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(spec.num_classes));
  for (Index v = 0; v < n; ++v) members[labels[v]].push_back(v);

  auto pick_partner = [&](Index v, bool earlier_only) -> Index {
    const bool same = edge_rng.uniform() < spec.homophily;
    for (int attempt = 0; attempt < 32; ++attempt) {
      Index u = 0;
      if (same) {
        const auto& pool = members[labels[v]];
        u = pool[edge_rng.below(pool.size())];
      } else {
        u = static_cast<Index>(edge_rng.below(static_cast<std::uint64_t>(n)));
      }
      if (u == v || (earlier_only && u > v)) continue;
      if (!same && labels[u] == labels[v] && spec.num_classes > 1) continue;
      return u;
    }
    return earlier_only ? static_cast<Index>(edge_rng.below(static_cast<std::uint64_t>(v))) : -1;
  };

  std::vector<Edge> edges;
  const auto target = static_cast<std::size_t>(spec.avg_degree * static_cast<double>(n) / 2.0);
  edges.reserve(std::max<std::size_t>(target, static_cast<std::size_t>(n)));
  for (Index v = 1; v < n; ++v) edges.emplace_back(v, pick_partner(v, true));
  while (edges.size() < target) {
    const auto v = static_cast<Index>(edge_rng.below(static_cast<std::uint64_t>(n)));
    const Index u = pick_partner(v, false);
    if (u >= 0) edges.emplace_back(v, u);
  }

  // Each class owns a contiguous block of "topic" features.
  const Index block = std::max<Index>(1, spec.feature_dim / spec.num_classes);
  Matrix features = Matrix::Zero(n, spec.feature_dim);
  for (Index v = 0; v < n; ++v) {
    const Index lo = (labels[v] * block) % spec.feature_dim;
    for (Index j = 0; j < spec.feature_dim; ++j) {
      double p = spec.feature_density;
      if (j >= lo && j < lo + block) p += spec.feature_signal;
      if (feature_rng.uniform() < p) features(v, j) = 1.0;
    }
  }
  return build_graph(n, edges, std::move(features), std::move(labels), spec.num_classes);
}

}  // namespace cpf
