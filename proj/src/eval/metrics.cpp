#include "cpf/metrics.hpp"

#include <stdexcept>

namespace cpf {

std::vector<int> argmax_rows(const Matrix& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()), 0);
  for (Index r = 0; r < scores.rows(); ++r) {
    int best = 0;
    for (Index c = 1; c < scores.cols(); ++c) {
      if (scores(r, c) > scores(r, best)) best = static_cast<int>(c);
    }
    out[r] = best;
  }
  return out;
}

double accuracy(const Matrix& scores, const Graph& g, std::span<const Index> nodes) {
  if (nodes.empty()) throw std::invalid_argument("accuracy over an empty node set");
  if (scores.rows() != g.num_nodes) throw std::invalid_argument("accuracy: score rows do not match the graph");
  Index hits = 0;
  for (Index v : nodes) {
    int best = 0;
    for (Index c = 1; c < scores.cols(); ++c) {
      if (scores(v, c) > scores(v, best)) best = static_cast<int>(c);
    }
    if (best == g.labels[v]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(nodes.size());
}

double relative_improvement(double student_acc, double teacher_acc) {
  if (teacher_acc <= 0.0) throw std::invalid_argument("relative improvement needs a positive teacher accuracy");
  return student_acc / teacher_acc - 1.0;
}

}  // namespace cpf
